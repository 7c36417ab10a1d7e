// Built with -ffast-math so that exp/log vectorize through libmvec. No value produced here
// is ever infinite or NaN: the log-forward is clamped at the absorbing floor and the
// per-step increment -a^2/2 + a z is bounded above by z^2/2.
#include "mc_kernel.hpp"

#include <cmath>
#include <memory>

#include "sabrdnn/rng.hpp"

namespace sabrdnn::detail {

namespace {

struct Scratch {
    alignas(64) std::uint32_t bits[4][kBlock];
    alignas(64) double z[4][kBlock];
    alignas(64) double log_x[kBlock];
    alignas(64) double log_sig[kBlock];
    alignas(64) double x[kBlock];
};

void draw_bits(Scratch& s, std::uint32_t pair, std::uint64_t first_path, std::uint32_t key0, std::uint32_t key1) {
    const std::uint32_t lo = std::uint32_t(first_path);
    const std::uint32_t hi = std::uint32_t(first_path >> 32);
#pragma omp simd
    for (int i = 0; i < kBlock; ++i) {
        std::uint32_t c0 = pair, c1 = lo + std::uint32_t(i), c2 = hi, c3 = 0;
        std::uint32_t k0 = key0, k1 = key1;
        for (int r = 0; r < 10; ++r) {
            Philox4x32::round(c0, c1, c2, c3, k0, k1);
            k0 += Philox4x32::kWeyl0;
            k1 += Philox4x32::kWeyl1;
        }
        s.bits[0][i] = c0;
        s.bits[1][i] = c1;
        s.bits[2][i] = c2;
        s.bits[3][i] = c3;
    }
}

void to_normals(Scratch& s) {
    for (int k = 0; k < 4; ++k) {
        const std::uint32_t* b = s.bits[k];
        double* z = s.z[k];
#pragma omp simd
        for (int i = 0; i < kBlock; ++i) z[i] = inverse_norm_cdf(u01_open(b[i]));
    }
}

void step(Scratch& s, const double* z_vol, const double* z_ind, const KernelPlan& plan, std::size_t j) {
    const double dt = plan.dt[j], sdt = plan.sdt[j];
    const double vd = plan.vol_drift[j], vs = plan.vol_diff[j];
    const double bm1 = plan.beta_m1, rho = plan.rho, rho_hat = plan.rho_hat, lf = plan.log_floor;
    double* lx = s.log_x;
    double* ls = s.log_sig;
#pragma omp simd
    for (int i = 0; i < kBlock; ++i) {
        const double l = lx[i];
        const double sv = std::exp(ls[i] + bm1 * l);
        const double ln = l - 0.5 * sv * sv * dt + sv * sdt * (rho * z_vol[i] + rho_hat * z_ind[i]);
        ls[i] += vd + vs * z_vol[i];
        lx[i] = (l <= lf || ln <= lf) ? lf : ln;
    }
}

void accumulate(Scratch& s, const KernelPlan& plan, int f, int n, double* sums) {
    const double lf = plan.log_floor, fl = plan.floor;
    double* x = s.x;
    const double* lx = s.log_x;
#pragma omp simd
    for (int i = 0; i < kBlock; ++i) x[i] = lx[i] <= lf ? fl : std::exp(lx[i]);

    double* out = sums + plan.sums_begin[f];
    double sx = 0.0, sxx = 0.0;
#pragma omp simd reduction(+ : sx, sxx)
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sxx += x[i] * x[i];
    }
    out[0] = sx;
    out[1] = sxx;

    const std::size_t k0 = plan.strike_begin[f], k1 = plan.strike_begin[f + 1];
    for (std::size_t k = k0; k < k1; ++k) {
        const double K = plan.strikes[k];
        double c = 0.0, cc = 0.0, p = 0.0, pp = 0.0;
#pragma omp simd reduction(+ : c, cc, p, pp)
        for (int i = 0; i < n; ++i) {
            const double cap = std::fmax(x[i] - K, 0.0);
            const double flo = std::fmax(K - x[i], 0.0);
            c += cap;
            cc += cap * cap;
            p += flo;
            pp += flo * flo;
        }
        double* o = out + 2 + 4 * (k - k0);
        o[0] = c;
        o[1] = cc;
        o[2] = p;
        o[3] = pp;
    }
}

}  // namespace

void simulate_block(const KernelPlan& plan, std::uint64_t first_path, int n, double* sums) {
    auto s = std::make_unique<Scratch>();
    for (int i = 0; i < kBlock; ++i) {
        s->log_x[i] = 0.0;
        s->log_sig[i] = plan.log_alpha_hat;
    }
    const std::size_t n_steps = plan.dt.size();
    for (std::size_t j = 0; j < n_steps; ++j) {
        const int lane = int(j & 1u) * 2;
        if (lane == 0) {
            draw_bits(*s, std::uint32_t(j >> 1), first_path, plan.key0, plan.key1);
            to_normals(*s);
        }
        step(*s, s->z[lane], s->z[lane + 1], plan, j);
        if (plan.fixing_at[j] >= 0) accumulate(*s, plan, plan.fixing_at[j], n, sums);
    }
}

}  // namespace sabrdnn::detail
