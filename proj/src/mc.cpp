#include "sabrdnn/mc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <omp.h>

#include "mc_kernel.hpp"
#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/rng.hpp"

namespace sabrdnn {

namespace {

constexpr double kDaysPerYear = 365.0;

struct Kahan {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

void check_surface_inputs(const std::vector<double>& fixing_times, const std::vector<std::vector<double>>& strikes) {
    if (fixing_times.empty()) fail(ErrorKind::Config, "no fixing times given");
    if (strikes.size() != fixing_times.size())
        fail(ErrorKind::Config, "one strike list per fixing time is required");
    for (std::size_t i = 0; i < fixing_times.size(); ++i) {
        if (!(fixing_times[i] > 0.0)) fail(ErrorKind::Config, "fixing times must be positive");
        if (i > 0 && !(fixing_times[i] > fixing_times[i - 1]))
            fail(ErrorKind::Config, "fixing times must be strictly ascending");
        for (double k : strikes[i])
            if (!(k > 0.0)) fail(ErrorKind::Config, "strikes must be positive");
    }
}

McPriceResult finish(double T, double k_hat, double n, double c, double cc, double p, double pp) {
    McPriceResult r;
    r.T = T;
    r.k_hat = k_hat;
    r.caplet = c / n;
    r.floorlet = p / n;
    r.caplet_var = std::max((cc - c * c / n) / (n - 1.0), 0.0);
    r.floorlet_var = std::max((pp - p * p / n) / (n - 1.0), 0.0);
    r.caplet_err3 = 3.0 * std::sqrt(r.caplet_var / n);
    r.floorlet_err3 = 3.0 * std::sqrt(r.floorlet_var / n);
    return r;
}

ForwardCheck finish_forward(double T, double n, double sx, double sxx) {
    ForwardCheck f;
    f.T = T;
    f.mean = sx / n;
    const double var = std::max((sxx - sx * sx / n) / (n - 1.0), 0.0);
    f.std_error = std::sqrt(var / n);
    return f;
}

// Path-by-path driver shared by the scalar references. `Step` advances a McState with the given normals.
template <class Init, class Step, class Payoff>
McSurface reference_driver(const std::vector<double>& fixing_times, const std::vector<std::vector<double>>& strikes,
                           const McConfig& cfg, Init init, Step advance, Payoff value) {
    const TimeGrid grid = make_time_grid(fixing_times, cfg.dt_days);
    const std::size_t nf = fixing_times.size();
    std::vector<int> fixing_at(grid.t.size(), -1);
    for (std::size_t f = 0; f < nf; ++f) fixing_at[grid.fixing[f]] = int(f);

    std::vector<std::array<Kahan, 2>> fwd(nf);
    std::vector<std::vector<std::array<Kahan, 4>>> acc(nf);
    for (std::size_t f = 0; f < nf; ++f) acc[f].resize(strikes[f].size());

    const std::uint32_t key0 = std::uint32_t(cfg.seed), key1 = std::uint32_t(cfg.seed >> 32);
    const std::uint64_t B = detail::kBlock;
    for (std::uint64_t first = 0; first < cfg.n_paths; first += B) {
        const std::size_t n = std::size_t(std::min<std::uint64_t>(B, cfg.n_paths - first));
        McState st = init(n);
        std::vector<double> zv(n), zi(n), zv2(n), zi2(n);
        double t_prev = 0.0;
        for (std::size_t j = 0; j < grid.t.size(); ++j) {
            if ((j & 1u) == 0) {
                for (std::size_t i = 0; i < n; ++i) {
                    const std::uint64_t path = first + i;
                    const auto o = Philox4x32::block(
                        {std::uint32_t(j >> 1), std::uint32_t(path), std::uint32_t(path >> 32), 0u}, {key0, key1});
                    zv[i] = inverse_norm_cdf(u01_open(o[0]));
                    zi[i] = inverse_norm_cdf(u01_open(o[1]));
                    zv2[i] = inverse_norm_cdf(u01_open(o[2]));
                    zi2[i] = inverse_norm_cdf(u01_open(o[3]));
                }
            }
            const double dt = grid.t[j] - t_prev;
            t_prev = grid.t[j];
            if ((j & 1u) == 0)
                advance(st, dt, zv, zi);
            else
                advance(st, dt, zv2, zi2);
            const int f = fixing_at[j];
            if (f < 0) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const double x = value(st.x[i]);
                fwd[f][0].add(x);
                fwd[f][1].add(x * x);
                for (std::size_t k = 0; k < strikes[f].size(); ++k) {
                    const double cap = std::max(x - strikes[f][k], 0.0);
                    const double flo = std::max(strikes[f][k] - x, 0.0);
                    acc[f][k][0].add(cap);
                    acc[f][k][1].add(cap * cap);
                    acc[f][k][2].add(flo);
                    acc[f][k][3].add(flo * flo);
                }
            }
        }
    }

    McSurface out;
    out.n_paths = cfg.n_paths;
    out.n_steps = grid.t.size();
    const double n = double(cfg.n_paths);
    for (std::size_t f = 0; f < nf; ++f) {
        out.forward.push_back(finish_forward(fixing_times[f], n, fwd[f][0].sum, fwd[f][1].sum));
        std::vector<McPriceResult> row;
        for (std::size_t k = 0; k < strikes[f].size(); ++k) {
            const auto& a = acc[f][k];
            row.push_back(finish(fixing_times[f], strikes[f][k], n, a[0].sum, a[1].sum, a[2].sum, a[3].sum));
        }
        out.prices.push_back(std::move(row));
    }
    return out;
}

}  // namespace

void validate(const McConfig& cfg) {
    if (cfg.n_paths < 2) fail(ErrorKind::Config, "at least two paths are required");
    if (!(cfg.dt_days > 0.0)) fail(ErrorKind::Config, "time step must be positive");
    if (!(cfg.absorption_floor > 0.0) || !(cfg.absorption_floor < 1.0))
        fail(ErrorKind::Config, "absorption floor must lie in (0,1)");
    if (cfg.workers < 0) fail(ErrorKind::Config, "worker count must be non-negative");
}

TimeGrid make_time_grid(const std::vector<double>& fixing_times, double dt_days) {
    if (!(dt_days > 0.0)) fail(ErrorKind::Config, "time step must be positive");
    if (fixing_times.empty()) fail(ErrorKind::Config, "no fixing times given");
    for (std::size_t i = 0; i < fixing_times.size(); ++i) {
        if (!(fixing_times[i] > 0.0)) fail(ErrorKind::Config, "fixing times must be positive");
        if (i > 0 && !(fixing_times[i] > fixing_times[i - 1]))
            fail(ErrorKind::Config, "fixing times must be strictly ascending");
    }
    const double dt = dt_days / kDaysPerYear;
    const double t_last = fixing_times.back();
    const auto n = std::size_t(std::ceil(t_last / dt - 1e-9));
    constexpr double kMerge = 1e-10;

    TimeGrid g;
    std::size_t f = 0;
    for (std::size_t k = 1; k < n; ++k) {
        const double tk = double(k) * dt;
        while (f < fixing_times.size() && fixing_times[f] <= tk + kMerge) {
            g.fixing.push_back(g.t.size());
            g.t.push_back(fixing_times[f]);
            ++f;
        }
        if (g.t.empty() || tk > g.t.back() + kMerge) g.t.push_back(tk);
    }
    for (; f < fixing_times.size(); ++f) {
        g.fixing.push_back(g.t.size());
        g.t.push_back(fixing_times[f]);
    }
    return g;
}

McSurface price_surface(const ScaledSabrParams& p, const std::vector<double>& fixing_times,
                        const std::vector<std::vector<double>>& moneyness, const McConfig& cfg) {
    validate(p);
    validate(cfg);
    check_surface_inputs(fixing_times, moneyness);
    const TimeGrid grid = make_time_grid(fixing_times, cfg.dt_days);
    const std::size_t nf = fixing_times.size();

    detail::KernelPlan plan;
    double t_prev = 0.0;
    for (double t : grid.t) {
        const double dt = t - t_prev;
        t_prev = t;
        plan.dt.push_back(dt);
        plan.sdt.push_back(std::sqrt(dt));
        plan.vol_drift.push_back(-0.5 * p.nu * p.nu * dt);
        plan.vol_diff.push_back(p.nu * std::sqrt(dt));
    }
    plan.fixing_at.assign(grid.t.size(), -1);
    for (std::size_t f = 0; f < nf; ++f) plan.fixing_at[grid.fixing[f]] = int(f);
    plan.strike_begin.push_back(0);
    for (std::size_t f = 0; f < nf; ++f) {
        plan.sums_begin.push_back(plan.sums_per_block);
        plan.sums_per_block += 2 + 4 * moneyness[f].size();
        plan.strikes.insert(plan.strikes.end(), moneyness[f].begin(), moneyness[f].end());
        plan.strike_begin.push_back(plan.strikes.size());
    }
    plan.log_alpha_hat = std::log(p.alpha_hat);
    plan.beta_m1 = p.beta - 1.0;
    plan.rho = p.rho;
    plan.rho_hat = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    plan.floor = cfg.absorption_floor;
    plan.log_floor = std::log(cfg.absorption_floor);
    plan.key0 = std::uint32_t(cfg.seed);
    plan.key1 = std::uint32_t(cfg.seed >> 32);

    const std::uint64_t B = detail::kBlock;
    const std::uint64_t n_blocks = (cfg.n_paths + B - 1) / B;
    const std::size_t width = plan.sums_per_block;
    std::vector<double> block_sums(std::size_t(n_blocks) * width, 0.0);
    const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t b = 0; b < std::int64_t(n_blocks); ++b) {
        const std::uint64_t first = std::uint64_t(b) * B;
        const int n = int(std::min<std::uint64_t>(B, cfg.n_paths - first));
        detail::simulate_block(plan, first, n, block_sums.data() + std::size_t(b) * width);
    }

    std::vector<Kahan> total(width);
    for (std::uint64_t b = 0; b < n_blocks; ++b)
        for (std::size_t s = 0; s < width; ++s) total[s].add(block_sums[std::size_t(b) * width + s]);

    McSurface out;
    out.n_paths = cfg.n_paths;
    out.n_steps = grid.t.size();
    const double n = double(cfg.n_paths);
    for (std::size_t f = 0; f < nf; ++f) {
        const std::size_t o = plan.sums_begin[f];
        out.forward.push_back(finish_forward(fixing_times[f], n, total[o].sum, total[o + 1].sum));
        std::vector<McPriceResult> row;
        for (std::size_t k = 0; k < moneyness[f].size(); ++k) {
            const std::size_t q = o + 2 + 4 * k;
            row.push_back(finish(fixing_times[f], moneyness[f][k], n, total[q].sum, total[q + 1].sum,
                                 total[q + 2].sum, total[q + 3].sum));
        }
        out.prices.push_back(std::move(row));
    }
    return out;
}

void advance_step(McState& state, const ScaledSabrParams& p, double dt_years, const std::vector<double>& z_vol,
                  const std::vector<double>& z_ind, double absorption_floor) {
    if (!(dt_years > 0.0)) fail(ErrorKind::Config, "time step must be positive");
    const std::size_t n = state.x.size();
    if (z_vol.size() < n || z_ind.size() < n) fail(ErrorKind::Config, "two normal draws per path are required");
    const double sdt = std::sqrt(dt_years);
    const double rho_hat = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    const double vol_drift = -0.5 * p.nu * p.nu * dt_years;
    const double vol_diff = p.nu * sdt;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = state.sig[i];
        state.sig[i] = s * std::exp(vol_drift + vol_diff * z_vol[i]);
        if (state.absorbed[i]) continue;
        const double x = state.x[i];
        const double sv = p.beta == 1.0 ? s : s * std::exp((p.beta - 1.0) * std::log(x));
        const double xn = x * std::exp(-0.5 * sv * sv * dt_years + sv * sdt * (p.rho * z_vol[i] + rho_hat * z_ind[i]));
        if (xn <= absorption_floor) {
            state.x[i] = absorption_floor;
            state.absorbed[i] = 1;
        } else {
            state.x[i] = xn;
        }
    }
}

McSurface price_surface_serial(const ScaledSabrParams& p, const std::vector<double>& fixing_times,
                               const std::vector<std::vector<double>>& moneyness, const McConfig& cfg) {
    validate(p);
    validate(cfg);
    check_surface_inputs(fixing_times, moneyness);
    return reference_driver(
        fixing_times, moneyness, cfg, [&](std::size_t n) { return McState(n, p.alpha_hat); },
        [&](McState& st, double dt, const std::vector<double>& zv, const std::vector<double>& zi) {
            advance_step(st, p, dt, zv, zi, cfg.absorption_floor);
        },
        [](double x) { return x; });
}

McSurface price_surface_unscaled(const SabrParams& p, const std::vector<double>& fixing_times,
                                 const std::vector<std::vector<double>>& shifted_strikes, const McConfig& cfg) {
    validate(p);
    validate(cfg);
    check_surface_inputs(fixing_times, shifted_strikes);
    const double f0 = p.shifted_forward();
    // Same scheme on F_bar itself: sigma F_bar^(beta-1) plays the role of sigma_hat X^(beta-1).
    const ScaledSabrParams raw{p.alpha, p.beta, p.rho, p.nu};
    const double floor = cfg.absorption_floor * f0;
    return reference_driver(
        fixing_times, shifted_strikes, cfg,
        [&](std::size_t n) {
            McState st(n, p.alpha);
            std::fill(st.x.begin(), st.x.end(), f0);
            return st;
        },
        [&](McState& st, double dt, const std::vector<double>& zv, const std::vector<double>& zi) {
            advance_step(st, raw, dt, zv, zi, floor);
        },
        [](double x) { return x; });
}

McVol extract_vol(const McPriceResult& r, double tau) {
    McVol v;
    const double k = r.k_hat;
    const double tv_cap = r.caplet - std::max(1.0 - k, 0.0);
    const double tv_floor = r.floorlet - std::max(k - 1.0, 0.0);
    if (tv_cap < kMinTimeValue && tv_floor < kMinTimeValue) {
        v.status = McVolStatus::DeadPoint;
        return v;
    }
    v.used_floorlet = r.floorlet_err3 <= r.caplet_err3;
    v.time_value = v.used_floorlet ? tv_floor : tv_cap;
    if (v.time_value < kMinTimeValue) {
        v.status = McVolStatus::LowTimeValue;
        return v;
    }
    const double err3 = v.used_floorlet ? r.floorlet_err3 : r.caplet_err3;
    try {
        v.floorlet_price = v.used_floorlet ? r.floorlet : parity_convert(r.caplet, 1.0, k);
        const ImpliedVol iv = implied_vol_from_floorlet(v.floorlet_price, 1.0, k, tau);
        if (iv.zero_time_value) {
            v.status = McVolStatus::LowTimeValue;
            return v;
        }
        v.sigma = iv.sigma;
        v.vol_err3 = err3 / black_vega(1.0, k, iv.sigma, tau);
    } catch (const Error&) {
        v.status = McVolStatus::InversionFailed;
    }
    return v;
}

McVol implied_vol_from_mc(const McPriceResult& r, double tau) {
    const McVol v = extract_vol(r, tau);
    switch (v.status) {
        case McVolStatus::Ok:
            return v;
        case McVolStatus::DeadPoint:
            fail(ErrorKind::Numerical, "dead point: neither option has time value");
        case McVolStatus::LowTimeValue:
            fail(ErrorKind::Numerical, "selected option time value below threshold");
        case McVolStatus::InversionFailed:
            break;
    }
    fail(ErrorKind::Numerical, "implied vol inversion failed for MC price");
}

}  // namespace sabrdnn
