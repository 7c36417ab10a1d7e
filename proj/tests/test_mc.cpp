#include <cmath>
#include <vector>

#include "doctest.h"
#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/mc.hpp"
#include "sabrdnn/rng.hpp"

using namespace sabrdnn;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

}  // namespace

TEST_CASE("time grid lands on every fixing") {
    const TimeGrid g = make_time_grid({2.0}, 0.5);
    CHECK(g.t.size() == 1460);
    CHECK(g.t.back() == 2.0);
    CHECK(g.fixing.size() == 1);

    const TimeGrid h = make_time_grid({0.3, 1.0, 1.25}, 3.0);
    CHECK(h.t.size() == std::size_t(std::ceil(1.25 * 365 / 3.0)) + 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(h.t[h.fixing[i]] == std::vector<double>{0.3, 1.0, 1.25}[i]);
    for (std::size_t i = 1; i < h.t.size(); ++i) CHECK(h.t[i] > h.t[i - 1]);

    CHECK_THROWS_AS(make_time_grid({1.0, 0.5}, 1.0), Error);
    CHECK_THROWS_AS(make_time_grid({0.0}, 1.0), Error);
}

TEST_CASE("advance_step: geometric limit, frozen vol and absorption") {
    const std::size_t n = 1 << 16;
    std::vector<double> zv(n), zi(n);
    const ScaledSabrParams p{0.3, 1.0, 0.0, 0.0};
    McState st(n, p.alpha_hat);
    const double dt = 1.0 / 365.0;
    const int steps = 365;
    for (int j = 0; j < steps; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto o = Philox4x32::block({std::uint32_t(j), std::uint32_t(i), 0u, 0u}, {5u, 6u});
            zv[i] = inverse_norm_cdf(u01_open(o[0]));
            zi[i] = inverse_norm_cdf(u01_open(o[1]));
        }
        advance_step(st, p, dt, zv, zi);
    }
    double m = 0.0;
    for (double x : st.x) m += std::log(x);
    m /= double(n);
    const double T = dt * steps;
    const double expected = -0.5 * 0.09 * T;
    CHECK(std::fabs(m - expected) < 3.0 * 0.3 * std::sqrt(T) / std::sqrt(double(n)));
    for (double s : st.sig) CHECK(s == 0.3);

    McState frozen(4, 0.0);
    const std::vector<double> z{1.0, -2.0, 0.5, 3.0};
    advance_step(frozen, ScaledSabrParams{0.0, 0.5, 0.2, 0.4}, 0.01, z, z);
    for (double x : frozen.x) CHECK(x == 1.0);

    McState dead(1, 0.2);
    dead.x[0] = 1e-14;
    dead.absorbed[0] = 1;
    for (int j = 0; j < 10; ++j) advance_step(dead, ScaledSabrParams{0.2, 0.5, 0.0, 0.5}, 0.01, {2.0}, {2.0});
    CHECK(dead.x[0] == 1e-14);
    CHECK(dead.sig[0] != 0.2);

    McState falls(1, 50.0);
    advance_step(falls, ScaledSabrParams{50.0, 0.5, 0.0, 0.0}, 1.0, {-8.0}, {0.0});
    CHECK(falls.absorbed[0] == 1);
    CHECK(falls.x[0] == 1e-14);
}

TEST_CASE("vectorized kernel agrees with the scalar reference") {
    McConfig cfg;
    cfg.n_paths = 3000;  // includes a partial block
    cfg.dt_days = 2.0;
    cfg.seed = 42;
    const std::vector<double> T{0.5, 1.7, 3.0};
    const std::vector<std::vector<double>> K{{0.5, 1.0, 1.5}, {0.2, 1.0}, {0.15, 0.8, 1.2, 3.5}};
    for (const ScaledSabrParams& p : {ScaledSabrParams{0.25, 0.6, -0.3, 0.6}, ScaledSabrParams{0.9, 0.1, 0.4, 1.2},
                                      ScaledSabrParams{0.2, 1.0, 0.0, 0.0}}) {
        const McSurface a = price_surface(p, T, K, cfg);
        const McSurface b = price_surface_serial(p, T, K, cfg);
        for (std::size_t f = 0; f < T.size(); ++f) {
            CHECK(rel(a.forward[f].mean, b.forward[f].mean) < 1e-10);
            for (std::size_t k = 0; k < K[f].size(); ++k) {
                CHECK(rel(a.prices[f][k].caplet, b.prices[f][k].caplet) < 1e-10);
                CHECK(rel(a.prices[f][k].floorlet, b.prices[f][k].floorlet) < 1e-10);
                CHECK(rel(a.prices[f][k].caplet_err3, b.prices[f][k].caplet_err3) < 1e-8);
            }
        }
    }
}

TEST_CASE("results are bit-identical across runs and worker counts") {
    McConfig cfg;
    cfg.n_paths = 1 << 13;
    cfg.dt_days = 3.0;
    cfg.seed = 7;
    const ScaledSabrParams p{0.3, 0.5, -0.2, 0.7};
    const std::vector<double> T{1.0, 2.0};
    const std::vector<std::vector<double>> K{{0.8, 1.0, 1.2}, {0.5, 1.5}};
    cfg.workers = 1;
    const McSurface a = price_surface(p, T, K, cfg);
    cfg.workers = 4;
    const McSurface b = price_surface(p, T, K, cfg);
    const McSurface c = price_surface(p, T, K, cfg);
    for (std::size_t f = 0; f < T.size(); ++f)
        for (std::size_t k = 0; k < K[f].size(); ++k) {
            CHECK(a.prices[f][k].caplet == b.prices[f][k].caplet);
            CHECK(a.prices[f][k].floorlet_err3 == b.prices[f][k].floorlet_err3);
            CHECK(b.prices[f][k].floorlet == c.prices[f][k].floorlet);
        }
    cfg.seed = 8;
    const McSurface d = price_surface(p, T, K, cfg);
    CHECK(d.prices[0][0].caplet != a.prices[0][0].caplet);
}

TEST_CASE("strike monotonicity, parity and martingale") {
    McConfig cfg;
    cfg.n_paths = 1 << 14;
    cfg.dt_days = 2.0;
    cfg.seed = 99;
    const ScaledSabrParams p{0.35, 0.4, 0.2, 0.8};
    std::vector<double> ks;
    for (double k = 0.15; k <= 3.5; k += 0.05) ks.push_back(k);
    const McSurface s = price_surface(p, {2.0, 5.0}, {ks, ks}, cfg);
    for (std::size_t f = 0; f < 2; ++f) {
        const auto& row = s.prices[f];
        for (std::size_t k = 1; k < row.size(); ++k) {
            CHECK(row[k].caplet <= row[k - 1].caplet);
            CHECK(row[k].floorlet >= row[k - 1].floorlet);
        }
        for (const auto& r : row) {
            const double bound = std::hypot(r.caplet_err3, r.floorlet_err3);
            CHECK(std::fabs(r.caplet - r.floorlet - (1.0 - r.k_hat)) < bound);
        }
        CHECK(std::fabs(s.forward[f].mean - 1.0) < 4.0 * s.forward[f].std_error);
    }
}

TEST_CASE("scaled and unscaled dynamics agree under common random numbers") {
    McConfig cfg;
    cfg.n_paths = 2048;
    cfg.dt_days = 5.0;
    cfg.seed = 3;
    const SabrParams p{0.0266, 0.03, 0.0209, 0.3369, 0.1572, 0.2758};
    const ScaledSabrParams s = scale_params(p);
    const double f0 = p.shifted_forward();
    const std::vector<double> T{1.0, 4.0};
    const std::vector<double> strikes{-0.01, 0.0, 0.02, 0.05};
    std::vector<std::vector<double>> khat(2), kbar(2);
    for (int f = 0; f < 2; ++f)
        for (double K : strikes) {
            khat[f].push_back((K + p.lambda) / f0);
            kbar[f].push_back(K + p.lambda);
        }
    const McSurface a = price_surface_serial(s, T, khat, cfg);
    const McSurface b = price_surface_unscaled(p, T, kbar, cfg);
    const McSurface c = price_surface(s, T, khat, cfg);
    for (int f = 0; f < 2; ++f)
        for (std::size_t k = 0; k < strikes.size(); ++k) {
            CHECK(rel(f0 * a.prices[f][k].floorlet, b.prices[f][k].floorlet) < 1e-12);
            CHECK(rel(f0 * a.prices[f][k].caplet, b.prices[f][k].caplet) < 1e-12);
            CHECK(rel(f0 * c.prices[f][k].floorlet, b.prices[f][k].floorlet) < 1e-10);
        }
}

TEST_CASE("Black limit prices sit within three standard errors of the closed form") {
    McConfig cfg;
    cfg.n_paths = 1 << 16;
    cfg.dt_days = 5.0;
    cfg.seed = 1;
    const ScaledSabrParams p{0.3, 1.0, 0.0, 0.0};
    const std::vector<double> ks{0.7, 0.9, 1.0, 1.1, 1.3};
    const McSurface s = price_surface(p, {2.0}, {ks}, cfg);
    for (const auto& r : s.prices[0]) {
        CHECK(std::fabs(r.caplet - black_price(1.0, r.k_hat, 0.18, 1)) < r.caplet_err3);
        CHECK(std::fabs(r.floorlet - black_price(1.0, r.k_hat, 0.18, -1)) < r.floorlet_err3);
        CHECK(r.caplet_var == doctest::Approx(black_payoff_variance({1.0, r.k_hat, 0.18, 1})).epsilon(0.05));
    }
}

TEST_CASE("implied vol extraction from MC prices") {
    const double tau = 2.0;
    McPriceResult r;
    r.T = tau;
    r.k_hat = 1.0;
    r.caplet = black_price(1.0, 1.0, 0.04 * tau, 1);
    r.floorlet = black_price(1.0, 1.0, 0.04 * tau, -1);
    r.caplet_err3 = r.floorlet_err3 = 1e-4;
    McVol v = implied_vol_from_mc(r, tau);
    CHECK(v.used_floorlet);
    CHECK(v.sigma == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(v.vol_err3 == doctest::Approx(1e-4 / black_vega(1.0, 1.0, 0.2, tau)).epsilon(1e-8));

    r.k_hat = 0.7;
    r.caplet = black_price(1.0, 0.7, 0.25 * tau, 1);
    r.floorlet = black_price(1.0, 0.7, 0.25 * tau, -1);
    r.caplet_err3 = 1e-5;
    r.floorlet_err3 = 2e-5;
    v = implied_vol_from_mc(r, tau);
    CHECK_FALSE(v.used_floorlet);
    CHECK(v.sigma == doctest::Approx(0.5).epsilon(1e-9));

    r.k_hat = 0.15;
    r.caplet = 0.85;
    r.floorlet = 0.0;
    CHECK(extract_vol(r, tau).status == McVolStatus::DeadPoint);
    CHECK_THROWS_AS(implied_vol_from_mc(r, tau), Error);

    r.caplet = 0.85 + 1e-6;
    r.floorlet = 0.0;
    r.caplet_err3 = 1e-3;
    r.floorlet_err3 = 0.0;
    CHECK(extract_vol(r, tau).status == McVolStatus::LowTimeValue);
}
