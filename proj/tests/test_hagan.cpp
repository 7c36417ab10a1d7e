#include <cmath>
#include <random>

#include "doctest.h"
#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/hagan.hpp"

using namespace sabrdnn;

namespace {

SabrParams theta(double a, double b, double r, double n) { return SabrParams{0.0, 0.0, a, b, r, n}; }

}  // namespace

TEST_CASE("normal and lognormal vols against a 40-digit evaluation of the expansion") {
    struct Case {
        double F, K, T, a, b, r, n, sn, sln;
    };
    const Case cases[] = {
        {0.0566, 0.015, 9.5068, 0.0209, 0.3369, 0.1572, 0.2758, 0.0084102953003018959, 0.27733430794175539},
        {1.03, 0.73, 2.0, 0.1178, 0.8738, -0.0702, 0.5010, 0.13530004883691004, 0.15558063579699813},
        {1.03, 1.33, 10.0, 0.1822, 0.3044, 0.1243, 0.3127, 0.21672904302458643, 0.18730599967247643},
        {0.05, 0.08, 5.0, 0.03, 1.0, -0.3, 0.4, 0.0042596454802194669, 0.066798027719701983},
        {0.05, 0.05, 3.0, 0.02, 0.5, 0.2, 0.6, 0.0048666066915982388, 0.097391933815625873},
        {0.05, 0.2, 10.0, 0.02, 0.5, 0.0, 1.0, 0.031470923373043354, 0.30285585876277838},
    };
    for (const auto& c : cases) {
        const SabrParams p = theta(c.a, c.b, c.r, c.n);
        CHECK(hagan_normal_vol(0.0, c.T, c.F, c.K, p) == doctest::Approx(c.sn).epsilon(1e-12));
        CHECK(hagan_lognormal_vol(0.0, c.T, c.F, c.K, p) == doctest::Approx(c.sln).epsilon(1e-12));
    }
}

TEST_CASE("negative Theta branch stays positive and finite") {
    const SabrParams p = theta(0.02, 0.5, 0.0, 1.0);
    const HaganTerms h = hagan_terms(0.0, 10.0, 0.05, 0.2, p);
    CHECK(h.theta < 0.0);
    const double sn = hagan_normal_vol(0.0, 10.0, 0.05, 0.2, p);
    CHECK(std::isfinite(sn));
    CHECK(sn > 0.0);
}

TEST_CASE("ATM lognormal with beta = 1 and nu = 0 is alpha") {
    const SabrParams p = theta(0.23, 1.0, 0.3, 0.0);
    CHECK(hagan_lognormal_vol(0.0, 7.0, 0.04, 0.04, p) == doctest::Approx(0.23).epsilon(1e-15));
}

TEST_CASE("ATM normal vol tends to alpha F for beta = 1, rho = 0, nu -> 0, tau -> 0") {
    const SabrParams p = theta(0.2, 1.0, 0.0, 1e-9);
    CHECK(hagan_normal_vol(0.0, 1e-9, 0.05, 0.05, p) == doctest::Approx(0.2 * 0.05).epsilon(1e-9));
}

TEST_CASE("ATM and non-ATM normal vol branches agree near the money") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double F = 0.02 + 0.06 * u(rng);
        const SabrParams p = theta(0.005 + 0.05 * u(rng), 0.05 + 0.9 * u(rng), -0.5 + u(rng), 0.05 + 0.8 * u(rng));
        const double T = 0.25 + 10.0 * u(rng);
        double atm;
        try {
            atm = hagan_normal_vol(0.0, T, F, F, p);
        } catch (const Error&) {
            continue;
        }
        const double up = hagan_normal_vol(0.0, T, F, F * (1.0 + 2e-8), p);
        const double dn = hagan_normal_vol(0.0, T, F, F * (1.0 - 2e-8), p);
        CHECK(std::fabs(0.5 * (up + dn) / atm - 1.0) < 1e-6);
    }
}

TEST_CASE("small-z series joins the closed form") {
    const SabrParams p = theta(0.03, 0.4, -0.35, 0.7);
    const double F = 0.05, T = 4.0;
    // z crosses the series threshold between these strikes
    for (double dk : {1e-9, 1e-8, 3e-8, 1e-7, 1e-6}) {
        const double a = hagan_normal_vol(0.0, T, F, F + dk, p);
        const double b = hagan_normal_vol(0.0, T, F, F + 1.0001 * dk, p);
        CHECK(std::fabs(a / b - 1.0) < 1e-8);
    }
}

TEST_CASE("nu = 0 is a regular limit") {
    const SabrParams p0 = theta(0.02, 0.5, 0.3, 0.0);
    const SabrParams p1 = theta(0.02, 0.5, 0.3, 1e-7);
    for (double K : {0.01, 0.04, 0.09}) {
        const double a = hagan_normal_vol(0.0, 3.0, 0.05, K, p0);
        const double b = hagan_normal_vol(0.0, 3.0, 0.05, K, p1);
        CHECK(std::isfinite(a));
        CHECK(a == doctest::Approx(b).epsilon(1e-6));
    }
}

TEST_CASE("lognormal vol is consistent with Bachelier prices at short maturity") {
    const double F = 0.05, T = 0.25;
    const SabrParams p = theta(0.025, 0.5, -0.2, 0.5);
    for (double K : {0.03, 0.04, 0.045, 0.055, 0.065, 0.08}) {
        const double sn = hagan_normal_vol(0.0, T, F, K, p);
        const int omega = K < F ? -1 : 1;
        const double price = bachelier_price(F, K, sn * sn * T, omega);
        const double floorlet = omega < 0 ? price : price - (F - K);
        const double implied = implied_vol_from_floorlet(floorlet, F, K, T).sigma;
        CHECK(std::fabs(hagan_lognormal_vol(0.0, T, F, K, p) - implied) < 1e-4);
    }
}

TEST_CASE("expansion outside its domain is reported") {
    // strongly negative rho with long maturity drives alpha_bar negative
    const SabrParams p = theta(0.2, 0.1, -0.8, 1.6);
    CHECK_THROWS_AS(hagan_normal_vol(0.0, 30.0, 0.05, 0.02, p), Error);
    CHECK_THROWS_AS(hagan_normal_vol(0.0, 0.0, 0.05, 0.02, theta(0.02, 0.5, 0.0, 0.3)), Error);
}
