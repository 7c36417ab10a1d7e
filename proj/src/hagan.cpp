#include "sabrdnn/hagan.hpp"

#include <cmath>

#include "sabrdnn/error.hpp"

namespace sabrdnn {

namespace {

constexpr double kSmallZ = 1e-6;
constexpr double kAtmRel = 1e-8;

// Fourth-order expansions around z = 0 of z/Y, (z+rho-rho E)/(Y E) and ((z+rho)E-rho)/Y.
double z_over_y_series(double z, double r) {
    const double r2 = r * r;
    const double c1 = r / 2.0;
    const double c2 = (2.0 - 3.0 * r2) / 12.0;
    const double c3 = r * (6.0 * r2 - 5.0) / 24.0;
    const double c4 = -(225.0 * r2 * r2 - 240.0 * r2 + 34.0) / 720.0;
    return 1.0 + z * (c1 + z * (c2 + z * (c3 + z * c4)));
}

double a_series(double z, double r) {
    const double r2 = r * r;
    const double q = 1.0 - r2;
    const double c1 = -r * q;
    const double c2 = q * (9.0 * r2 - 2.0) / 6.0;
    const double c3 = -r * q * (15.0 * r2 - 7.0) / 6.0;
    const double c4 = q * (1575.0 * r2 * r2 - 1125.0 * r2 + 88.0) / 360.0;
    return q + z * (c1 + z * (c2 + z * (c3 + z * c4)));
}

double b_series(double z, double r) {
    const double r2 = r * r;
    const double c1 = 2.0 * r;
    const double c2 = (2.0 - r2) / 3.0;
    const double c3 = -r * (1.0 - r2) / 3.0;
    const double c4 = -(75.0 * r2 * r2 - 89.0 * r2 + 16.0) / 180.0;
    return 1.0 + r2 + z * (c1 + z * (c2 + z * (c3 + z * c4)));
}

double z_factor(double theta, double tau) {
    return theta >= 0.0 ? 1.0 + theta * tau : 1.0 / (1.0 - theta * tau);
}

// (K^(1-b) - F^(1-b)) / (1-b), continuous through b = 1.
double cev_distance(double fwd, double strike, double beta) {
    const double lk = std::log(strike / fwd);
    const double e = 1.0 - beta;
    if (e == 0.0) return lk;
    return std::pow(fwd, e) * std::expm1(e * lk) / e;
}

void check_inputs(double t, double T, double fwd, double strike, const SabrParams& p) {
    if (!(fwd > 0.0) || !(strike > 0.0))
        fail(ErrorKind::Domain, "shifted forward and strike must be positive");
    if (!(T - t > 0.0)) fail(ErrorKind::Domain, "time to fixing must be positive");
    if (!(p.alpha > 0.0) || p.beta < 0.0 || p.beta > 1.0 || !(p.rho > -1.0 && p.rho < 1.0) || p.nu < 0.0)
        fail(ErrorKind::InvalidParameter, "SABR parameters outside the expansion domain");
}

}  // namespace

HaganTerms hagan_terms(double t, double T, double fwd, double strike, const SabrParams& p) {
    check_inputs(t, T, fwd, strike, p);
    const double tau = T - t;
    const double a = p.alpha, b = p.beta, r = p.rho, n = p.nu;

    HaganTerms h;
    h.alpha_bar = a * (1.0 + 0.25 * a * b * r * n * std::pow(fwd, b - 1.0) * tau);
    if (!(h.alpha_bar > 0.0)) fail(ErrorKind::Domain, "expansion breaks down: alpha_bar <= 0");
    h.delta0 = -b * (2.0 - b) / (8.0 * std::pow(fwd, 2.0 - 2.0 * b));
    const double ab2d = h.alpha_bar * h.alpha_bar * h.delta0;

    if (std::fabs(strike - fwd) < kAtmRel * fwd) {
        h.atm = true;
        h.theta = n * n / 24.0 * (2.0 - 3.0 * r * r) + ab2d / 3.0;
        return h;
    }

    h.z = n / h.alpha_bar * cev_distance(fwd, strike, b);
    h.E = std::sqrt(1.0 + 2.0 * r * h.z + h.z * h.z);
    double A, B;
    if (std::fabs(h.z) < kSmallZ) {
        h.z_over_y = z_over_y_series(h.z, r);
        h.Y = h.z / h.z_over_y;
        A = a_series(h.z, r);
        B = b_series(h.z, r);
    } else {
        h.Y = std::log((h.z + r + h.E) / (1.0 + r));
        h.z_over_y = h.z / h.Y;
        A = (h.z + r - r * h.E) / (h.Y * h.E);
        B = ((h.z + r) * h.E - r) / h.Y;
    }
    h.theta = n * n / 24.0 * (-1.0 + 3.0 * A) + ab2d / 6.0 * (1.0 - r * r + B);
    return h;
}

double hagan_normal_vol(double t, double T, double fwd, double strike, const SabrParams& p) {
    const HaganTerms h = hagan_terms(t, T, fwd, strike, p);
    const double Z = z_factor(h.theta, T - t);
    if (h.atm) return h.alpha_bar * std::pow(fwd, p.beta) * Z;
    // nu (K-F)/Y written as alpha_bar (K-F)/q * z/Y so that nu = 0 is the regular limit.
    const double q = cev_distance(fwd, strike, p.beta);
    return h.alpha_bar * (strike - fwd) / q * h.z_over_y * Z;
}

double hagan_lognormal_vol(double t, double T, double fwd, double strike, const SabrParams& p) {
    check_inputs(t, T, fwd, strike, p);
    const double tau = T - t;
    if (std::fabs(strike - fwd) < kAtmRel * fwd) {
        const double a = p.alpha, b = p.beta, r = p.rho, n = p.nu;
        const double f1b = std::pow(fwd, 1.0 - b);
        const double corr = a * a * (1.0 - b) * (1.0 - b) / (24.0 * f1b * f1b) + a * b * r * n / (4.0 * f1b) +
                            n * n * (2.0 - 3.0 * r * r) / 24.0;
        return a / f1b * (1.0 + corr * tau);
    }
    const double sn = hagan_normal_vol(t, T, fwd, strike, p);
    const double log_ratio = -std::log1p((strike - fwd) / fwd) / (fwd - strike);
    return sn * log_ratio * (1.0 + sn * sn * tau / (24.0 * fwd * strike));
}

double hagan_smile_vol(double T, double K, const SabrParams& p) {
    return hagan_lognormal_vol(0.0, T, p.F0 + p.lambda, K + p.lambda, p);
}

}  // namespace sabrdnn
