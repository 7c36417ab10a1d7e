#include "sabrdnn/black.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sabrdnn/error.hpp"

namespace sabrdnn {

namespace {

void check_positive(double fwd, double strike) {
    if (!(fwd > 0.0) || !(strike > 0.0))
        fail(ErrorKind::Domain, "shifted forward and strike must be positive");
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2); }

double black_price(double fwd, double strike, double variance, int omega) {
    check_positive(fwd, strike);
    if (variance < 0.0) fail(ErrorKind::Domain, "variance must be non-negative");
    const double w = omega >= 0 ? 1.0 : -1.0;
    if (variance == 0.0) return std::max(w * (fwd - strike), 0.0);
    const double sd = std::sqrt(variance);
    const double dp = (std::log(fwd / strike) + 0.5 * variance) / sd;
    const double dm = dp - sd;
    if (w > 0.0) return fwd * norm_cdf(dp) - strike * norm_cdf(dm);
    return strike * norm_cdf(-dm) - fwd * norm_cdf(-dp);
}

double black_price(const BlackInputs& in) {
    return black_price(in.fwd_shifted, in.strike_shifted, in.variance, in.omega);
}

double bachelier_price(double fwd, double strike, double normal_variance, int omega) {
    if (normal_variance < 0.0) fail(ErrorKind::Domain, "normal variance must be non-negative");
    const double w = omega >= 0 ? 1.0 : -1.0;
    const double intrinsic = w * (fwd - strike);
    if (normal_variance == 0.0) return std::max(intrinsic, 0.0);
    const double sd = std::sqrt(normal_variance);
    const double d = intrinsic / sd;
    return intrinsic * norm_cdf(d) + sd * norm_pdf(d);
}

double black_vega(double fwd, double strike, double sigma, double tau) {
    check_positive(fwd, strike);
    if (!(sigma > 0.0) || !(tau > 0.0)) return 0.0;
    const double sd = sigma * std::sqrt(tau);
    const double dp = (std::log(fwd / strike) + 0.5 * sd * sd) / sd;
    return fwd * norm_pdf(dp) * std::sqrt(tau);
}

double black_payoff_variance(const BlackInputs& in) {
    const double F = in.fwd_shifted, K = in.strike_shifted, v = in.variance;
    check_positive(F, K);
    if (v < 0.0) fail(ErrorKind::Domain, "variance must be non-negative");
    if (v == 0.0) return 0.0;
    const double w = in.omega >= 0 ? 1.0 : -1.0;
    const double sd = std::sqrt(v);
    const double dp = (std::log(F / K) + 0.5 * v) / sd;
    const double d0 = dp + sd;
    const double V = black_price(F, K, v, in.omega);
    const double m2 = F * F * std::exp(v) * norm_cdf(w * d0) - F * K * norm_cdf(w * dp) - K * w * V;
    return std::max(m2 - V * V, 0.0);
}

ImpliedVol implied_vol_from_floorlet(double price, double fwd, double strike, double tau) {
    check_positive(fwd, strike);
    if (!(tau > 0.0)) fail(ErrorKind::Domain, "time to fixing must be positive");
    const double intrinsic = std::max(strike - fwd, 0.0);
    if (!(price >= intrinsic - 1e-14) || price > strike)
        fail(ErrorKind::Domain, "floorlet price outside [intrinsic, strike]");

    auto f = [&](double s) { return black_price(fwd, strike, s * s * tau, -1); };

    ImpliedVol out;
    double lo = kVolLowerBound;
    if (price <= f(lo)) {
        out.sigma = lo;
        out.zero_time_value = true;
        return out;
    }
    double hi = 1.0;
    int doublings = 0;
    while (f(hi) < price) {
        hi *= 2.0;
        if (++doublings > 60) fail(ErrorKind::Numerical, "implied vol bracket search failed");
    }

    constexpr int kMaxIter = 200;
    double mid = 0.5 * (lo + hi);
    int it = 0;
    for (; it < kMaxIter; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double pm = f(mid);
        if (pm == price) break;
        if (pm < price)
            lo = mid;
        else
            hi = mid;
    }
    if (std::fabs(f(mid) - price) > 1e-12)
        fail(ErrorKind::Numerical, "implied vol bisection did not converge");
    out.sigma = mid;
    out.iterations = it;
    return out;
}

double parity_convert(double caplet_price, double fwd, double strike) {
    const double floorlet = caplet_price - (fwd - strike);
    if (floorlet < -1e-12) fail(ErrorKind::Domain, "parity conversion gives a negative floorlet");
    return std::max(floorlet, 0.0);
}

}  // namespace sabrdnn
