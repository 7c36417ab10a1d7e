#pragma once

namespace sabrdnn {

double norm_cdf(double x);
double norm_pdf(double x);

// Undiscounted shifted-Black inputs; variance is sigma^2 * tau.
struct BlackInputs {
    double fwd_shifted = 1.0;
    double strike_shifted = 1.0;
    double variance = 0.0;
    int omega = 1;
};

double black_price(const BlackInputs& in);
double black_price(double fwd, double strike, double variance, int omega);
double bachelier_price(double fwd, double strike, double normal_variance, int omega);
double black_vega(double fwd, double strike, double sigma, double tau);

// Second central moment of the discounted-free payoff max(omega (F - K), 0) under Black.
double black_payoff_variance(const BlackInputs& in);

struct ImpliedVol {
    double sigma = 0.0;
    bool zero_time_value = false;
    int iterations = 0;
};

inline constexpr double kVolLowerBound = 1e-8;

ImpliedVol implied_vol_from_floorlet(double price, double fwd, double strike, double tau);
double parity_convert(double caplet_price, double fwd, double strike);

}  // namespace sabrdnn
