#pragma once

#include "json.hpp"

namespace sabrdnn {

inline constexpr double kDefaultShift = 0.03;

// Shifted-SABR parameter set on the unscaled forward F + lambda.
struct SabrParams {
    double F0 = 0.0;
    double lambda = kDefaultShift;
    double alpha = 0.0;
    double beta = 0.0;
    double rho = 0.0;
    double nu = 0.0;

    double shifted_forward() const { return F0 + lambda; }
};

// Dynamics of X = F_bar / F_bar0, which always starts at 1.
struct ScaledSabrParams {
    double alpha_hat = 0.0;
    double beta = 0.0;
    double rho = 0.0;
    double nu = 0.0;
};

struct OptionSpec {
    double T = 0.0;
    double K = 0.0;
    int omega = 1;  // +1 caplet, -1 floorlet
};

void validate(const SabrParams& p);
void validate(const ScaledSabrParams& p);

ScaledSabrParams scale_params(const SabrParams& p);
double unscale_alpha(double alpha_hat, double F0, double lambda, double beta);
double scale_strike(double K, const SabrParams& p);
double scale_strike(double K, double F0, double lambda);

void to_json(nlohmann::json& j, const SabrParams& p);
void from_json(const nlohmann::json& j, SabrParams& p);
void to_json(nlohmann::json& j, const ScaledSabrParams& p);
void from_json(const nlohmann::json& j, ScaledSabrParams& p);

}  // namespace sabrdnn
