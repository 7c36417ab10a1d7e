#include "sabrdnn/params.hpp"

#include <cmath>
#include <string>

#include "json.hpp"

#include "sabrdnn/error.hpp"

namespace sabrdnn {

namespace {

bool finite_all(std::initializer_list<double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

void validate(const SabrParams& p) {
    if (!finite_all({p.F0, p.lambda, p.alpha, p.beta, p.rho, p.nu}))
        fail(ErrorKind::InvalidParameter, "SABR parameters must be finite");
    if (p.lambda < 0.0) fail(ErrorKind::InvalidParameter, "shift must be non-negative");
    if (p.F0 + p.lambda <= 0.0)
        fail(ErrorKind::InvalidParameter, "shifted forward F0 + lambda must be positive");
    if (p.alpha <= 0.0) fail(ErrorKind::InvalidParameter, "alpha must be positive");
    if (p.beta < 0.0 || p.beta > 1.0) fail(ErrorKind::InvalidParameter, "beta must lie in [0,1]");
    if (p.rho < -1.0 || p.rho > 1.0) fail(ErrorKind::InvalidParameter, "rho must lie in [-1,1]");
    if (p.nu < 0.0) fail(ErrorKind::InvalidParameter, "nu must be non-negative");
}

void validate(const ScaledSabrParams& p) {
    if (!finite_all({p.alpha_hat, p.beta, p.rho, p.nu}))
        fail(ErrorKind::InvalidParameter, "scaled SABR parameters must be finite");
    if (p.alpha_hat <= 0.0) fail(ErrorKind::InvalidParameter, "alpha_hat must be positive");
    if (p.beta < 0.0 || p.beta > 1.0) fail(ErrorKind::InvalidParameter, "beta must lie in [0,1]");
    if (p.rho < -1.0 || p.rho > 1.0) fail(ErrorKind::InvalidParameter, "rho must lie in [-1,1]");
    if (p.nu < 0.0) fail(ErrorKind::InvalidParameter, "nu must be non-negative");
}

ScaledSabrParams scale_params(const SabrParams& p) {
    validate(p);
    ScaledSabrParams s;
    s.alpha_hat = p.alpha * std::pow(p.shifted_forward(), p.beta - 1.0);
    s.beta = p.beta;
    s.rho = p.rho;
    s.nu = p.nu;
    return s;
}

double unscale_alpha(double alpha_hat, double F0, double lambda, double beta) {
    return alpha_hat * std::pow(F0 + lambda, 1.0 - beta);
}

double scale_strike(double K, double F0, double lambda) {
    if (!(F0 + lambda > 0.0)) fail(ErrorKind::InvalidParameter, "shifted forward must be positive");
    if (!(K + lambda > 0.0))
        fail(ErrorKind::InvalidParameter, "shifted strike K + lambda must be positive");
    return (K + lambda) / (F0 + lambda);
}

double scale_strike(double K, const SabrParams& p) { return scale_strike(K, p.F0, p.lambda); }

void to_json(nlohmann::json& j, const SabrParams& p) {
    j = nlohmann::json{{"F0", p.F0},     {"lambda", p.lambda}, {"alpha", p.alpha},
                       {"beta", p.beta}, {"rho", p.rho},       {"nu", p.nu}};
}

void from_json(const nlohmann::json& j, SabrParams& p) {
    try {
        p.F0 = j.at("F0").get<double>();
        p.lambda = j.value("lambda", kDefaultShift);
        p.alpha = j.at("alpha").get<double>();
        p.beta = j.at("beta").get<double>();
        p.rho = j.at("rho").get<double>();
        p.nu = j.at("nu").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("bad SABR parameter record: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const ScaledSabrParams& p) {
    j = nlohmann::json{{"alpha_hat", p.alpha_hat}, {"beta", p.beta}, {"rho", p.rho}, {"nu", p.nu}};
}

void from_json(const nlohmann::json& j, ScaledSabrParams& p) {
    try {
        p.alpha_hat = j.at("alpha_hat").get<double>();
        p.beta = j.at("beta").get<double>();
        p.rho = j.at("rho").get<double>();
        p.nu = j.at("nu").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("bad scaled SABR parameter record: ") + e.what());
    }
}

}  // namespace sabrdnn
