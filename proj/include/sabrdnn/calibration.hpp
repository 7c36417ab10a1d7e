#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sabrdnn/dataset.hpp"
#include "sabrdnn/mc.hpp"
#include "sabrdnn/mlp.hpp"
#include "sabrdnn/optimizer.hpp"
#include "sabrdnn/params.hpp"

namespace sabrdnn {

// One maturity's strike section of shifted-lognormal vols.
struct MarketSmile {
    double T = 0.0;
    double F0 = 0.0;
    double lambda = kDefaultShift;
    std::vector<double> strikes;
    std::vector<double> vols;
};

void validate(const MarketSmile& s);

// Black vega at market vols, normalized to sum to one.
std::vector<double> vega_weights(const MarketSmile& s);

class SmilePricer {
public:
    virtual ~SmilePricer() = default;
    // Shifted-lognormal vols at unshifted strikes.
    virtual std::vector<double> vols(const SabrParams& p, double T, const std::vector<double>& strikes) const = 0;
    virtual std::string name() const = 0;
};

class HaganPricer final : public SmilePricer {
public:
    std::vector<double> vols(const SabrParams& p, double T, const std::vector<double>& strikes) const override;
    std::string name() const override { return "hagan"; }
};

// Scales the parameters and queries the maturity-matched network.
class DnnPricer final : public SmilePricer {
public:
    explicit DnnPricer(const ModelRouter& router) : router_(router) {}
    std::vector<double> vols(const SabrParams& p, double T, const std::vector<double>& strikes) const override;
    std::string name() const override { return "dnn"; }

private:
    const ModelRouter& router_;
};

inline constexpr double kObjectivePenalty = 1e3;

// sqrt(sum_j xi_j (sigma_model_j - sigma_mkt_j)^2); pricer failures give kObjectivePenalty.
double objective(const SabrParams& p, const MarketSmile& s, const SmilePricer& pricer,
                 const std::vector<double>& weights);
double objective(const SabrParams& p, const MarketSmile& s, const SmilePricer& pricer);

// alpha, beta, rho, nu box of the subset serving maturity T.
BoxBounds parameter_box(double T);

struct CalibrationOptions {
    int n_starts = 300;
    std::uint64_t seed = 0;
    int workers = 0;
    OptimOptions optim;
};

struct CalibrationResult {
    SabrParams params;
    double T = 0.0;
    double objective = 0.0;
    std::vector<double> model_vols;
    std::vector<double> residuals;  // model - market
    int n_starts = 0;
    int best_start = -1;
    bool converged = false;
    bool underdetermined = false;  // fewer strikes than free parameters
};

CalibrationResult calibrate_smile(const MarketSmile& s, const SmilePricer& pricer, const CalibrationOptions& opt = {});

struct TermStructureEntry {
    MarketSmile smile;
    CalibrationResult result;
    std::string error;  // non-empty if this smile failed
};

std::vector<TermStructureEntry> term_structure_calibrate(const std::vector<MarketSmile>& surface,
                                                         const SmilePricer& pricer,
                                                         const CalibrationOptions& opt = {});
std::string term_structure_csv(const std::vector<TermStructureEntry>& ts);

double rmsd(const std::vector<double>& model_vols, const std::vector<double>& mc_vols);
double ard(double model_vol, double mc_vol);

// Monte Carlo repricing of a smile at given parameters.
struct McSmile {
    std::vector<double> vols;
    std::vector<double> err3;
    std::vector<McVolStatus> status;
};

McSmile mc_smile(const SabrParams& p, double T, const std::vector<double>& strikes, const McConfig& cfg);

void to_json(nlohmann::json& j, const MarketSmile& s);
void from_json(const nlohmann::json& j, MarketSmile& s);
void to_json(nlohmann::json& j, const CalibrationResult& r);

std::vector<MarketSmile> read_smiles(const std::string& path);

}  // namespace sabrdnn
