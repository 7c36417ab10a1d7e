#include "sabrdnn/calibration.hpp"

#include <cmath>
#include <limits>
#include <omp.h>
#include <sstream>

#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/hagan.hpp"
#include "sabrdnn/manifest.hpp"

namespace sabrdnn {

void validate(const MarketSmile& s) {
    if (!(s.T > 0.0)) fail(ErrorKind::InvalidParameter, "smile maturity must be positive");
    if (!(s.F0 + s.lambda > 0.0)) fail(ErrorKind::InvalidParameter, "smile forward must satisfy F0 + lambda > 0");
    if (s.strikes.empty() || s.strikes.size() != s.vols.size())
        fail(ErrorKind::InvalidParameter, "smile needs matching, non-empty strike and vol lists");
    for (std::size_t j = 0; j < s.strikes.size(); ++j) {
        if (j && !(s.strikes[j] > s.strikes[j - 1])) fail(ErrorKind::InvalidParameter, "smile strikes must increase");
        if (!(s.strikes[j] + s.lambda > 0.0)) fail(ErrorKind::InvalidParameter, "smile strike below -lambda");
        if (!(s.vols[j] > 0.0)) fail(ErrorKind::InvalidParameter, "smile vols must be positive");
    }
}

std::vector<double> vega_weights(const MarketSmile& s) {
    validate(s);
    const double F = s.F0 + s.lambda;
    std::vector<double> w(s.strikes.size());
    double total = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) total += w[j] = black_vega(F, s.strikes[j] + s.lambda, s.vols[j], s.T);
    if (!(total > 0.0)) fail(ErrorKind::Numerical, "smile has zero total vega");
    for (double& x : w) x /= total;
    return w;
}

std::vector<double> HaganPricer::vols(const SabrParams& p, double T, const std::vector<double>& strikes) const {
    std::vector<double> out;
    out.reserve(strikes.size());
    for (double K : strikes) out.push_back(hagan_smile_vol(T, K, p));
    return out;
}

std::vector<double> DnnPricer::vols(const SabrParams& p, double T, const std::vector<double>& strikes) const {
    const ScaledSabrParams s = scale_params(p);
    const MlpModel& m = router_.model_for(T);
    Eigen::MatrixXd X(kFeatures, Eigen::Index(strikes.size()));
    for (std::size_t j = 0; j < strikes.size(); ++j)
        X.col(Eigen::Index(j)) << s.alpha_hat, s.beta, s.rho, s.nu, T, scale_strike(strikes[j], p);
    const Eigen::VectorXd v = m.predict(X);
    return {v.data(), v.data() + v.size()};
}

namespace {

double weighted_sse(const SabrParams& p, const MarketSmile& s, const SmilePricer& pricer,
                    const std::vector<double>& w) {
    std::vector<double> v;
    try {
        v = pricer.vols(p, s.T, s.strikes);
    } catch (const Error&) {
        return kObjectivePenalty * kObjectivePenalty;
    }
    double sse = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double r = v[j] - s.vols[j];
        sse += w[j] * r * r;
    }
    return std::isfinite(sse) ? sse : kObjectivePenalty * kObjectivePenalty;
}

SabrParams with_theta(const MarketSmile& s, const std::vector<double>& x) {
    return {s.F0, s.lambda, x[0], x[1], x[2], x[3]};
}

}  // namespace

double objective(const SabrParams& p, const MarketSmile& s, const SmilePricer& pricer,
                 const std::vector<double>& weights) {
    if (weights.size() != s.strikes.size()) fail(ErrorKind::InvalidParameter, "one weight per strike required");
    return std::sqrt(weighted_sse(p, s, pricer, weights));
}

double objective(const SabrParams& p, const MarketSmile& s, const SmilePricer& pricer) {
    return objective(p, s, pricer, vega_weights(s));
}

BoxBounds parameter_box(double T) {
    const SubsetSpec spec = subset_spec(subset_for_maturity(T));
    return {{spec.alpha.lo, spec.beta.lo, spec.rho.lo, spec.nu.lo}, {spec.alpha.hi, spec.beta.hi, spec.rho.hi, spec.nu.hi}};
}

CalibrationResult calibrate_smile(const MarketSmile& s, const SmilePricer& pricer, const CalibrationOptions& opt) {
    validate(s);
    if (opt.n_starts < 1) fail(ErrorKind::Config, "calibration needs at least one start");
    const std::vector<double> w = vega_weights(s);
    const BoxBounds box = parameter_box(s.T);
    std::vector<Range> ranges;
    for (std::size_t i = 0; i < box.lo.size(); ++i) ranges.push_back({box.lo[i], box.hi[i]});
    const auto starts = lhs_sample(ranges, std::size_t(opt.n_starts), opt.seed);

    const Objective f = [&](const std::vector<double>& x) { return weighted_sse(with_theta(s, x), s, pricer, w); };
    std::vector<OptimResult> runs(starts.size());
    const int workers = opt.workers > 0 ? opt.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (int i = 0; i < int(starts.size()); ++i) runs[std::size_t(i)] = minimize_box(f, starts[std::size_t(i)], box, opt.optim);

    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].f < runs[best].f) best = i;
    if (!(runs[best].f < kObjectivePenalty * kObjectivePenalty))
        fail(ErrorKind::Numerical, "every calibration start failed");

    CalibrationResult r;
    r.params = with_theta(s, runs[best].x);
    r.T = s.T;
    r.objective = std::sqrt(runs[best].f);
    r.model_vols = pricer.vols(r.params, s.T, s.strikes);
    for (std::size_t j = 0; j < s.strikes.size(); ++j) r.residuals.push_back(r.model_vols[j] - s.vols[j]);
    r.n_starts = opt.n_starts;
    r.best_start = int(best);
    r.converged = runs[best].converged;
    r.underdetermined = s.strikes.size() < box.lo.size();
    return r;
}

std::vector<TermStructureEntry> term_structure_calibrate(const std::vector<MarketSmile>& surface,
                                                         const SmilePricer& pricer, const CalibrationOptions& opt) {
    if (surface.empty()) fail(ErrorKind::InvalidParameter, "empty smile surface");
    std::vector<TermStructureEntry> out;
    for (const MarketSmile& s : surface) {
        TermStructureEntry e;
        e.smile = s;
        try {
            e.result = calibrate_smile(s, pricer, opt);
        } catch (const Error& err) {
            e.error = err.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string term_structure_csv(const std::vector<TermStructureEntry>& ts) {
    std::ostringstream os;
    os.precision(17);
    os << "T,F0,alpha,beta,rho,nu,objective,converged\n";
    for (const auto& e : ts) {
        if (!e.error.empty()) continue;
        const SabrParams& p = e.result.params;
        os << e.result.T << ',' << p.F0 << ',' << p.alpha << ',' << p.beta << ',' << p.rho << ',' << p.nu << ','
           << e.result.objective << ',' << (e.result.converged ? 1 : 0) << '\n';
    }
    return os.str();
}

double rmsd(const std::vector<double>& model_vols, const std::vector<double>& mc_vols) {
    if (model_vols.size() != mc_vols.size() || mc_vols.empty())
        fail(ErrorKind::InvalidParameter, "RMSD needs two non-empty vol lists of equal length");
    double s = 0.0;
    for (std::size_t j = 0; j < mc_vols.size(); ++j) {
        const double d = ard(model_vols[j], mc_vols[j]);
        s += d * d;
    }
    return std::sqrt(s / double(mc_vols.size()));
}

double ard(double model_vol, double mc_vol) {
    if (!(mc_vol > 0.0)) fail(ErrorKind::Domain, "reference vol must be positive");
    return std::fabs(model_vol / mc_vol - 1.0);
}

McSmile mc_smile(const SabrParams& p, double T, const std::vector<double>& strikes, const McConfig& cfg) {
    const ScaledSabrParams s = scale_params(p);
    std::vector<double> k;
    for (double K : strikes) k.push_back(scale_strike(K, p));
    const McSurface surf = price_surface(s, {T}, {k}, cfg);
    McSmile out;
    for (const McPriceResult& r : surf.prices[0]) {
        const McVol v = extract_vol(r, T);
        out.status.push_back(v.status);
        const bool ok = v.status == McVolStatus::Ok;
        out.vols.push_back(ok ? v.sigma : std::numeric_limits<double>::quiet_NaN());
        out.err3.push_back(ok ? v.vol_err3 : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

void to_json(nlohmann::json& j, const MarketSmile& s) {
    j = {{"T", s.T}, {"F0", s.F0}, {"lambda", s.lambda}, {"strikes", s.strikes}, {"vols", s.vols}};
}

void from_json(const nlohmann::json& j, MarketSmile& s) {
    try {
        s.T = j.at("T").get<double>();
        s.F0 = j.at("F0").get<double>();
        s.lambda = j.value("lambda", kDefaultShift);
        s.strikes = j.at("strikes").get<std::vector<double>>();
        s.vols = j.at("vols").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("bad smile record: ") + e.what());
    }
    validate(s);
}

void to_json(nlohmann::json& j, const CalibrationResult& r) {
    j = {{"T", r.T},
         {"params", r.params},
         {"objective", r.objective},
         {"model_vols", r.model_vols},
         {"residuals", r.residuals},
         {"n_starts", r.n_starts},
         {"best_start", r.best_start},
         {"converged", r.converged},
         {"underdetermined", r.underdetermined}};
}

std::vector<MarketSmile> read_smiles(const std::string& path) {
    const nlohmann::json j = read_json(path);
    const nlohmann::json& arr = j.is_object() && j.contains("smiles") ? j["smiles"] : j;
    if (!arr.is_array()) fail(ErrorKind::Format, path + ": expected a list of smiles");
    std::vector<MarketSmile> out;
    for (const auto& s : arr) out.push_back(s.get<MarketSmile>());
    return out;
}

}  // namespace sabrdnn
