#include <cmath>
#include <fstream>

#include "doctest.h"
#include "sabrdnn/calibration.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/hagan.hpp"
#include "sabrdnn/optimizer.hpp"

using namespace sabrdnn;

namespace {

const std::vector<double> kStrikes{-0.015, -0.01, 0.0, 0.005, 0.01, 0.015, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.1};

MarketSmile hagan_smile(const SabrParams& p, double T, const std::vector<double>& strikes = kStrikes) {
    return {T, p.F0, p.lambda, strikes, HaganPricer().vols(p, T, strikes)};
}

}  // namespace

TEST_CASE("box optimizer: interior and active-bound minima") {
    const auto rosen = [](const std::vector<double>& x) {
        return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
    };
    OptimResult r = minimize_box(rosen, {-1.2, 1.0}, {{-2, -2}, {2, 2}});
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));

    // minimum outside the box: the solution sits on the bound
    const auto bowl = [](const std::vector<double>& x) { return std::pow(x[0] - 3, 2) + std::pow(x[1] + 0.5, 2); };
    r = minimize_box(bowl, {0.1, 0.1}, {{0, -1}, {1, 1}});
    CHECK(r.x[0] == 1.0);
    CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-6));

    // start outside is projected
    r = minimize_box(bowl, {10, 10}, {{0, -1}, {1, 1}});
    CHECK(r.x[0] == 1.0);
    CHECK_THROWS_AS(minimize_box(bowl, {0, 0}, {{0, 1}, {1, 1}}), Error);
}

TEST_CASE("vega weights") {
    MarketSmile one{2.0, 0.02, 0.03, {0.02}, {0.2}};
    CHECK(vega_weights(one) == std::vector<double>{1.0});

    MarketSmile sym{2.0, 0.02, 0.03, {}, {}};
    for (double m : {-0.4, -0.2, 0.0, 0.2, 0.4}) {
        sym.strikes.push_back(0.05 * std::exp(m) - 0.03);
        sym.vols.push_back(0.2 + 0.1 * m * m);
    }
    const auto w = vega_weights(sym);
    double total = 0.0;
    for (double x : w) {
        CHECK(x >= 0.0);
        total += x;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::max_element(w.begin(), w.end()) - w.begin() == 2);
}

TEST_CASE("objective: zero at the generating point, positive nearby, invariant to strike order") {
    const SabrParams p{0.0266, 0.03, 0.0209, 0.3369, 0.1572, 0.2758};
    const MarketSmile s = hagan_smile(p, 9.5068);
    const HaganPricer h;
    CHECK(objective(p, s, h) == 0.0);
    SabrParams q = p;
    q.alpha += 1e-4;
    CHECK(objective(q, s, h) > 0.0);

    // reorder strikes together with their vols and weights
    const auto w = vega_weights(s);
    MarketSmile r = s;
    std::vector<double> rw = w;
    std::reverse(r.strikes.begin(), r.strikes.end());
    std::reverse(r.vols.begin(), r.vols.end());
    std::reverse(rw.begin(), rw.end());
    double direct = 0.0, reversed = 0.0;
    const auto vd = h.vols(q, s.T, s.strikes), vr = h.vols(q, r.T, r.strikes);
    for (std::size_t j = 0; j < w.size(); ++j) {
        direct += w[j] * std::pow(vd[j] - s.vols[j], 2);
        reversed += rw[j] * std::pow(vr[j] - r.vols[j], 2);
    }
    CHECK(reversed == doctest::Approx(direct).epsilon(1e-14));
    CHECK(objective(q, s, h, w) == doctest::Approx(std::sqrt(direct)).epsilon(1e-14));

    // a parameter set where the expansion breaks down is penalized, not thrown
    const SabrParams bad{0.0266, 0.03, 0.2, 0.9, -0.8, 1.2};
    CHECK(objective(bad, hagan_smile(p, 29.5), h) == kObjectivePenalty);
}

TEST_CASE("synthetic Hagan smile round trip") {
    const SabrParams p{0.0228, 0.03, 0.0225, 0.351, -0.1232, 0.8969};
    const MarketSmile s = hagan_smile(p, 1.0055);
    CalibrationOptions opt;
    opt.n_starts = 24;
    opt.seed = 4;
    const CalibrationResult r = calibrate_smile(s, HaganPricer(), opt);
    CHECK(r.objective < 1e-8);
    for (double e : r.residuals) CHECK(std::fabs(e) < 1e-6);
    CHECK(r.converged);
    CHECK_FALSE(r.underdetermined);
    CHECK(r.best_start >= 0);

    const MarketSmile single{1.0055, 0.0228, 0.03, {0.01}, {0.23}};
    const CalibrationResult u = calibrate_smile(single, HaganPricer(), opt);
    CHECK(u.underdetermined);
    CHECK(u.objective < 1e-8);
}

TEST_CASE("term structure runs smiles independently") {
    const SabrParams p{0.0266, 0.03, 0.0209, 0.3369, 0.1572, 0.2758};
    const MarketSmile s = hagan_smile(p, 9.5068);
    MarketSmile broken = s;
    broken.T = 40.0;  // outside every subset
    CalibrationOptions opt;
    opt.n_starts = 8;
    const auto ts = term_structure_calibrate({s, broken, s}, HaganPricer(), opt);
    REQUIRE(ts.size() == 3);
    CHECK(ts[0].error.empty());
    CHECK_FALSE(ts[1].error.empty());
    CHECK(ts[0].result.params.alpha == ts[2].result.params.alpha);
    CHECK(ts[0].result.objective == ts[2].result.objective);
    const std::string csv = term_structure_csv(ts);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("RMSD and ARD") {
    const std::vector<double> mc{0.2, 0.3, 0.4};
    CHECK(rmsd(mc, mc) == 0.0);
    CHECK(rmsd({0.22, 0.33, 0.44}, mc) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ard(0.2307, 0.2044) == doctest::Approx(0.12867).epsilon(1e-4));
    CHECK_THROWS_AS(ard(0.1, 0.0), Error);
}

TEST_CASE("MC smile at Black-limit parameters matches the flat vol") {
    const SabrParams p{0.02, 0.03, 0.25, 1.0, 0.0, 0.0};
    McConfig cfg;
    cfg.n_paths = 1 << 14;
    cfg.dt_days = 5;
    cfg.seed = 3;
    const McSmile m = mc_smile(p, 2.0, {0.0, 0.02, 0.04}, cfg);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(m.status[j] == McVolStatus::Ok);
        CHECK(std::fabs(m.vols[j] - 0.25) < m.err3[j]);
    }
}

TEST_CASE("smile JSON") {
    MarketSmile s{1.0, 0.02, 0.03, {0.0, 0.01}, {0.3, 0.25}};
    const nlohmann::json j = s;
    const MarketSmile t = j.get<MarketSmile>();
    CHECK(t.vols == s.vols);
    nlohmann::json bad = j;
    bad["strikes"] = {0.01, 0.0};
    CHECK_THROWS_AS(bad.get<MarketSmile>(), Error);
}
