#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/market.hpp"

using namespace sabrdnn;
using doctest::Approx;

namespace {

const Date kVal = parse_date("2024-08-30");
const std::vector<double> kStrikes{-0.015, -0.01, -0.005, 0.0, 0.005, 0.01, 0.015, 0.02, 0.03, 0.04, 0.05, 0.06, 0.1};
const std::vector<int> kMaturities{36, 48, 60, 72, 84, 96, 108, 120, 144, 180, 240, 300, 360};

DiscountCurve flat_curve(double r) {
    std::vector<Date> d{kVal};
    std::vector<double> p{1.0};
    for (int y = 1; y <= 32; ++y) {
        d.push_back(add_months(kVal, 12 * y));
        p.push_back(std::exp(-r * act365(kVal, d.back())));
    }
    return {kVal, d, p};
}

ForwardCurve upward_forwards() {
    std::vector<double> t, f;
    for (int i = 0; i <= 31; ++i) {
        t.push_back(i);
        f.push_back(0.022 + 0.006 * (1.0 - std::exp(-i / 6.0)));
    }
    return {t, f};
}

using VolFn = double (*)(double t, double K);

double smile_vol(double t, double K) { return 0.18 + 0.06 * std::exp(-t / 4.0) + 3.0 * (K - 0.025) * (K - 0.025); }
double flat_vol(double, double) { return 0.2; }

// Quotes priced from a known caplet vol function.
CapFloorQuoteSurface synthetic_quotes(const DiscountCurve& curve, const ForwardCurve& fwd, VolFn vol) {
    const CapSchedule sched = make_schedule(kVal, 60, 6, curve, fwd);
    CapFloorQuoteSurface q;
    q.valuation = kVal;
    q.strikes = kStrikes;
    for (int m : kMaturities) {
        const int n = periods_for_maturity(m, 6);
        CapFloorQuote row;
        row.maturity_months = m;
        row.tenor_months = 6;
        row.atm_strike = atm_strike(sched, n);
        const auto price = [&](double K, int omega) {
            double v = 0.0;
            for (int k = 1; k < n; ++k) {
                const auto& p = sched.periods[std::size_t(k)];
                v += caplet_price(p, K, omega, vol(p.fixing_time, K), kDefaultShift);
            }
            return v;
        };
        row.atm_premium = price(row.atm_strike, 1);
        for (double K : kStrikes) row.premiums.push_back(price(K, quote_omega(K, row.atm_strike)));
        q.rows.push_back(row);
    }
    return q;
}

}  // namespace

TEST_CASE("dates: parsing, month roll and business days") {
    CHECK(format_date(parse_date("2024-02-29")) == "2024-02-29");
    CHECK_THROWS_AS(parse_date("2023-02-29"), Error);
    CHECK_THROWS_AS(parse_date("2024/01/01"), Error);
    CHECK(format_date(add_months(parse_date("2024-01-31"), 1)) == "2024-02-29");
    CHECK(format_date(add_months(parse_date("2024-08-31"), -6)) == "2024-02-29");
    CHECK(format_date(add_business_days(kVal, 2)) == "2024-09-03");  // Friday + 2
    CHECK(format_date(add_business_days(parse_date("2024-09-03"), -2)) == "2024-08-30");
    CHECK(format_date(modified_following(parse_date("2024-08-31"))) == "2024-08-30");  // Saturday at month end
    CHECK(format_date(modified_following(parse_date("2024-09-01"))) == "2024-09-02");
    CHECK(act360(kVal, add_months(kVal, 12)) == Approx(365.0 / 360.0));
    CHECK(parse_tenor("6M") == 6);
    CHECK(parse_tenor("30Y") == 360);
    CHECK_THROWS_AS(parse_tenor("6W"), Error);
}

TEST_CASE("schedule: smile fixing times of the 30/08/2024 surface") {
    const CapSchedule s = make_schedule(kVal, 60, 6, flat_curve(0.02));
    CHECK(format_date(s.spot) == "2024-09-03");
    // smiles labelled 1.5Y, 10Y and 30Y fix at the start of their last period
    CHECK(s.periods[2].fixing_time == Approx(1.0055).epsilon(5e-5 / 1.0055));
    CHECK(s.periods[19].fixing_time == Approx(9.5068).epsilon(5e-5 / 9.5068));
    CHECK(s.periods[59].fixing_time == Approx(29.5151).epsilon(5e-5 / 29.5151));
    CHECK(s.periods[0].fixing_time == 0.0);
    for (std::size_t i = 1; i < s.periods.size(); ++i) {
        CHECK(s.periods[i].start == s.periods[i - 1].end);
        CHECK(s.periods[i].fixing_time > s.periods[i - 1].fixing_time);
    }
}

TEST_CASE("discount curve: log-linear and anchored") {
    const DiscountCurve c = flat_curve(0.03);
    CHECK(c.df(kVal) == 1.0);
    CHECK(c.df(7.3) == Approx(std::exp(-0.03 * 7.3)).epsilon(1e-12));
    CHECK(c.df(40.0) == Approx(std::exp(-0.03 * 40.0)).epsilon(1e-12));
    CHECK_THROWS_AS(c.df(-0.1), Error);
    CHECK_THROWS_AS(DiscountCurve(kVal, {kVal, kVal}, {1.0, 0.9}), Error);
    CHECK_THROWS_AS(DiscountCurve(kVal, {kVal}, {0.99}), Error);

    const auto dir = std::filesystem::temp_directory_path() / "sabrdnn_market_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "curve.csv") << "date,discount_factor\n2024-08-30,1\n2025-08-30,0.97\n2034-08-30,0.75\n";
    const DiscountCurve r = DiscountCurve::read_csv((dir / "curve.csv").string());
    CHECK(r.valuation() == kVal);
    CHECK(r.df(parse_date("2025-08-30")) == Approx(0.97));
    std::ofstream(dir / "bad.csv") << "date,df\n2024-08-30,1\n";
    CHECK_THROWS_AS(DiscountCurve::read_csv((dir / "bad.csv").string()), Error);
}

TEST_CASE("variance interpolation") {
    CHECK(variance_interp(2.0, 1.0, 0.2, 2.0, 0.1) == 0.1);
    CHECK(variance_interp(1.5, 1.0, 0.2, 2.0, 0.2) == Approx(0.2).epsilon(1e-15));
    CHECK(variance_interp(1.5, 1.0, 0.2, 2.0, 0.1) == Approx(std::sqrt(0.03 / 1.5)).epsilon(1e-15));
    CHECK(variance_interp(1.5, 1.0, 0.2, 2.0, 0.1) == Approx(0.1414).epsilon(1e-4));
    CHECK_THROWS_AS(variance_interp(1.5, 1.0, 0.2, 1.0, 0.1), Error);
    CHECK_THROWS_AS(variance_interp(2.5, 1.0, 0.2, 2.0, 0.1), Error);
}

TEST_CASE("cap pricing: sums of discounted caplets") {
    const CapSchedule s = make_schedule(kVal, 20, 6, flat_curve(0.025));
    const std::vector<double> v(20, 0.2);
    // two periods with the first excluded = one caplet
    CHECK(price_cap(s, 2, 0.03, 1, v, kDefaultShift) == Approx(caplet_price(s.periods[1], 0.03, 1, 0.2, kDefaultShift)));
    CHECK_THROWS_AS(price_cap(s, 5, -0.03, 1, v, kDefaultShift), Error);
    CHECK_THROWS_AS(price_cap(s, 21, 0.03, 1, v, kDefaultShift), Error);
    // parity at the ATM strike
    const double atm = atm_strike(s, 20);
    CHECK(price_cap(s, 20, atm, 1, v, kDefaultShift) == Approx(price_cap(s, 20, atm, -1, v, kDefaultShift)).epsilon(1e-12));
    // monotone in maturity
    double prev = 0.0;
    for (int n = 2; n <= 20; ++n) {
        const double p = price_cap(s, n, 0.02, 1, v, kDefaultShift);
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("stripping: flat 20% surface is recovered") {
    const DiscountCurve curve = flat_curve(0.025);
    const ForwardCurve fwd = upward_forwards();
    const StrippedSurface s = strip_caplet_vols(synthetic_quotes(curve, fwd, flat_vol), curve, fwd);
    CHECK(s.n_rows() == 60);
    CHECK(s.n_cols() == 14);
    CHECK(s.warnings.empty());
    double worst = 0.0;
    for (std::size_t i = 1; i < s.n_rows(); ++i)
        for (std::size_t c = 0; c < s.n_cols(); ++c) {
            CHECK_FALSE(s.flagged[i][c]);
            worst = std::max(worst, std::fabs(s.vols[i][c] - 0.2));
        }
    CHECK(worst < 1e-8);
    for (std::size_t c = 0; c < s.n_cols(); ++c) CHECK(s.flagged[0][c]);
}

TEST_CASE("stripping: smile surface reprices its quotes") {
    const DiscountCurve curve = flat_curve(0.025);
    const ForwardCurve fwd = upward_forwards();
    const CapFloorQuoteSurface q = synthetic_quotes(curve, fwd, smile_vol);
    const StrippedSurface s = strip_caplet_vols(q, curve, fwd);
    CHECK(s.n_rows() == 60);
    CHECK(s.n_cols() == 14);
    double worst = 0.0;
    for (const auto& row : q.rows) {
        for (std::size_t c = 0; c < kStrikes.size(); ++c)
            worst = std::max(worst, std::fabs(reprice_quote(s, row, c) - *row.premiums[c]));
        worst = std::max(worst, std::fabs(reprice_quote(s, row, kStrikes.size()) - *row.atm_premium));
    }
    CHECK(worst < 1e-8);
    // the first quote is stripped with a single flat vol
    for (std::size_t i = 2; i < 6; ++i) CHECK(s.vols[i][8] == s.vols[1][8]);

    const auto smiles = surface_smiles(s);
    CHECK(smiles.size() == 59);
    CHECK(smiles.front().strikes.size() == 13);
    CHECK(smiles.back().T == Approx(29.5151).epsilon(2e-6));
}

TEST_CASE("stripping: single-period steps reduce to implied-vol inversion") {
    const DiscountCurve curve = flat_curve(0.02);
    const ForwardCurve fwd = upward_forwards();
    const CapSchedule sched = make_schedule(kVal, 4, 6, curve, fwd);
    CapFloorQuoteSurface q;
    q.valuation = kVal;
    q.strikes = {0.03};
    std::vector<double> truth{0.0, 0.31, 0.27, 0.22};
    double cum = 0.0;
    for (int n = 2; n <= 4; ++n) {
        const auto& p = sched.periods[std::size_t(n - 1)];
        cum += caplet_price(p, 0.03, 1, truth[std::size_t(n - 1)], kDefaultShift);
        q.rows.push_back({6 * n, 6, 0.0, std::nullopt, {cum}});
    }
    const StrippedSurface s = strip_caplet_vols(q, curve, fwd);
    for (std::size_t i = 1; i < 4; ++i) CHECK(s.vols[i][0] == Approx(truth[i]).epsilon(1e-10));
    CHECK(s.flagged[1][1]);  // no ATM quotes
}

TEST_CASE("stripping: impossible quotes are flagged and stripping continues") {
    const DiscountCurve curve = flat_curve(0.025);
    const ForwardCurve fwd = upward_forwards();
    CapFloorQuoteSurface q = synthetic_quotes(curve, fwd, flat_vol);
    q.rows[3].premiums[10] = *q.rows[2].premiums[10] * 0.5;  // below the earlier caplets: negative time value
    q.rows[5].premiums[2].reset();                           // not quoted
    const StrippedSurface s = strip_caplet_vols(q, curve, fwd);
    CHECK(s.warnings.size() == 1);
    const int lo = periods_for_maturity(q.rows[2].maturity_months, 6), hi = periods_for_maturity(q.rows[3].maturity_months, 6);
    for (int k = lo; k < hi; ++k) CHECK(s.flagged[std::size_t(k)][10]);
    CHECK_FALSE(s.flagged[std::size_t(hi)][10]);
    CHECK_FALSE(s.flagged[59][2]);  // a skipped row is bridged by the next quote

    const double t_bad = s.schedule.periods[std::size_t(lo)].fixing_time;
    for (const auto& m : surface_smiles(s))
        if (m.T == t_bad) CHECK(std::find(m.strikes.begin(), m.strikes.end(), kStrikes[10]) == m.strikes.end());
}

TEST_CASE("quote file round trip") {
    const DiscountCurve curve = flat_curve(0.025);
    const ForwardCurve fwd = upward_forwards();
    CapFloorQuoteSurface q = synthetic_quotes(curve, fwd, smile_vol);
    q.rows[0].premiums[0].reset();
    const auto dir = std::filesystem::temp_directory_path() / "sabrdnn_market_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "quotes.csv") << q.to_csv();
    const CapFloorQuoteSurface r = CapFloorQuoteSurface::read_csv((dir / "quotes.csv").string(), kVal);
    REQUIRE(r.rows.size() == q.rows.size());
    CHECK(r.strikes == q.strikes);
    CHECK_FALSE(r.rows[0].premiums[0].has_value());
    CHECK(*r.rows[4].premiums[7] == *q.rows[4].premiums[7]);
    CHECK(r.rows[12].maturity_months == 360);
}

TEST_CASE("vol surface: pillars and variance interpolation in maturity") {
    HaganPricer hagan;
    const auto pillar = [](double T, double alpha) {
        CalibrationResult r;
        r.T = T;
        r.params = {0.025, kDefaultShift, alpha, 0.5, -0.2, 0.4};
        return r;
    };
    const SabrVolSurface s({pillar(5.0, 0.03), pillar(1.0, 0.03), pillar(10.0, 0.02)}, hagan);
    const double v1 = hagan.vols(pillar(1.0, 0.03).params, 1.0, {0.022})[0];
    CHECK(s.vol(1.0, 0.022) == v1);  // on a pillar
    const double v5 = hagan.vols(pillar(5.0, 0.03).params, 5.0, {0.022})[0];
    const double v10 = hagan.vols(pillar(10.0, 0.02).params, 10.0, {0.022})[0];
    CHECK(s.vol(7.3, 0.022) == Approx(variance_interp(7.3, 5.0, v5, 10.0, v10)).epsilon(1e-14));
    CHECK_THROWS_AS(s.vol(0.5, 0.022), Error);
    CHECK_THROWS_AS(s.vol(10.5, 0.022), Error);

    // flat term structure: mid-pillar value equals the single-pillar one
    struct FlatPricer final : SmilePricer {
        std::vector<double> vols(const SabrParams& p, double, const std::vector<double>& k) const override {
            return std::vector<double>(k.size(), p.alpha);
        }
        std::string name() const override { return "flat"; }
    } flat_pricer;
    const SabrVolSurface f({pillar(2.0, 0.25), pillar(4.0, 0.25)}, flat_pricer);
    CHECK(f.vol(3.1, 0.02) == Approx(0.25).epsilon(1e-14));
    const double p = price_option(f, 3.1, 0.025, 0.02, 1);
    CHECK(p == Approx(black_price(0.055, 0.05, f.vol(3.1, 0.02) * f.vol(3.1, 0.02) * 3.1, 1)).epsilon(1e-14));
}
