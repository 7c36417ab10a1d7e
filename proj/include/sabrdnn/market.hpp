#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sabrdnn/calibration.hpp"
#include "sabrdnn/dates.hpp"
#include "sabrdnn/params.hpp"

namespace sabrdnn {

inline constexpr int kSpotLag = 2;
inline constexpr int kFixingLag = 2;

// Log-linear interpolation of discount factors; flat forward rate beyond the last pillar.
class DiscountCurve {
public:
    DiscountCurve(Date valuation, std::vector<Date> dates, std::vector<double> dfs);

    // CSV "date,discount_factor"; the first row is the valuation date with factor 1.
    static DiscountCurve read_csv(const std::string& path);

    Date valuation() const { return valuation_; }
    double df(Date d) const;
    double df(double t) const;  // ACT/365 years from valuation

private:
    Date valuation_;
    std::vector<double> t_;
    std::vector<double> log_df_;
};

// Forward rates per fixing date, linear in ACT/365 time, flat outside.
class ForwardCurve {
public:
    ForwardCurve(std::vector<double> times, std::vector<double> forwards);

    // CSV "fixing_date,forward" relative to a valuation date.
    static ForwardCurve read_csv(const std::string& path, Date valuation);

    double at(double t) const;

private:
    std::vector<double> t_;
    std::vector<double> f_;
};

struct CapletPeriod {
    Date fixing, start, end;
    double fixing_time = 0.0;  // ACT/365 from valuation
    double accrual = 0.0;      // ACT/360
    double discount = 1.0;     // at payment
    double forward = 0.0;
};

// Regular schedule from spot; period k runs spot + (k-1) tenor to spot + k tenor.
struct CapSchedule {
    Date valuation, spot;
    int tenor_months = 6;
    std::vector<CapletPeriod> periods;
};

CapSchedule make_schedule(Date valuation, int n_periods, int tenor_months, const DiscountCurve& curve,
                          const ForwardCurve& fwd);
// Forwards implied by the curve: (P(start) / P(end) - 1) / accrual.
CapSchedule make_schedule(Date valuation, int n_periods, int tenor_months, const DiscountCurve& curve);

// Number of periods a cap of the given maturity spans.
int periods_for_maturity(int maturity_months, int tenor_months);

// Total-variance interpolation between two fixings.
double variance_interp(double t, double t0, double sigma0, double t1, double sigma1);

// Sum of caplets (omega = 1) or floorlets (omega = -1) over periods [1, n); the first one fixes at spot and is left out.
double price_cap(const CapSchedule& sched, int n, double K, int omega, const std::vector<double>& vols, double lambda);
double caplet_price(const CapletPeriod& p, double K, int omega, double vol, double lambda);

// Strike at which the cap and the floor over periods [1, n) are worth the same.
double atm_strike(const CapSchedule& sched, int n);

struct CapFloorQuote {
    int maturity_months = 0;
    int tenor_months = 6;
    double atm_strike = 0.0;
    std::optional<double> atm_premium;
    std::vector<std::optional<double>> premiums;  // one per surface strike; empty = not quoted
};

// Premiums per unit notional. Below the ATM strike the quote is a floor, otherwise a cap.
struct CapFloorQuoteSurface {
    Date valuation;
    std::vector<double> strikes;
    std::vector<CapFloorQuote> rows;

    // "maturity,tenor,atm_strike,atm_premium,<strike>..." with the valuation date passed separately.
    static CapFloorQuoteSurface read_csv(const std::string& path, Date valuation);
    std::string to_csv() const;
};

int quote_omega(double K, double atm);

struct StrippedSurface {
    CapSchedule schedule;
    std::vector<double> strikes;  // fixed strike columns; the last column is ATM
    std::vector<std::vector<double>> vols;
    std::vector<std::vector<double>> column_strike;  // differs from strikes only in the ATM column
    std::vector<std::vector<bool>> flagged;
    std::vector<std::string> warnings;

    std::size_t n_rows() const { return vols.size(); }
    std::size_t n_cols() const { return strikes.size() + 1; }
    std::string to_csv() const;
};

// Column-by-column bootstrap of caplet vols from quotes of the given tenor.
StrippedSurface strip_caplet_vols(const CapFloorQuoteSurface& quotes, const DiscountCurve& curve,
                                  const ForwardCurve& fwd, int tenor_months = 6, double lambda = kDefaultShift);

// Reprice a quote from stripped vols (column index as in StrippedSurface).
double reprice_quote(const StrippedSurface& s, const CapFloorQuote& q, std::size_t col, double lambda = kDefaultShift);

// One smile per unflagged fixing, fixed-strike columns only.
std::vector<MarketSmile> surface_smiles(const StrippedSurface& s, double lambda = kDefaultShift);

// Calibrated pillars in increasing maturity; strikes via the pillar model, maturities via total variance.
class SabrVolSurface {
public:
    SabrVolSurface(std::vector<CalibrationResult> pillars, const SmilePricer& pricer);

    double vol(double T, double K) const;
    double T_min() const { return pillars_.front().T; }
    double T_max() const { return pillars_.back().T; }

private:
    std::vector<CalibrationResult> pillars_;
    const SmilePricer& pricer_;
};

// Undiscounted shifted-Black caplet or floorlet on forward F with fixing at T.
double price_option(const SabrVolSurface& s, double T, double F, double K, int omega, double lambda = kDefaultShift);

// Cap over the schedule's periods [1, n) priced with surface vols.
double price_cap(const SabrVolSurface& s, const CapSchedule& sched, int n, double K, int omega,
                 double lambda = kDefaultShift);

}  // namespace sabrdnn
