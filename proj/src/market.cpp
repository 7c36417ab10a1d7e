#include "sabrdnn/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/manifest.hpp"

namespace sabrdnn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        fail(ErrorKind::Format, where + ": bad number '" + s + "'");
    return v;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path, std::vector<std::string>& header) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::Format, path + ": empty file");
    header = split(line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split(line));
        if (rows.back().size() > header.size())
            fail(ErrorKind::Format, path + ": row " + std::to_string(rows.size()) + " has too many cells");
        rows.back().resize(header.size());
    }
    return rows;
}

double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double t) {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const auto i = std::size_t(std::upper_bound(x.begin(), x.end(), t) - x.begin());
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
}

}  // namespace

DiscountCurve::DiscountCurve(Date valuation, std::vector<Date> dates, std::vector<double> dfs) : valuation_(valuation) {
    if (dates.empty() || dates.size() != dfs.size()) fail(ErrorKind::InvalidParameter, "discount curve needs matching dates and factors");
    if (dates.front() != valuation) fail(ErrorKind::InvalidParameter, "discount curve must start at the valuation date");
    if (std::fabs(dfs.front() - 1.0) > 1e-12) fail(ErrorKind::InvalidParameter, "discount factor at valuation must be 1");
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (i && !(dates[i] > dates[i - 1])) fail(ErrorKind::InvalidParameter, "discount curve dates must increase");
        if (!(dfs[i] > 0.0)) fail(ErrorKind::InvalidParameter, "discount factors must be positive");
        t_.push_back(act365(valuation, dates[i]));
        log_df_.push_back(std::log(dfs[i]));
    }
    log_df_.front() = 0.0;
}

DiscountCurve DiscountCurve::read_csv(const std::string& path) {
    std::vector<std::string> header;
    const auto rows = read_rows(path, header);
    if (header.size() != 2 || header[0] != "date" || header[1] != "discount_factor")
        fail(ErrorKind::Format, path + ": expected header 'date,discount_factor'");
    if (rows.empty()) fail(ErrorKind::Format, path + ": no curve points");
    std::vector<Date> d;
    std::vector<double> p;
    for (const auto& r : rows) {
        d.push_back(parse_date(r[0]));
        p.push_back(to_double(r[1], path));
    }
    return DiscountCurve(d.front(), d, p);
}

double DiscountCurve::df(Date d) const { return df(act365(valuation_, d)); }

double DiscountCurve::df(double t) const {
    if (t < 0.0) fail(ErrorKind::Domain, "discount factor requested before the valuation date");
    if (t_.size() == 1) return 1.0;
    std::size_t i = std::size_t(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin());
    i = std::clamp<std::size_t>(i, 1, t_.size() - 1);
    const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
    return std::exp(log_df_[i - 1] + w * (log_df_[i] - log_df_[i - 1]));
}

ForwardCurve::ForwardCurve(std::vector<double> times, std::vector<double> forwards)
    : t_(std::move(times)), f_(std::move(forwards)) {
    if (t_.empty() || t_.size() != f_.size()) fail(ErrorKind::InvalidParameter, "forward curve needs matching times and rates");
    for (std::size_t i = 1; i < t_.size(); ++i)
        if (!(t_[i] > t_[i - 1])) fail(ErrorKind::InvalidParameter, "forward curve times must increase");
}

ForwardCurve ForwardCurve::read_csv(const std::string& path, Date valuation) {
    std::vector<std::string> header;
    const auto rows = read_rows(path, header);
    if (header.size() != 2 || header[0] != "fixing_date" || header[1] != "forward")
        fail(ErrorKind::Format, path + ": expected header 'fixing_date,forward'");
    if (rows.empty()) fail(ErrorKind::Format, path + ": no forwards");
    std::vector<double> t, f;
    for (const auto& r : rows) {
        t.push_back(act365(valuation, parse_date(r[0])));
        f.push_back(to_double(r[1], path));
    }
    return ForwardCurve(t, f);
}

double ForwardCurve::at(double t) const { return interp_linear(t_, f_, t); }

namespace {

CapSchedule schedule_dates(Date valuation, int n_periods, int tenor_months, const DiscountCurve& curve) {
    if (n_periods < 1 || tenor_months < 1) fail(ErrorKind::InvalidParameter, "schedule needs positive size and tenor");
    CapSchedule s;
    s.valuation = valuation;
    s.spot = add_business_days(valuation, kSpotLag);
    s.tenor_months = tenor_months;
    for (int k = 0; k < n_periods; ++k) {
        CapletPeriod p;
        p.start = modified_following(add_months(s.spot, k * tenor_months));
        p.end = modified_following(add_months(s.spot, (k + 1) * tenor_months));
        p.fixing = add_business_days(p.start, -kFixingLag);
        p.fixing_time = std::max(0.0, act365(valuation, p.fixing));
        p.accrual = act360(p.start, p.end);
        p.discount = curve.df(p.end);
        s.periods.push_back(p);
    }
    return s;
}

}  // namespace

CapSchedule make_schedule(Date valuation, int n_periods, int tenor_months, const DiscountCurve& curve,
                          const ForwardCurve& fwd) {
    CapSchedule s = schedule_dates(valuation, n_periods, tenor_months, curve);
    for (auto& p : s.periods) p.forward = fwd.at(p.fixing_time);
    return s;
}

CapSchedule make_schedule(Date valuation, int n_periods, int tenor_months, const DiscountCurve& curve) {
    CapSchedule s = schedule_dates(valuation, n_periods, tenor_months, curve);
    for (auto& p : s.periods) p.forward = (curve.df(p.start) / p.discount - 1.0) / p.accrual;
    return s;
}

int periods_for_maturity(int maturity_months, int tenor_months) {
    if (maturity_months <= 0 || tenor_months <= 0 || maturity_months % tenor_months != 0)
        fail(ErrorKind::InvalidParameter, "cap maturity must be a positive multiple of the tenor");
    return maturity_months / tenor_months;
}

double variance_interp(double t, double t0, double sigma0, double t1, double sigma1) {
    if (t == t1) return sigma1;
    if (t == t0) return sigma0;
    if (!(t1 > t0) || t < t0 || t > t1) fail(ErrorKind::Domain, "variance interpolation outside its bracket");
    const double w = (t - t0) / (t1 - t0);
    const double var = sigma0 * sigma0 * t0 + w * (sigma1 * sigma1 * t1 - sigma0 * sigma0 * t0);
    if (!(var >= 0.0)) fail(ErrorKind::Numerical, "total variance decreases across the bracket");
    return std::sqrt(var / t);
}

double caplet_price(const CapletPeriod& p, double K, int omega, double vol, double lambda) {
    if (!(K + lambda > 0.0)) fail(ErrorKind::Domain, "strike below -lambda");
    return p.discount * p.accrual * black_price(p.forward + lambda, K + lambda, vol * vol * p.fixing_time, omega);
}

double price_cap(const CapSchedule& sched, int n, double K, int omega, const std::vector<double>& vols, double lambda) {
    if (n < 1 || std::size_t(n) > sched.periods.size() || vols.size() < std::size_t(n))
        fail(ErrorKind::InvalidParameter, "cap spans more periods than the schedule or the vols provide");
    double v = 0.0;
    for (int k = 1; k < n; ++k) v += caplet_price(sched.periods[std::size_t(k)], K, omega, vols[std::size_t(k)], lambda);
    return v;
}

double atm_strike(const CapSchedule& sched, int n) {
    if (n < 2 || std::size_t(n) > sched.periods.size()) fail(ErrorKind::InvalidParameter, "ATM strike needs at least two periods");
    double num = 0.0, den = 0.0;
    for (int k = 1; k < n; ++k) {
        const auto& p = sched.periods[std::size_t(k)];
        num += p.discount * p.accrual * p.forward;
        den += p.discount * p.accrual;
    }
    return num / den;
}

int quote_omega(double K, double atm) { return K < atm ? -1 : 1; }

CapFloorQuoteSurface CapFloorQuoteSurface::read_csv(const std::string& path, Date valuation) {
    std::vector<std::string> header;
    const auto rows = read_rows(path, header);
    if (header.size() < 4 || header[0] != "maturity" || header[1] != "tenor" || header[2] != "atm_strike" ||
        header[3] != "atm_premium")
        fail(ErrorKind::Format, path + ": expected header 'maturity,tenor,atm_strike,atm_premium,<strikes>'");
    CapFloorQuoteSurface s;
    s.valuation = valuation;
    for (std::size_t c = 4; c < header.size(); ++c) {
        s.strikes.push_back(to_double(header[c], path));
        if (c > 4 && !(s.strikes.back() > s.strikes[s.strikes.size() - 2]))
            fail(ErrorKind::Format, path + ": strike columns must increase");
    }
    for (const auto& r : rows) {
        CapFloorQuote q;
        q.maturity_months = parse_tenor(r[0]);
        q.tenor_months = parse_tenor(r[1]);
        q.atm_strike = to_double(r[2], path);
        if (!r[3].empty()) q.atm_premium = to_double(r[3], path);
        for (std::size_t c = 4; c < header.size(); ++c)
            q.premiums.push_back(r[c].empty() ? std::nullopt : std::optional<double>(to_double(r[c], path)));
        s.rows.push_back(std::move(q));
    }
    return s;
}

std::string CapFloorQuoteSurface::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "maturity,tenor,atm_strike,atm_premium";
    for (double K : strikes) os << ',' << K;
    os << '\n';
    for (const auto& q : rows) {
        os << q.maturity_months << "M," << q.tenor_months << "M," << q.atm_strike << ',';
        if (q.atm_premium) os << *q.atm_premium;
        for (const auto& p : q.premiums) {
            os << ',';
            if (p) os << *p;
        }
        os << '\n';
    }
    return os.str();
}

namespace {

struct ColumnState {
    std::vector<double> vol;
    std::vector<double> strike;
    std::vector<bool> flag;
    int last = 0;  // highest stripped period
};

// Premium of periods [1, n) where periods up to `last` use stripped vols and the rest follow from sigma at n-1.
double trial_price(const CapSchedule& sched, const ColumnState& c, int n, double K, int omega, double sigma,
                   double lambda) {
    double v = 0.0;
    const auto& pl = sched.periods[std::size_t(c.last)];
    const auto& pn = sched.periods[std::size_t(n - 1)];
    for (int k = 1; k < n; ++k) {
        const auto& p = sched.periods[std::size_t(k)];
        double s;
        if (k <= c.last)
            s = c.vol[std::size_t(k)];
        else if (c.last == 0)
            s = sigma;
        else
            s = variance_interp(p.fixing_time, pl.fixing_time, c.vol[std::size_t(c.last)], pn.fixing_time, sigma);
        v += caplet_price(p, K, omega, s, lambda);
    }
    return v;
}

std::optional<double> solve_vol(const std::function<double(double)>& price, double target) {
    double lo = 1e-6, hi = 0.5;
    if (!(price(lo) <= target)) return std::nullopt;
    while (price(hi) < target) {
        hi *= 2.0;
        if (hi > 1e3) return std::nullopt;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-16 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (price(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void strip_column(const CapSchedule& sched, const std::vector<const CapFloorQuote*>& quotes, std::size_t col,
                  bool atm, double fixed_K, double lambda, ColumnState& c, std::vector<std::string>& warnings) {
    for (const CapFloorQuote* q : quotes) {
        const std::optional<double> prem = atm ? q->atm_premium : q->premiums[col];
        if (!prem) continue;
        const int n = periods_for_maturity(q->maturity_months, q->tenor_months);
        if (n - 1 <= c.last) continue;
        const double K = atm ? q->atm_strike : fixed_K;
        const int omega = atm ? 1 : quote_omega(K, q->atm_strike);
        const auto f = [&](double s) { return trial_price(sched, c, n, K, omega, s, lambda); };
        std::optional<double> sigma;
        try {
            sigma = solve_vol(f, *prem);
        } catch (const Error&) {
        }
        const auto& pl = sched.periods[std::size_t(c.last)];
        const auto& pn = sched.periods[std::size_t(n - 1)];
        for (int k = c.last + 1; k < n; ++k) {
            const auto& p = sched.periods[std::size_t(k)];
            const std::size_t i = std::size_t(k);
            c.strike[i] = K;
            if (!sigma) {
                c.vol[i] = c.last > 0 ? c.vol[std::size_t(c.last)] : kNaN;
                c.flag[i] = true;
            } else if (c.last == 0) {
                c.vol[i] = *sigma;
            } else {
                c.vol[i] = variance_interp(p.fixing_time, pl.fixing_time, c.vol[std::size_t(c.last)], pn.fixing_time, *sigma);
            }
        }
        if (!sigma)
            warnings.push_back("no vol reprices the " + std::to_string(q->maturity_months) + "M quote in column " +
                               (atm ? std::string("ATM") : std::to_string(fixed_K)));
        c.last = n - 1;
    }
}

}  // namespace

StrippedSurface strip_caplet_vols(const CapFloorQuoteSurface& quotes, const DiscountCurve& curve, const ForwardCurve& fwd,
                                  int tenor_months, double lambda) {
    std::vector<const CapFloorQuote*> rows;
    for (const auto& q : quotes.rows) {
        if (q.tenor_months != tenor_months) continue;
        if (q.premiums.size() != quotes.strikes.size()) fail(ErrorKind::Format, "quote row width differs from the strike list");
        rows.push_back(&q);
    }
    if (rows.empty()) fail(ErrorKind::Format, "no quotes for tenor " + std::to_string(tenor_months) + "M");
    std::stable_sort(rows.begin(), rows.end(),
                     [](const CapFloorQuote* a, const CapFloorQuote* b) { return a->maturity_months < b->maturity_months; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i]->maturity_months == rows[i - 1]->maturity_months)
            fail(ErrorKind::Format, "duplicate quote for maturity " + std::to_string(rows[i]->maturity_months) + "M");

    const int n_rows = periods_for_maturity(rows.back()->maturity_months, tenor_months);
    StrippedSurface s;
    s.schedule = make_schedule(quotes.valuation, n_rows, tenor_months, curve, fwd);
    s.strikes = quotes.strikes;
    const std::size_t n_cols = s.n_cols();
    s.vols.assign(std::size_t(n_rows), std::vector<double>(n_cols, kNaN));
    s.column_strike.assign(std::size_t(n_rows), std::vector<double>(n_cols, kNaN));
    s.flagged.assign(std::size_t(n_rows), std::vector<bool>(n_cols, true));

    std::vector<std::vector<std::string>> warnings(n_cols);
    std::vector<ColumnState> cols(n_cols);
#pragma omp parallel for schedule(dynamic, 1)
    for (int ci = 0; ci < int(n_cols); ++ci) {
        const std::size_t col = std::size_t(ci);
        const bool atm = col == quotes.strikes.size();
        const double K = atm ? kNaN : quotes.strikes[col];
        ColumnState& c = cols[col];
        c = {std::vector<double>(std::size_t(n_rows), kNaN), std::vector<double>(std::size_t(n_rows), K),
             std::vector<bool>(std::size_t(n_rows), false), 0};
        strip_column(s.schedule, rows, col, atm, K, lambda, c, warnings[col]);
    }
    // vector<bool> rows are not safe to write from several threads
    for (std::size_t col = 0; col < n_cols; ++col) {
        const ColumnState& c = cols[col];
        for (int k = 1; k < n_rows; ++k) {
            const std::size_t i = std::size_t(k);
            s.vols[i][col] = c.vol[i];
            s.column_strike[i][col] = c.strike[i];
            s.flagged[i][col] = k > c.last || c.flag[i];
        }
        s.column_strike[0][col] = c.strike[0];
    }
    for (auto& w : warnings) s.warnings.insert(s.warnings.end(), w.begin(), w.end());
    return s;
}

double reprice_quote(const StrippedSurface& s, const CapFloorQuote& q, std::size_t col, double lambda) {
    if (col >= s.n_cols()) fail(ErrorKind::InvalidParameter, "column out of range");
    const int n = periods_for_maturity(q.maturity_months, q.tenor_months);
    if (n > int(s.n_rows())) fail(ErrorKind::InvalidParameter, "quote runs past the stripped surface");
    const bool atm = col == s.strikes.size();
    const double K = atm ? q.atm_strike : s.strikes[col];
    const int omega = atm ? 1 : quote_omega(K, q.atm_strike);
    std::vector<double> vols(static_cast<std::size_t>(n));
    for (int k = 1; k < n; ++k) vols[std::size_t(k)] = s.vols[std::size_t(k)][col];
    return price_cap(s.schedule, n, K, omega, vols, lambda);
}

std::string StrippedSurface::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "fixing_date,fixing_time,forward,column,strike,vol,flagged\n";
    for (std::size_t i = 0; i < n_rows(); ++i) {
        const auto& p = schedule.periods[i];
        for (std::size_t c = 0; c < n_cols(); ++c) {
            os << format_date(p.fixing) << ',' << p.fixing_time << ',' << p.forward << ',';
            if (c == strikes.size())
                os << "ATM,";
            else
                os << c << ',';
            if (std::isfinite(column_strike[i][c])) os << column_strike[i][c];
            os << ',';
            if (std::isfinite(vols[i][c])) os << vols[i][c];
            os << ',' << (flagged[i][c] ? 1 : 0) << '\n';
        }
    }
    return os.str();
}

std::vector<MarketSmile> surface_smiles(const StrippedSurface& s, double lambda) {
    std::vector<MarketSmile> out;
    for (std::size_t i = 1; i < s.n_rows(); ++i) {
        const auto& p = s.schedule.periods[i];
        MarketSmile m;
        m.T = p.fixing_time;
        m.F0 = p.forward;
        m.lambda = lambda;
        for (std::size_t c = 0; c < s.strikes.size(); ++c) {
            if (s.flagged[i][c] || !(s.vols[i][c] > 0.0)) continue;
            m.strikes.push_back(s.strikes[c]);
            m.vols.push_back(s.vols[i][c]);
        }
        if (!m.strikes.empty()) out.push_back(std::move(m));
    }
    return out;
}

SabrVolSurface::SabrVolSurface(std::vector<CalibrationResult> pillars, const SmilePricer& pricer)
    : pillars_(std::move(pillars)), pricer_(pricer) {
    if (pillars_.empty()) fail(ErrorKind::InvalidParameter, "vol surface needs at least one calibrated pillar");
    std::sort(pillars_.begin(), pillars_.end(), [](const auto& a, const auto& b) { return a.T < b.T; });
    for (std::size_t i = 1; i < pillars_.size(); ++i)
        if (!(pillars_[i].T > pillars_[i - 1].T)) fail(ErrorKind::InvalidParameter, "duplicate pillar maturity");
}

double SabrVolSurface::vol(double T, double K) const {
    if (T < T_min() || T > T_max())
        fail(ErrorKind::Domain, "maturity " + std::to_string(T) + " outside the calibrated pillars; no extrapolation");
    const auto at = [&](const CalibrationResult& r) { return pricer_.vols(r.params, r.T, {K}).front(); };
    const auto it = std::lower_bound(pillars_.begin(), pillars_.end(), T, [](const auto& r, double t) { return r.T < t; });
    if (it->T == T) return at(*it);
    const auto& a = *(it - 1);
    const auto& b = *it;
    return variance_interp(T, a.T, at(a), b.T, at(b));
}

double price_option(const SabrVolSurface& s, double T, double F, double K, int omega, double lambda) {
    if (!(F + lambda > 0.0) || !(K + lambda > 0.0)) fail(ErrorKind::Domain, "forward and strike must exceed -lambda");
    const double v = s.vol(T, K);
    return black_price(F + lambda, K + lambda, v * v * T, omega);
}

double price_cap(const SabrVolSurface& s, const CapSchedule& sched, int n, double K, int omega, double lambda) {
    if (n < 1 || std::size_t(n) > sched.periods.size()) fail(ErrorKind::InvalidParameter, "cap runs past the schedule");
    double v = 0.0;
    for (int k = 1; k < n; ++k) {
        const auto& p = sched.periods[std::size_t(k)];
        v += p.discount * p.accrual * price_option(s, p.fixing_time, p.forward, K, omega, lambda);
    }
    return v;
}

}  // namespace sabrdnn
