#include "sabrdnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <omp.h>

#include "sabrdnn/black.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/manifest.hpp"
#include "sabrdnn/rng.hpp"

namespace sabrdnn {

namespace {

enum SeedTag : std::uint64_t { kTagLhs = 1, kTagAxes = 2, kTagMc = 3, kTagSplit = 4 };

constexpr double month(int years, int months) { return years + months / 12.0; }

std::vector<Range> month_buckets(std::initializer_list<std::pair<int, int>> edges) {
    std::vector<Range> out;
    const auto* prev = edges.begin();
    for (auto it = prev + 1; it != edges.end(); prev = it++)
        out.push_back({month(prev->first, prev->second), month(it->first, it->second)});
    return out;
}

std::vector<MoneynessBucket> moneyness_layout() { return {{{0.15, 0.70}, 4}, {{0.70, 1.50}, 5}, {{1.50, 3.50}, 4}}; }

}  // namespace

int SubsetSpec::n_strikes() const {
    int n = 0;
    for (const auto& b : moneyness_buckets) n += b.count;
    return n;
}

SubsetSpec subset_spec(int id) {
    SubsetSpec s;
    s.id = id;
    s.F0 = {0.01, 0.05};
    s.alpha = {0.001, 0.2};
    s.beta = {0.1, 0.9};
    s.rho = {-0.8, 0.6};
    s.moneyness_buckets = moneyness_layout();
    s.n_surfaces = 1024;
    s.mc.n_paths = 1ull << 16;
    switch (id) {
        case 1:
            s.nu = {0.05, 1.6};
            s.maturity_span = {0.25, 4.0};
            s.date_buckets = month_buckets({{0, 2}, {0, 5}, {0, 8}, {1, 0}, {1, 4}, {1, 6}, {1, 11}, {2, 5}, {2, 11},
                                            {3, 5}, {3, 11}});
            s.mc.dt_days = 0.5;
            break;
        case 2:
            s.nu = {0.05, 1.2};
            s.maturity_span = {4.0, 10.5};
            s.date_buckets = month_buckets({{3, 10}, {4, 6}, {5, 2}, {5, 10}, {6, 6}, {7, 2}, {7, 10}, {8, 6},
                                            {9, 2}, {9, 10}, {10, 6}});
            s.mc.dt_days = 1.0;
            break;
        case 3: {
            s.beta = {0.05, 0.9};
            s.nu = {0.05, 1.2};
            s.maturity_span = {10.5, 30.0};
            for (int y = 10; y < 30; ++y) s.date_buckets.push_back({month(y, 5), month(y + 1, 5)});
            s.mc.dt_days = 3.0;
            break;
        }
        default:
            fail(ErrorKind::Config, "subset id must be 1, 2 or 3");
    }
    return s;
}

SubsetSpec full_scale_spec(int id) {
    SubsetSpec s = subset_spec(id);
    s.n_surfaces = id == 1 ? (1ull << 20) : (1ull << 18);
    s.mc.n_paths = 1ull << 18;
    return s;
}

int subset_for_maturity(double T) {
    if (!(T >= 0.25 && T <= 30.0)) fail(ErrorKind::Domain, "maturity outside the covered span [0.25, 30]");
    return T < 4.0 ? 1 : (T < 10.5 ? 2 : 3);
}

void validate(const SubsetSpec& s) {
    auto check = [](const Range& r, const char* name) {
        if (!(r.lo <= r.hi)) fail(ErrorKind::Config, std::string("empty range for ") + name);
    };
    check(s.F0, "F0");
    check(s.alpha, "alpha");
    check(s.beta, "beta");
    check(s.rho, "rho");
    check(s.nu, "nu");
    check(s.maturity_span, "maturity_span");
    if (!(s.F0.lo + s.lambda > 0.0)) fail(ErrorKind::Config, "F0 range must keep F0 + lambda > 0");
    if (!(s.alpha.lo > 0.0) || s.beta.lo < 0.0 || s.beta.hi > 1.0 || s.rho.lo <= -1.0 || s.rho.hi >= 1.0 ||
        s.nu.lo < 0.0)
        fail(ErrorKind::Config, "parameter box outside the model domain");
    if (s.date_buckets.empty()) fail(ErrorKind::Config, "no date buckets");
    for (std::size_t i = 0; i < s.date_buckets.size(); ++i) {
        check(s.date_buckets[i], "date bucket");
        if (!(s.date_buckets[i].lo > 0.0)) fail(ErrorKind::Config, "date buckets must be positive");
        if (i && s.date_buckets[i].lo < s.date_buckets[i - 1].hi)
            fail(ErrorKind::Config, "date buckets must be ascending and non-overlapping");
    }
    if (s.moneyness_buckets.empty() || s.n_strikes() < 1) fail(ErrorKind::Config, "no moneyness buckets");
    for (const auto& b : s.moneyness_buckets) {
        check(b.range, "moneyness bucket");
        if (!(b.range.lo > 0.0) || b.count < 0) fail(ErrorKind::Config, "moneyness buckets must be positive");
    }
    if (s.n_surfaces < 1) fail(ErrorKind::Config, "n_surfaces must be positive");
    validate(s.mc);
}

std::vector<std::vector<double>> lhs_sample(const std::vector<Range>& ranges, std::size_t n, std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::InvalidParameter, "LHS needs at least one sample");
    for (const auto& r : ranges)
        if (!(r.lo <= r.hi)) fail(ErrorKind::InvalidParameter, "LHS range with lo > hi");
    UniformStream rng(seed);
    std::vector<std::vector<double>> out(n, std::vector<double>(ranges.size()));
    std::vector<std::size_t> perm(n);
    for (std::size_t d = 0; d < ranges.size(); ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        const double w = (ranges[d].hi - ranges[d].lo) / double(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = ranges[d].lo + w * (double(perm[i]) + rng.next());
            out[i][d] = std::min(v, ranges[d].hi);
        }
    }
    return out;
}

std::vector<SabrParams> sample_subset_params(const SubsetSpec& spec, std::uint64_t seed) {
    const auto rows = lhs_sample({spec.F0, spec.alpha, spec.beta, spec.rho, spec.nu}, spec.n_surfaces,
                                 derive_seed(seed, kTagLhs, std::uint64_t(spec.id)));
    std::vector<SabrParams> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r[0], spec.lambda, r[1], r[2], r[3], r[4]});
    return out;
}

SurfaceAxes sample_surface_axes(const SubsetSpec& spec, std::uint64_t surface_seed) {
    UniformStream rng(surface_seed);
    SurfaceAxes ax;
    for (const auto& b : spec.date_buckets) ax.dates.push_back(rng.uniform(b.lo, b.hi));
    for (std::size_t i = 0; i < ax.dates.size(); ++i) {
        std::vector<double> k;
        for (const auto& b : spec.moneyness_buckets)
            for (int j = 0; j < b.count; ++j) k.push_back(rng.uniform(b.range.lo, b.range.hi));
        std::sort(k.begin(), k.end());
        ax.moneyness.push_back(std::move(k));
    }
    return ax;
}

SurfaceAxes sample_test_axes(const SubsetSpec& spec, std::uint64_t surface_seed) {
    UniformStream rng(surface_seed);
    SurfaceAxes ax;
    for (int i = 0; i < spec.n_dates(); ++i) ax.dates.push_back(rng.uniform(spec.maturity_span.lo, spec.maturity_span.hi));
    std::sort(ax.dates.begin(), ax.dates.end());
    const int total = spec.n_strikes();
    for (std::size_t i = 0; i < ax.dates.size(); ++i) {
        // bucket chosen with probability proportional to its strike count
        int pick = int(rng.below(std::uint64_t(total)));
        std::size_t b = 0;
        while (pick >= spec.moneyness_buckets[b].count) pick -= spec.moneyness_buckets[b++].count;
        const Range r = spec.moneyness_buckets[b].range;
        ax.moneyness.push_back({rng.uniform(r.lo, r.hi)});
    }
    return ax;
}

SurfaceOutcome generate_surface(const SubsetSpec& spec, const SabrParams& params, const SurfaceAxes& axes,
                                std::uint64_t mc_seed) {
    SurfaceOutcome o;
    o.params = params;
    for (const auto& k : axes.moneyness) o.attempted += k.size();
    try {
        const ScaledSabrParams s = scale_params(params);
        McConfig cfg = spec.mc;
        cfg.seed = mc_seed;
        cfg.workers = 1;
        const McSurface surf = price_surface(s, axes.dates, axes.moneyness, cfg);
        for (std::size_t f = 0; f < axes.dates.size(); ++f) {
            for (const McPriceResult& r : surf.prices[f]) {
                const McVol v = extract_vol(r, r.T);
                switch (v.status) {
                    case McVolStatus::Ok:
                        break;
                    case McVolStatus::LowTimeValue:
                    case McVolStatus::DeadPoint:
                        ++o.dropped_time_value;
                        continue;
                    case McVolStatus::InversionFailed:
                        ++o.failed;
                        continue;
                }
                if (v.sigma > kMaxDatasetVol) {
                    ++o.dropped_ceiling;
                    continue;
                }
                o.points.push_back({s.alpha_hat, s.beta, s.rho, s.nu, r.T, r.k_hat, v.sigma, v.vol_err3});
                o.floorlet.push_back(v.floorlet_price);
            }
        }
    } catch (const Error& e) {
        o.points.clear();
        o.floorlet.clear();
        o.error = e.what();
    }
    return o;
}

namespace {

// Runs surfaces in parallel chunks and hands outcomes to `sink` in surface order.
template <class Sink>
GenStats run_generation(const SubsetSpec& spec, const GenOptions& opt, Sink&& sink) {
    validate(spec);
    const std::vector<SabrParams> params = sample_subset_params(spec, opt.seed);
    const std::uint64_t n = params.size();
    const int workers = opt.workers > 0 ? opt.workers : omp_get_max_threads();
    const std::uint64_t chunk = std::uint64_t(std::max(64, 8 * workers));
    GenStats st;
    std::vector<SurfaceOutcome> buf;
    for (std::uint64_t begin = 0; begin < n; begin += chunk) {
        const std::uint64_t end = std::min(n, begin + chunk);
        buf.assign(end - begin, {});
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
        for (std::int64_t l = std::int64_t(begin); l < std::int64_t(end); ++l) {
            const std::uint64_t u = std::uint64_t(l);
            const std::uint64_t axes_seed = derive_seed(opt.seed, kTagAxes, u);
            const SurfaceAxes ax = opt.test_set ? sample_test_axes(spec, axes_seed) : sample_surface_axes(spec, axes_seed);
            buf[u - begin] = generate_surface(spec, params[u], ax, derive_seed(opt.seed, kTagMc, u));
        }
        for (std::uint64_t i = 0; i < buf.size(); ++i) {
            const SurfaceOutcome& o = buf[i];
            ++st.surfaces;
            st.attempted += o.attempted;
            st.dropped_time_value += o.dropped_time_value;
            st.dropped_ceiling += o.dropped_ceiling;
            st.failed += o.failed;
            if (!o.error.empty()) {
                ++st.aborted_surfaces;
                if (opt.on_abort) opt.on_abort(begin + i, o.error);
            }
            st.emitted += o.points.size();
            sink(o);
        }
        if (opt.progress) opt.progress(end, n);
    }
    return st;
}

void append_double(std::string& out, double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, res.ptr);
}

}  // namespace

std::vector<VolPoint> generate_points(const SubsetSpec& spec, const GenOptions& opt, GenStats* stats) {
    std::vector<VolPoint> rows;
    const GenStats st = run_generation(spec, opt, [&](const SurfaceOutcome& o) {
        rows.insert(rows.end(), o.points.begin(), o.points.end());
    });
    if (stats) *stats = st;
    return rows;
}

GenStats generate_subset(const SubsetSpec& spec, const GenOptions& opt, const std::string& out_path) {
    AtomicWriter w(out_path);
    w.stream() << dataset_csv_header() << '\n';
    std::string line;
    const GenStats st = run_generation(spec, opt, [&](const SurfaceOutcome& o) {
        line.clear();
        for (const VolPoint& v : o.points) append_csv_row(line, v);
        w.stream() << line;
    });
    nlohmann::json side;
    side["spec"] = spec;
    side["seed"] = opt.seed;
    side["test_set"] = opt.test_set;
    side["stats"] = st;
    write_file_atomic(out_path + ".json", side.dump(2) + "\n");
    w.commit();
    return st;
}

std::string dataset_csv_header() { return "alpha_hat,beta,rho,nu,T,k_hat,sigma,vol_err3"; }

void append_csv_row(std::string& out, const VolPoint& v) {
    const double f[8] = {v.alpha_hat, v.beta, v.rho, v.nu, v.T, v.k_hat, v.sigma, v.vol_err3};
    for (int i = 0; i < 8; ++i) {
        if (i) out.push_back(',');
        append_double(out, f[i]);
    }
    out.push_back('\n');
}

void write_dataset_csv(const std::vector<VolPoint>& rows, const std::string& path) {
    AtomicWriter w(path);
    std::string buf = dataset_csv_header() + "\n";
    for (const VolPoint& v : rows) {
        append_csv_row(buf, v);
        if (buf.size() > (1u << 20)) {
            w.stream() << buf;
            buf.clear();
        }
    }
    w.stream() << buf;
    w.commit();
}

std::vector<VolPoint> read_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open dataset " + path);
    std::string line;
    if (!std::getline(in, line) || line != dataset_csv_header())
        fail(ErrorKind::Format, path + ": missing or unexpected CSV header");
    std::vector<VolPoint> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double f[8];
        const char* p = line.data();
        const char* end = p + line.size();
        for (int i = 0; i < 8; ++i) {
            const auto res = std::from_chars(p, end, f[i]);
            const bool last = i == 7;
            if (res.ec != std::errc() || (last ? res.ptr != end : (res.ptr == end || *res.ptr != ',')))
                fail(ErrorKind::Format, path + ":" + std::to_string(lineno) + ": malformed row");
            p = res.ptr + 1;
        }
        rows.push_back({f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]});
    }
    return rows;
}

std::pair<std::vector<VolPoint>, std::vector<VolPoint>> split_train_validation(const std::vector<VolPoint>& rows,
                                                                               double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::InvalidParameter, "split fraction must be in (0,1)");
    const std::size_t n = rows.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    UniformStream rng(derive_seed(seed, kTagSplit, 0));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    const std::size_t n_val = std::size_t(std::llround(fraction * double(n)));
    std::vector<char> in_val(n, 0);
    for (std::size_t i = 0; i < n_val; ++i) in_val[perm[i]] = 1;
    std::pair<std::vector<VolPoint>, std::vector<VolPoint>> out;
    out.first.reserve(n - n_val);
    out.second.reserve(n_val);
    for (std::size_t i = 0; i < n; ++i) (in_val[i] ? out.second : out.first).push_back(rows[i]);
    return out;
}

namespace {

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

Range range_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) fail(ErrorKind::Format, "range must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void to_json(nlohmann::json& j, const SubsetSpec& s) {
    j = {{"id", s.id},
         {"F0", range_json(s.F0)},
         {"alpha", range_json(s.alpha)},
         {"beta", range_json(s.beta)},
         {"rho", range_json(s.rho)},
         {"nu", range_json(s.nu)},
         {"lambda", s.lambda},
         {"maturity_span", range_json(s.maturity_span)},
         {"n_surfaces", s.n_surfaces},
         {"mc",
          {{"n_paths", s.mc.n_paths},
           {"dt_days", s.mc.dt_days},
           {"absorption_floor", s.mc.absorption_floor}}}};
    auto& d = j["date_buckets"] = nlohmann::json::array();
    for (const auto& b : s.date_buckets) d.push_back(range_json(b));
    auto& m = j["moneyness_buckets"] = nlohmann::json::array();
    for (const auto& b : s.moneyness_buckets) m.push_back({{"range", range_json(b.range)}, {"count", b.count}});
}

void from_json(const nlohmann::json& j, SubsetSpec& s) {
    try {
        s = subset_spec(j.at("id").get<int>());
        if (j.contains("F0")) s.F0 = range_from(j["F0"]);
        if (j.contains("alpha")) s.alpha = range_from(j["alpha"]);
        if (j.contains("beta")) s.beta = range_from(j["beta"]);
        if (j.contains("rho")) s.rho = range_from(j["rho"]);
        if (j.contains("nu")) s.nu = range_from(j["nu"]);
        if (j.contains("lambda")) s.lambda = j["lambda"].get<double>();
        if (j.contains("maturity_span")) s.maturity_span = range_from(j["maturity_span"]);
        if (j.contains("n_surfaces")) s.n_surfaces = j["n_surfaces"].get<std::uint64_t>();
        if (j.contains("mc")) {
            const auto& m = j["mc"];
            s.mc.n_paths = m.value("n_paths", s.mc.n_paths);
            s.mc.dt_days = m.value("dt_days", s.mc.dt_days);
            s.mc.absorption_floor = m.value("absorption_floor", s.mc.absorption_floor);
        }
        if (j.contains("date_buckets")) {
            s.date_buckets.clear();
            for (const auto& b : j["date_buckets"]) s.date_buckets.push_back(range_from(b));
        }
        if (j.contains("moneyness_buckets")) {
            s.moneyness_buckets.clear();
            for (const auto& b : j["moneyness_buckets"])
                s.moneyness_buckets.push_back({range_from(b.at("range")), b.at("count").get<int>()});
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("bad subset spec: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const GenStats& s) {
    j = {{"surfaces", s.surfaces},
         {"aborted_surfaces", s.aborted_surfaces},
         {"attempted", s.attempted},
         {"emitted", s.emitted},
         {"dropped_time_value", s.dropped_time_value},
         {"dropped_ceiling", s.dropped_ceiling},
         {"failed", s.failed},
         {"drop_fraction", s.drop_fraction()}};
}

}  // namespace sabrdnn
