#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include "sabrdnn/black.hpp"
#include "sabrdnn/calibration.hpp"
#include "sabrdnn/dataset.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/manifest.hpp"
#include "sabrdnn/market.hpp"
#include "sabrdnn/mc.hpp"
#include "sabrdnn/mlp.hpp"
#include "sabrdnn/rng.hpp"

namespace sabrdnn::cli {

namespace {

using nlohmann::json;

// Every option of a subcommand with its effective value, defaults included.
json options_json(const CLI::App& sub) {
    json j = json::object();
    for (const CLI::Option* o : sub.get_options()) {
        const std::string name = o->get_name(false, true);
        const std::string key = o->get_single_name();
        if (name.empty() || key == "help") continue;
        if (o->get_expected_min() == 0) {
            j[key] = o->count() > 0;
            continue;
        }
        const auto& r = o->results();
        if (!r.empty())
            j[key] = r.size() == 1 ? json(r.front()) : json(r);
        else if (!o->get_default_str().empty())
            j[key] = o->get_default_str();
        else
            j[key] = nullptr;
    }
    return j;
}

void require_file(const std::string& path, const std::string& what) {
    if (!std::filesystem::is_regular_file(path)) fail(ErrorKind::Io, what + " not found: " + path);
}

void require_dir(const std::string& path, const std::string& what) {
    if (!std::filesystem::is_directory(path)) fail(ErrorKind::Io, what + " not found: " + path);
}

std::string sibling(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    const std::string stem = p.extension().empty() ? p.filename().string() : p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Workers flag shared by every command; SABRDNN_WORKERS sets the default.
void add_workers(CLI::App* sub, int& workers) {
    sub->add_option("--workers", workers, "Worker threads (0: all cores); results do not depend on it")
        ->envname("SABRDNN_WORKERS")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

std::unique_ptr<SmilePricer> make_pricer(const std::string& kind, const std::string& models_dir,
                                         std::optional<ModelRouter>& router) {
    if (kind == "hagan") return std::make_unique<HaganPricer>();
    if (models_dir.empty()) fail(ErrorKind::Config, "--pricer dnn needs --models DIR");
    require_dir(models_dir, "model directory");
    router = ModelRouter::load_dir(models_dir);
    return std::make_unique<DnnPricer>(*router);
}

// Calibration output -> successful pillars.
std::vector<CalibrationResult> read_pillars(const std::string& path) {
    const json j = read_json(path);
    if (!j.contains("entries") || !j["entries"].is_array()) fail(ErrorKind::Format, path + ": not a calibration result");
    std::vector<CalibrationResult> out;
    try {
        for (const auto& e : j["entries"]) {
            if (!e.contains("result")) continue;
            CalibrationResult r;
            r.T = e["result"].at("T").get<double>();
            r.params = e["result"].at("params").get<SabrParams>();
            r.objective = e["result"].at("objective").get<double>();
            out.push_back(r);
        }
    } catch (const json::exception& ex) {
        fail(ErrorKind::Format, path + ": " + ex.what());
    }
    if (out.empty()) fail(ErrorKind::Format, path + ": no calibrated smiles");
    return out;
}

std::vector<MarketSmile> read_calibrated_smiles(const std::string& path, std::vector<CalibrationResult>& results) {
    const json j = read_json(path);
    if (!j.contains("entries")) fail(ErrorKind::Format, path + ": not a calibration result");
    std::vector<MarketSmile> smiles;
    for (const auto& e : j["entries"]) {
        if (!e.contains("result")) continue;
        smiles.push_back(e.at("smile").get<MarketSmile>());
        CalibrationResult r;
        r.T = e["result"].at("T").get<double>();
        r.params = e["result"].at("params").get<SabrParams>();
        results.push_back(r);
    }
    if (smiles.empty()) fail(ErrorKind::Format, path + ": no calibrated smiles");
    return smiles;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    int subset = 1;
    std::uint64_t surfaces = 0, paths = 0, seed = 0;
    double dt_days = 0.0;
    std::string out;
    bool test_set = false, quiet = false;
    int workers = 0;
};

void run_gen(const CLI::App& sub, const GenArgs& a) {
    SubsetSpec spec = subset_spec(a.subset);
    if (a.surfaces) spec.n_surfaces = a.surfaces;
    if (a.paths) spec.mc.n_paths = a.paths;
    if (a.dt_days > 0.0) spec.mc.dt_days = a.dt_days;
    validate(spec);
    GenOptions opt;
    opt.seed = a.seed;
    opt.test_set = a.test_set;
    opt.workers = a.workers;
    if (!a.quiet)
        opt.progress = [](std::uint64_t done, std::uint64_t total) {
            std::fprintf(stderr, "\r%llu/%llu surfaces", static_cast<unsigned long long>(done),
                         static_cast<unsigned long long>(total));
            if (done == total) std::fputc('\n', stderr);
        };
    opt.on_abort = [](std::uint64_t s, const std::string& what) {
        std::fprintf(stderr, "surface %llu skipped: %s\n", static_cast<unsigned long long>(s), what.c_str());
    };
    const GenStats st = generate_subset(spec, opt, a.out);
    json cfg = options_json(sub);
    cfg["spec"] = spec;
    write_manifest(a.out, "gen", cfg);
    std::printf("%llu points from %llu surfaces, drop fraction %.4f\n", static_cast<unsigned long long>(st.emitted),
                static_cast<unsigned long long>(st.surfaces), st.drop_fraction());
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    int subset = 1;
    std::string data, val, out, history, hidden = "64,64,64,64,64";
    double val_fraction = 0.2;
    TrainConfig cfg;
    bool quiet = false;
    int workers = 0;
};

std::vector<int> parse_sizes(const std::string& hidden) {
    std::vector<int> sizes{kFeatures};
    std::istringstream is(hidden);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            const int n = std::stoi(tok);
            if (n < 1) throw std::invalid_argument(tok);
            sizes.push_back(n);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "--hidden expects comma-separated positive widths, got '" + hidden + "'");
        }
    }
    sizes.push_back(1);
    return sizes;
}

void run_train(const CLI::App& sub, const TrainArgs& a) {
    require_file(a.data, "dataset");
    if (!a.val.empty()) require_file(a.val, "validation set");
    const std::vector<int> sizes = parse_sizes(a.hidden);
    std::string hist = "epoch,train_rmse,val_rmse\n";
    const bool quiet = a.quiet;
    const EpochCallback cb = [&](int epoch, double t, double v) {
        hist += std::to_string(epoch) + ',' + num(t) + ',' + num(v) + '\n';
        if (!quiet && (epoch % 10 == 0 || epoch == 1))
            std::fprintf(stderr, "epoch %d  train %.6f  val %.6f\n", epoch, t, v);
    };
    const std::vector<VolPoint> rows = read_dataset_csv(a.data);
    MlpModel m;
    if (a.val.empty()) {
        m = fit_rows(rows, a.subset, a.cfg, a.val_fraction, sizes, cb);
    } else {
        m = train(to_batch(rows), to_batch(read_dataset_csv(a.val)), a.cfg,
                  MlpModel::create(sizes, derive_seed(a.cfg.seed, 11, 0)), cb);
        m.subset_id = a.subset;
    }
    save_model(m, a.out);
    if (!a.history.empty()) write_file_atomic(a.history, hist);
    write_manifest(a.out, "train", options_json(sub));
    std::printf("best epoch %d of %d, validation RMSE %.6f, train RMSE %.6f\n", m.meta.best_epoch, m.meta.epochs_run,
                m.meta.best_val_rmse, m.meta.train_rmse);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string model, data, out, scatter;
    int workers = 0;
};

void run_eval(const CLI::App& sub, const EvalArgs& a) {
    require_file(a.model, "model");
    require_file(a.data, "dataset");
    const MlpModel m = load_model(a.model);
    const Batch b = to_batch(read_dataset_csv(a.data));
    const Eigen::VectorXd pred = m.predict(b.X);
    const EvalMetrics e = error_metrics(pred, b.y);
    const json j = {{"rmse", e.rmse}, {"frac_abs_err_gt_1pct", e.frac_gt_1pct}, {"frac_abs_err_gt_5pct", e.frac_gt_5pct},
                    {"max_abs_err", e.max_abs}, {"n", e.n}, {"subset", m.subset_id}};
    if (!a.scatter.empty()) {
        std::string s = "T,k_hat,sigma_mc,sigma_dnn\n";
        for (Eigen::Index i = 0; i < b.X.cols(); ++i)
            s += num(b.X(4, i)) + ',' + num(b.X(5, i)) + ',' + num(b.y(i)) + ',' + num(pred(i)) + '\n';
        write_file_atomic(a.scatter, s);
    }
    if (!a.out.empty()) {
        write_file_atomic(a.out, j.dump(2) + "\n");
        write_manifest(a.out, "eval", options_json(sub));
    }
    std::printf("%s\n", j.dump(2).c_str());
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string pricer = "hagan", surface, models, out, term;
    int starts = 300;
    std::uint64_t seed = 0;
    int workers = 0;
};

void run_calibrate(const CLI::App& sub, const CalibrateArgs& a) {
    require_file(a.surface, "smile file");
    std::optional<ModelRouter> router;
    const auto pricer = make_pricer(a.pricer, a.models, router);
    const std::vector<MarketSmile> smiles = read_smiles(a.surface);
    CalibrationOptions opt;
    opt.n_starts = a.starts;
    opt.seed = a.seed;
    opt.workers = a.workers;
    const auto ts = term_structure_calibrate(smiles, *pricer, opt);

    json entries = json::array();
    int failed = 0;
    for (const auto& e : ts) {
        json x = {{"smile", e.smile}};
        if (e.error.empty())
            x["result"] = e.result;
        else {
            x["error"] = e.error;
            ++failed;
            std::fprintf(stderr, "smile T=%g not calibrated: %s\n", e.smile.T, e.error.c_str());
        }
        entries.push_back(x);
    }
    if (failed == int(ts.size())) fail(ErrorKind::Numerical, "no smile calibrated");
    const std::string term = a.term.empty() ? sibling(a.out, "_term.csv") : a.term;
    write_file_atomic(a.out, json{{"pricer", pricer->name()}, {"entries", entries}}.dump(2) + "\n");
    write_file_atomic(term, term_structure_csv(ts));
    write_manifest(a.out, "calibrate", options_json(sub));
    std::printf("%zu smiles calibrated, %d failed\n", ts.size() - std::size_t(failed), failed);
}

// ---------------------------------------------------------------- strip

struct StripArgs {
    std::string quotes, curve, forwards, out, smiles, tenor = "6M";
    double lambda = kDefaultShift;
    int workers = 0;
};

void run_strip(const CLI::App& sub, const StripArgs& a) {
    require_file(a.quotes, "quote file");
    require_file(a.curve, "discount curve");
    if (!a.forwards.empty()) require_file(a.forwards, "forward file");
    const DiscountCurve curve = DiscountCurve::read_csv(a.curve);
    const int tenor = parse_tenor(a.tenor);
    const CapFloorQuoteSurface q = CapFloorQuoteSurface::read_csv(a.quotes, curve.valuation());

    std::optional<ForwardCurve> fwd;
    if (!a.forwards.empty()) {
        fwd = ForwardCurve::read_csv(a.forwards, curve.valuation());
    } else {
        int n = 1;
        for (const auto& r : q.rows) n = std::max(n, r.maturity_months / tenor);
        const CapSchedule s = make_schedule(curve.valuation(), n, tenor, curve);
        std::vector<double> t, f;
        for (const auto& p : s.periods) {
            t.push_back(p.fixing_time);
            f.push_back(p.forward);
        }
        fwd = ForwardCurve(t, f);
    }
    const StrippedSurface s = strip_caplet_vols(q, curve, *fwd, tenor, a.lambda);
    for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    double worst = 0.0;
    for (const auto& row : q.rows) {
        if (row.tenor_months != tenor) continue;
        for (std::size_t c = 0; c < s.strikes.size(); ++c) {
            const int n = periods_for_maturity(row.maturity_months, tenor);
            if (!row.premiums[c] || s.flagged[std::size_t(n - 1)][c]) continue;
            worst = std::max(worst, std::fabs(reprice_quote(s, row, c, a.lambda) - *row.premiums[c]));
        }
    }
    write_file_atomic(a.out, s.to_csv());
    if (!a.smiles.empty()) write_file_atomic(a.smiles, json{{"smiles", surface_smiles(s, a.lambda)}}.dump(2) + "\n");
    write_manifest(a.out, "strip", options_json(sub));
    std::printf("%zu x %zu caplet grid, %zu warnings, worst quote repricing error %.3g\n", s.n_rows(), s.n_cols(),
                s.warnings.size(), worst);
}

// ---------------------------------------------------------------- price

struct PriceArgs {
    std::string calibration, pricer = "hagan", models, curve, forwards, out, type = "cap", cap;
    double T = 0.0, K = 0.0, forward = std::nan(""), lambda = kDefaultShift;
    int workers = 0;
};

void run_price(const CLI::App& sub, const PriceArgs& a) {
    require_file(a.calibration, "calibration result");
    std::optional<ModelRouter> router;
    const auto pricer = make_pricer(a.pricer, a.models, router);
    const SabrVolSurface surf(read_pillars(a.calibration), *pricer);
    const int omega = a.type == "cap" ? 1 : -1;
    json j = {{"K", a.K}, {"type", a.type}, {"pricer", pricer->name()}};
    if (!a.cap.empty()) {
        if (a.curve.empty()) fail(ErrorKind::Config, "--cap needs --curve");
        require_file(a.curve, "discount curve");
        const DiscountCurve curve = DiscountCurve::read_csv(a.curve);
        const int months = parse_tenor(a.cap);
        const int n = periods_for_maturity(months, 6);
        const CapSchedule s = a.forwards.empty()
                                  ? make_schedule(curve.valuation(), n, 6, curve)
                                  : make_schedule(curve.valuation(), n, 6, curve, ForwardCurve::read_csv(a.forwards, curve.valuation()));
        j["maturity"] = a.cap;
        j["price"] = price_cap(surf, s, n, a.K, omega, a.lambda);
    } else {
        if (!(a.T > 0.0) || std::isnan(a.forward)) fail(ErrorKind::Config, "option pricing needs --T and --forward (or --cap)");
        j["T"] = a.T;
        j["forward"] = a.forward;
        j["vol"] = surf.vol(a.T, a.K);
        j["price"] = price_option(surf, a.T, a.forward, a.K, omega, a.lambda);
    }
    if (!a.out.empty()) {
        write_file_atomic(a.out, j.dump(2) + "\n");
        write_manifest(a.out, "price", options_json(sub));
    }
    std::printf("%s\n", j.dump(2).c_str());
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
    std::string calibration, pricer = "hagan", models, out, summary;
    McConfig mc;
    int workers = 0;
};

void run_diagnose(const CLI::App& sub, DiagnoseArgs a) {
    require_file(a.calibration, "calibration result");
    std::optional<ModelRouter> router;
    const auto pricer = make_pricer(a.pricer, a.models, router);
    std::vector<CalibrationResult> res;
    const auto smiles = read_calibrated_smiles(a.calibration, res);
    a.mc.workers = a.workers;
    validate(a.mc);

    std::string pts = "T,K,market_vol,model_vol,mc_vol,mc_err3,ard\n";
    std::string sum = "T,rmsd,max_ard,ard_lowest_strike,ard_highest_strike\n";
    for (std::size_t i = 0; i < smiles.size(); ++i) {
        const MarketSmile& s = smiles[i];
        const std::vector<double> model = pricer->vols(res[i].params, s.T, s.strikes);
        McConfig cfg = a.mc;
        cfg.seed = derive_seed(a.mc.seed, 21, i);
        const McSmile mc = mc_smile(res[i].params, s.T, s.strikes, cfg);
        std::vector<double> mv, cv;
        double max_ard = 0.0;
        for (std::size_t k = 0; k < s.strikes.size(); ++k) {
            const bool ok = mc.status[k] == McVolStatus::Ok;
            const double d = ok ? ard(model[k], mc.vols[k]) : std::nan("");
            if (ok) {
                mv.push_back(model[k]);
                cv.push_back(mc.vols[k]);
                max_ard = std::max(max_ard, d);
            }
            pts += num(s.T) + ',' + num(s.strikes[k]) + ',' + num(s.vols[k]) + ',' + num(model[k]) + ',' +
                   (ok ? num(mc.vols[k]) + ',' + num(mc.err3[k]) + ',' + num(d) : std::string(",,")) + '\n';
        }
        const auto edge = [&](std::size_t k) {
            return mc.status[k] == McVolStatus::Ok ? num(ard(model[k], mc.vols[k])) : std::string();
        };
        sum += num(s.T) + ',' + (mv.empty() ? std::string() : num(rmsd(mv, cv))) + ',' + num(max_ard) + ',' + edge(0) +
               ',' + edge(s.strikes.size() - 1) + '\n';
        std::fprintf(stderr, "T=%.4f done\n", s.T);
    }
    write_file_atomic(a.out, pts);
    write_file_atomic(a.summary.empty() ? sibling(a.out, "_rmsd.csv") : a.summary, sum);
    write_manifest(a.out, "diagnose", options_json(sub));
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
    std::string which = "1", out;
    McConfig mc;
    int workers = 0;
};

struct BenchCase {
    double alpha, beta, rho, nu;
};

constexpr BenchCase kCaseI{0.1178, 0.8738, -0.0702, 0.5010};
constexpr BenchCase kCaseII{0.1822, 0.3044, 0.1243, 0.3127};

// F0 = 1 with a 3% shift: prices in unscaled units, i.e. scaled results times F0 + lambda.
std::string benchmark_case(const BenchCase& c, const McConfig& cfg) {
    const SabrParams p{1.0, kDefaultShift, c.alpha, c.beta, c.rho, c.nu};
    const double Fbar = p.F0 + p.lambda;
    const std::vector<double> Ts{2.0, 10.0};
    std::vector<double> Ks;
    for (int i = 5; i <= 14; ++i) Ks.push_back(i / 10.0);
    std::vector<std::vector<double>> k(Ts.size());
    for (auto& row : k)
        for (double K : Ks) row.push_back(scale_strike(K, p));
    const McSurface s = price_surface(scale_params(p), Ts, k, cfg);
    std::string out = "T,K,floorlet,floorlet_err3,caplet,caplet_err3\n";
    for (std::size_t i = 0; i < Ts.size(); ++i)
        for (std::size_t j = 0; j < Ks.size(); ++j) {
            const McPriceResult& r = s.prices[i][j];
            out += num(Ts[i]) + ',' + num(Ks[j]) + ',' + num(Fbar * r.floorlet) + ',' + num(Fbar * r.floorlet_err3) + ',' +
                   num(Fbar * r.caplet) + ',' + num(Fbar * r.caplet_err3) + '\n';
        }
    return out;
}

std::string benchmark_black(const McConfig& cfg) {
    const double T = 2.0, Fbar = 1.0 + kDefaultShift;
    std::string out =
        "alpha,K,floorlet,floorlet_err3,caplet,caplet_err3,floorlet_var,caplet_var,floorlet_var_mc,caplet_var_mc,"
        "floorlet_black,caplet_black\n";
    for (double alpha : {0.1, 0.3, 0.5}) {
        std::vector<double> Ks, k;
        for (int i = 7; i <= 13; ++i) {
            Ks.push_back(i / 10.0);
            k.push_back((Ks.back() + kDefaultShift) / Fbar);
        }
        const McSurface s = price_surface({alpha, 1.0, 0.0, 0.0}, {T}, {k}, cfg);
        const double v = alpha * alpha * T;
        for (std::size_t j = 0; j < Ks.size(); ++j) {
            const McPriceResult& r = s.prices[0][j];
            const double Kb = Ks[j] + kDefaultShift;
            out += num(alpha) + ',' + num(Ks[j]) + ',' + num(Fbar * r.floorlet) + ',' + num(Fbar * r.floorlet_err3) + ',' +
                   num(Fbar * r.caplet) + ',' + num(Fbar * r.caplet_err3) + ',' +
                   num(black_payoff_variance({Fbar, Kb, v, -1})) + ',' + num(black_payoff_variance({Fbar, Kb, v, 1})) +
                   ',' + num(Fbar * Fbar * r.floorlet_var) + ',' + num(Fbar * Fbar * r.caplet_var) + ',' +
                   num(black_price(Fbar, Kb, v, -1)) + ',' + num(black_price(Fbar, Kb, v, 1)) + '\n';
        }
    }
    return out;
}

void run_benchmark(const CLI::App& sub, BenchmarkArgs a) {
    a.mc.workers = a.workers;
    validate(a.mc);
    std::string csv;
    if (a.which == "1")
        csv = benchmark_case(kCaseI, a.mc);
    else if (a.which == "2")
        csv = benchmark_case(kCaseII, a.mc);
    else
        csv = benchmark_black(a.mc);
    if (a.out.empty()) {
        std::fputs(csv.c_str(), stdout);
        return;
    }
    write_file_atomic(a.out, csv);
    write_manifest(a.out, "benchmark", options_json(sub));
}

void add_mc_options(CLI::App* sub, McConfig& mc, std::uint64_t default_paths) {
    mc.n_paths = default_paths;
    sub->add_option("--paths", mc.n_paths, "Monte Carlo paths")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--dt-days", mc.dt_days, "Time step in days")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--seed", mc.seed, "Random seed")->capture_default_str();
}

}  // namespace

void register_commands(CLI::App& app) {
    {
        auto a = std::make_shared<GenArgs>();
        CLI::App* sub = app.add_subcommand("gen", "Generate a Monte Carlo implied-vol dataset");
        sub->add_option("--subset", a->subset, "Maturity subset")->required()->check(CLI::IsMember({1, 2, 3}));
        sub->add_option("--surfaces", a->surfaces, "Surfaces (0: desk-scale default)")->capture_default_str();
        sub->add_option("--paths", a->paths, "Paths per surface (0: desk-scale default)")->capture_default_str();
        sub->add_option("--dt-days", a->dt_days, "Time step in days (0: subset default)")->capture_default_str();
        sub->add_option("--seed", a->seed, "Random seed")->capture_default_str();
        sub->add_option("--out", a->out, "Output CSV")->required();
        sub->add_flag("--test-set", a->test_set, "Draw test-set maturities and strikes");
        sub->add_flag("--quiet", a->quiet, "No progress output");
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_gen(*sub, *a); });
    }
    {
        auto a = std::make_shared<TrainArgs>();
        CLI::App* sub = app.add_subcommand("train", "Train a network on a generated dataset");
        sub->add_option("--subset", a->subset, "Maturity subset the network serves")->required()->check(CLI::IsMember({1, 2, 3}));
        sub->add_option("--data", a->data, "Training CSV")->required();
        sub->add_option("--val", a->val, "Validation CSV (default: split off --data)");
        sub->add_option("--val-fraction", a->val_fraction, "Share of --data held out for validation")->capture_default_str();
        sub->add_option("--out", a->out, "Model JSON")->required();
        sub->add_option("--history", a->history, "Per-epoch loss CSV");
        sub->add_option("--hidden", a->hidden, "Hidden layer widths")->capture_default_str();
        sub->add_option("--epochs", a->cfg.max_epochs, "Maximum epochs")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--patience", a->cfg.patience, "Early-stopping patience")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--batch", a->cfg.batch_size, "Mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--lr", a->cfg.learning_rate, "ADAM learning rate")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--seed", a->cfg.seed, "Initialization and shuffling seed")->capture_default_str();
        sub->add_flag("--quiet", a->quiet, "No per-epoch output");
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_train(*sub, *a); });
    }
    {
        auto a = std::make_shared<EvalArgs>();
        CLI::App* sub = app.add_subcommand("eval", "Error metrics of a network on a dataset");
        sub->add_option("--model", a->model, "Model JSON")->required();
        sub->add_option("--data", a->data, "Dataset CSV")->required();
        sub->add_option("--out", a->out, "Metrics JSON");
        sub->add_option("--scatter", a->scatter, "Per-point MC vs network CSV");
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_eval(*sub, *a); });
    }
    {
        auto a = std::make_shared<CalibrateArgs>();
        CLI::App* sub = app.add_subcommand("calibrate", "Fit SABR parameters to each market smile");
        sub->add_option("--pricer", a->pricer, "Smile pricer")->check(CLI::IsMember({"dnn", "hagan"}))->capture_default_str();
        sub->add_option("--surface", a->surface, "Smiles JSON")->required();
        sub->add_option("--models", a->models, "Directory with dnn1.json, dnn2.json, dnn3.json");
        sub->add_option("--out", a->out, "Results JSON")->required();
        sub->add_option("--term-structure", a->term, "Parameter term-structure CSV (default: <out>_term.csv)");
        sub->add_option("--starts", a->starts, "Multi-start count")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--seed", a->seed, "Start-point seed")->capture_default_str();
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_calibrate(*sub, *a); });
    }
    {
        auto a = std::make_shared<StripArgs>();
        CLI::App* sub = app.add_subcommand("strip", "Bootstrap caplet vols from cap/floor premiums");
        sub->add_option("--quotes", a->quotes, "Quote CSV")->required();
        sub->add_option("--curve", a->curve, "Discount curve CSV; its first date is the valuation date")->required();
        sub->add_option("--forwards", a->forwards, "Forward CSV (default: implied by the curve)");
        sub->add_option("--tenor", a->tenor, "Rows to strip")->capture_default_str();
        sub->add_option("--shift", a->lambda, "Rate shift")->capture_default_str();
        sub->add_option("--out", a->out, "Stripped surface CSV")->required();
        sub->add_option("--smiles", a->smiles, "Calibration targets JSON");
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_strip(*sub, *a); });
    }
    {
        auto a = std::make_shared<PriceArgs>();
        CLI::App* sub = app.add_subcommand("price", "Price a caplet, floorlet, cap or floor off calibrated smiles");
        sub->add_option("--calibration", a->calibration, "Calibration results JSON")->required();
        sub->add_option("--pricer", a->pricer, "Smile pricer")->check(CLI::IsMember({"dnn", "hagan"}))->capture_default_str();
        sub->add_option("--models", a->models, "Network directory for --pricer dnn");
        sub->add_option("--K", a->K, "Strike")->required();
        sub->add_option("--type", a->type, "cap or floor")->check(CLI::IsMember({"cap", "floor"}))->capture_default_str();
        sub->add_option("--T", a->T, "Fixing time in years (single option)");
        sub->add_option("--forward", a->forward, "Forward rate (single option)");
        sub->add_option("--cap", a->cap, "Cap maturity such as 7Y (semiannual schedule)");
        sub->add_option("--curve", a->curve, "Discount curve CSV for --cap");
        sub->add_option("--forwards", a->forwards, "Forward CSV for --cap");
        sub->add_option("--shift", a->lambda, "Rate shift")->capture_default_str();
        sub->add_option("--out", a->out, "Result JSON");
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_price(*sub, *a); });
    }
    {
        auto a = std::make_shared<DiagnoseArgs>();
        CLI::App* sub = app.add_subcommand("diagnose", "Monte Carlo check of calibrated smiles (RMSD and ARD)");
        sub->add_option("--calibration", a->calibration, "Calibration results JSON")->required();
        sub->add_option("--pricer", a->pricer, "Smile pricer")->check(CLI::IsMember({"dnn", "hagan"}))->capture_default_str();
        sub->add_option("--models", a->models, "Network directory for --pricer dnn");
        sub->add_option("--out", a->out, "Per-strike CSV")->required();
        sub->add_option("--summary", a->summary, "Per-maturity RMSD CSV (default: <out>_rmsd.csv)");
        add_mc_options(sub, a->mc, 1ull << 18);
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_diagnose(*sub, *a); });
    }
    {
        auto a = std::make_shared<BenchmarkArgs>();
        CLI::App* sub = app.add_subcommand("benchmark", "Reference caplet/floorlet price tables");
        sub->add_option("--case", a->which, "1, 2 or black")->check(CLI::IsMember({"1", "2", "black"}))->capture_default_str();
        sub->add_option("--out", a->out, "Output CSV (default: stdout)");
        add_mc_options(sub, a->mc, 1ull << 20);
        add_workers(sub, a->workers);
        sub->callback([sub, a] { run_benchmark(*sub, *a); });
    }
}

}  // namespace sabrdnn::cli
