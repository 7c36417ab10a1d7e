#include "sabrdnn/mlp.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include "sabrdnn/error.hpp"
#include "sabrdnn/manifest.hpp"
#include "sabrdnn/rng.hpp"

namespace sabrdnn {

namespace {

constexpr int kFormatVersion = 1;
constexpr Eigen::Index kChunk = 8192;

void apply_elu(Eigen::MatrixXd& a) { a = a.unaryExpr([](double x) { return elu(x); }); }

// ELU'(z) written in terms of a = ELU(z).
Eigen::MatrixXd elu_derivative(const Eigen::MatrixXd& a) {
    return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : v + 1.0; });
}

Eigen::MatrixXd forward_standardized(const MlpModel& m, const Eigen::MatrixXd& Xs) {
    Eigen::MatrixXd a = Xs;
    for (const DenseLayer& l : m.layers) {
        Eigen::MatrixXd z = l.W * a;
        z.colwise() += l.b;
        if (l.elu) apply_elu(z);
        a = std::move(z);
    }
    return a;
}

Eigen::VectorXd predict_standardized(const MlpModel& m, const Eigen::MatrixXd& Xs) {
    Eigen::VectorXd out(Xs.cols());
    for (Eigen::Index i = 0; i < Xs.cols(); i += kChunk) {
        const Eigen::Index n = std::min(kChunk, Xs.cols() - i);
        out.segment(i, n) = forward_standardized(m, Xs.middleCols(i, n)).row(0).transpose();
    }
    return out;
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
    return std::sqrt((pred - y).squaredNorm() / double(y.size()));
}

Gradients zeros_like(const MlpModel& m) {
    Gradients g;
    for (const DenseLayer& l : m.layers) {
        g.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
        g.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    return g;
}

}  // namespace

Batch to_batch(const std::vector<VolPoint>& rows) {
    Batch b;
    b.X.resize(kFeatures, Eigen::Index(rows.size()));
    b.y.resize(Eigen::Index(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const VolPoint& v = rows[i];
        b.X.col(Eigen::Index(i)) << v.alpha_hat, v.beta, v.rho, v.nu, v.T, v.k_hat;
        b.y(Eigen::Index(i)) = v.sigma;
    }
    return b;
}

Scaler fit_scaler(const Eigen::MatrixXd& X) {
    if (X.cols() == 0) fail(ErrorKind::InvalidParameter, "cannot fit a scaler on an empty set");
    Scaler s;
    s.mean = X.rowwise().mean();
    s.std = ((X.colwise() - s.mean).array().square().rowwise().sum() / double(X.cols())).sqrt();
    for (Eigen::Index i = 0; i < s.std.size(); ++i)
        if (!(s.std(i) > 0.0)) fail(ErrorKind::InvalidParameter, "feature " + std::to_string(i) + " has zero variance");
    return s;
}

Eigen::MatrixXd transform(const Scaler& s, const Eigen::MatrixXd& X) {
    return (X.colwise() - s.mean).array().colwise() / s.std.array();
}

MlpModel MlpModel::create(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) fail(ErrorKind::InvalidParameter, "network needs at least input and output sizes");
    for (int s : sizes)
        if (s < 1) fail(ErrorKind::InvalidParameter, "layer sizes must be positive");
    MlpModel m;
    UniformStream rng(seed);
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        DenseLayer l;
        const double lim = std::sqrt(3.0 / sizes[i]);
        l.W.resize(sizes[i + 1], sizes[i]);
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = rng.uniform(-lim, lim);
        l.b = Eigen::VectorXd::Zero(sizes[i + 1]);
        l.elu = i + 2 < sizes.size();
        m.layers.push_back(std::move(l));
    }
    m.scaler.mean = Eigen::VectorXd::Zero(sizes.front());
    m.scaler.std = Eigen::VectorXd::Ones(sizes.front());
    return m;
}

MlpModel MlpModel::standard(std::uint64_t seed) { return create({kFeatures, 64, 64, 64, 64, 64, 1}, seed); }

std::size_t MlpModel::n_parameters() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += std::size_t(l.W.size() + l.b.size());
    return n;
}

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& X) const {
    if (X.rows() != n_inputs()) fail(ErrorKind::InvalidParameter, "feature count does not match the network");
    return predict_standardized(*this, transform(scaler, X));
}

double MlpModel::predict(const std::array<double, kFeatures>& features) const {
    const Eigen::Map<const Eigen::VectorXd> x(features.data(), kFeatures);
    return predict(Eigen::MatrixXd(x))(0);
}

void validate(const MlpModel& m) {
    if (m.layers.empty()) fail(ErrorKind::Format, "network has no layers");
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const DenseLayer& l = m.layers[i];
        if (l.b.size() != l.W.rows()) fail(ErrorKind::Format, "bias length does not match layer output");
        if (i && l.W.cols() != m.layers[i - 1].W.rows()) fail(ErrorKind::Format, "layer shapes do not chain");
        if (!l.W.allFinite() || !l.b.allFinite()) fail(ErrorKind::Format, "non-finite weights");
    }
    if (m.layers.back().W.rows() != 1) fail(ErrorKind::Format, "network must have a single output");
    if (m.scaler.mean.size() != m.n_inputs() || m.scaler.std.size() != m.n_inputs())
        fail(ErrorKind::Format, "scaler size does not match network input");
    if (!((m.scaler.std.array() > 0.0).all())) fail(ErrorKind::Format, "scaler std must be positive");
}

double rmse_loss_and_gradient(const MlpModel& m, const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y, Gradients& g) {
    const std::size_t L = m.layers.size();
    std::vector<Eigen::MatrixXd> a(L + 1);
    a[0] = Xs;
    for (std::size_t l = 0; l < L; ++l) {
        a[l + 1] = m.layers[l].W * a[l];
        a[l + 1].colwise() += m.layers[l].b;
        if (m.layers[l].elu) apply_elu(a[l + 1]);
    }
    const double n = double(y.size());
    const Eigen::RowVectorXd e = a[L].row(0) - y.transpose();
    const double loss = std::sqrt(e.squaredNorm() / n);

    if (g.dW.size() != L) g = zeros_like(m);
    // d sqrt(mean e^2) / d pred_i = e_i / (n * loss); zero at an exact fit
    Eigen::MatrixXd delta = loss > 0.0 ? Eigen::MatrixXd(e / (n * loss)) : Eigen::MatrixXd::Zero(1, e.size());
    for (std::size_t l = L; l-- > 0;) {
        if (m.layers[l].elu) delta.array() *= elu_derivative(a[l + 1]).array();
        g.dW[l].noalias() = delta * a[l].transpose();
        g.db[l] = delta.rowwise().sum();
        if (l > 0) delta = m.layers[l].W.transpose() * delta;
    }
    return loss;
}

MlpModel fit_rows(const std::vector<VolPoint>& rows, int subset_id, const TrainConfig& cfg, double val_fraction,
                  const std::vector<int>& sizes, const EpochCallback& on_epoch) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail(ErrorKind::Config, "validation fraction must lie in (0, 1)");
    const auto [tr, va] = split_train_validation(rows, val_fraction, derive_seed(cfg.seed, 13, 0));
    const std::uint64_t init_seed = derive_seed(cfg.seed, 11, 0);
    MlpModel m = train(to_batch(tr), to_batch(va), cfg,
                       sizes.empty() ? MlpModel::standard(init_seed) : MlpModel::create(sizes, init_seed), on_epoch);
    m.subset_id = subset_id;
    return m;
}

MlpModel train(const Batch& train_set, const Batch& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    return train(train_set, val_set, cfg, MlpModel::standard(derive_seed(cfg.seed, 11, 0)), on_epoch);
}

MlpModel train(const Batch& train_set, const Batch& val_set, const TrainConfig& cfg, const MlpModel& init,
               const EpochCallback& on_epoch) {
    if (train_set.X.cols() == 0 || val_set.X.cols() == 0)
        fail(ErrorKind::InvalidParameter, "training and validation sets must be non-empty");
    if (cfg.batch_size < 1 || cfg.max_epochs < 1 || cfg.patience < 1)
        fail(ErrorKind::Config, "batch size, epochs and patience must be positive");
    if (cfg.patience > cfg.max_epochs)
        fail(ErrorKind::Config, "patience " + std::to_string(cfg.patience) + " exceeds max epochs " +
                                    std::to_string(cfg.max_epochs));
    if (train_set.X.rows() != init.n_inputs() || val_set.X.rows() != init.n_inputs())
        fail(ErrorKind::InvalidParameter, "feature count does not match the network");

    MlpModel m = init;
    m.scaler = fit_scaler(train_set.X);
    const Eigen::MatrixXd Xs = transform(m.scaler, train_set.X);
    const Eigen::MatrixXd Vs = transform(m.scaler, val_set.X);
    const Eigen::Index N = Xs.cols();
    const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, N);

    Gradients g = zeros_like(m), mom = zeros_like(m), var = zeros_like(m);
    MlpModel best = m;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0, since = 0, epoch = 0;
    std::uint64_t t = 0;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(N));
    std::iota(perm.begin(), perm.end(), Eigen::Index(0));
    Eigen::MatrixXd Xb(Xs.rows(), B);
    Eigen::VectorXd yb(B);

    for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        UniformStream rng(derive_seed(cfg.seed, 12, std::uint64_t(epoch)));
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        double sse = 0.0;
        for (Eigen::Index s = 0; s < N; s += B) {
            const Eigen::Index nb = std::min(B, N - s);
            Xb.resize(Xs.rows(), nb);
            yb.resize(nb);
            for (Eigen::Index i = 0; i < nb; ++i) {
                Xb.col(i) = Xs.col(perm[std::size_t(s + i)]);
                yb(i) = train_set.y(perm[std::size_t(s + i)]);
            }
            const double loss = rmse_loss_and_gradient(m, Xb, yb, g);
            if (!std::isfinite(loss)) fail(ErrorKind::Numerical, "training diverged: non-finite loss");
            sse += loss * loss * double(nb);
            ++t;
            const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
            const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
            const double step = cfg.learning_rate * std::sqrt(c2) / c1;
            const double eps = cfg.epsilon * std::sqrt(c2);
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                mom.dW[l] = cfg.beta1 * mom.dW[l] + (1.0 - cfg.beta1) * g.dW[l];
                var.dW[l] = cfg.beta2 * var.dW[l] + (1.0 - cfg.beta2) * g.dW[l].cwiseAbs2();
                m.layers[l].W.array() -= step * mom.dW[l].array() / (var.dW[l].array().sqrt() + eps);
                mom.db[l] = cfg.beta1 * mom.db[l] + (1.0 - cfg.beta1) * g.db[l];
                var.db[l] = cfg.beta2 * var.db[l] + (1.0 - cfg.beta2) * g.db[l].cwiseAbs2();
                m.layers[l].b.array() -= step * mom.db[l].array() / (var.db[l].array().sqrt() + eps);
            }
        }
        const double val = rmse(predict_standardized(m, Vs), val_set.y);
        if (!std::isfinite(val)) fail(ErrorKind::Numerical, "training diverged: non-finite validation error");
        if (on_epoch) on_epoch(epoch, std::sqrt(sse / double(N)), val);
        if (val < best_val) {
            best_val = val;
            best = m;
            best_epoch = epoch;
            since = 0;
        } else if (++since >= cfg.patience) {
            break;
        }
    }
    best.meta.epochs_run = std::min(epoch, cfg.max_epochs);
    best.meta.best_epoch = best_epoch;
    best.meta.best_val_rmse = best_val;
    best.meta.train_rmse = rmse(predict_standardized(best, Xs), train_set.y);
    best.meta.n_train = std::uint64_t(N);
    best.meta.n_val = std::uint64_t(Vs.cols());
    best.meta.config = cfg;
    return best;
}

EvalMetrics error_metrics(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
    if (predicted.size() != target.size() || target.size() == 0)
        fail(ErrorKind::InvalidParameter, "metric inputs must be non-empty and of equal length");
    const Eigen::ArrayXd d = (predicted - target).array().abs();
    EvalMetrics e;
    e.n = std::uint64_t(d.size());
    e.rmse = std::sqrt(d.square().mean());
    e.frac_gt_1pct = double((d > 0.01).count()) / double(d.size());
    e.frac_gt_5pct = double((d > 0.05).count()) / double(d.size());
    e.max_abs = d.maxCoeff();
    return e;
}

EvalMetrics evaluate(const MlpModel& m, const Batch& data) { return error_metrics(m.predict(data.X), data.y); }

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

}  // namespace

nlohmann::json model_to_json(const MlpModel& m) {
    nlohmann::json j;
    j["format"] = "sabrdnn-mlp";
    j["version"] = kFormatVersion;
    j["subset"] = m.subset_id;
    auto& layers = j["layers"] = nlohmann::json::array();
    for (const DenseLayer& l : m.layers) {
        std::vector<double> w;
        w.reserve(std::size_t(l.W.size()));
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c) w.push_back(l.W(r, c));
        layers.push_back({{"in", l.W.cols()},
                          {"out", l.W.rows()},
                          {"activation", l.elu ? "elu" : "linear"},
                          {"weights", w},
                          {"bias", vec_json(l.b)}});
    }
    j["scaler"] = {{"mean", vec_json(m.scaler.mean)}, {"std", vec_json(m.scaler.std)}};
    const TrainConfig& c = m.meta.config;
    j["meta"] = {{"epochs_run", m.meta.epochs_run},
                 {"best_epoch", m.meta.best_epoch},
                 {"best_val_rmse", m.meta.best_val_rmse},
                 {"train_rmse", m.meta.train_rmse},
                 {"n_train", m.meta.n_train},
                 {"n_val", m.meta.n_val},
                 {"config",
                  {{"max_epochs", c.max_epochs},
                   {"patience", c.patience},
                   {"batch_size", c.batch_size},
                   {"learning_rate", c.learning_rate},
                   {"beta1", c.beta1},
                   {"beta2", c.beta2},
                   {"epsilon", c.epsilon},
                   {"seed", c.seed}}}};
    return j;
}

MlpModel model_from_json(const nlohmann::json& j) {
    MlpModel m;
    try {
        if (j.at("format") != "sabrdnn-mlp") fail(ErrorKind::Format, "not a network file");
        if (j.at("version").get<int>() != kFormatVersion)
            fail(ErrorKind::Format, "unsupported network file version " + j.at("version").dump());
        m.subset_id = j.value("subset", 0);
        for (const auto& lj : j.at("layers")) {
            DenseLayer l;
            const auto in = lj.at("in").get<Eigen::Index>(), out = lj.at("out").get<Eigen::Index>();
            const auto w = lj.at("weights").get<std::vector<double>>();
            if (in < 1 || out < 1 || Eigen::Index(w.size()) != in * out)
                fail(ErrorKind::Format, "layer weight count does not match its shape");
            l.W.resize(out, in);
            for (Eigen::Index r = 0; r < out; ++r)
                for (Eigen::Index c = 0; c < in; ++c) l.W(r, c) = w[std::size_t(r * in + c)];
            l.b = vec_from(lj.at("bias"));
            const std::string act = lj.at("activation").get<std::string>();
            if (act != "elu" && act != "linear") fail(ErrorKind::Format, "unknown activation " + act);
            l.elu = act == "elu";
            m.layers.push_back(std::move(l));
        }
        m.scaler.mean = vec_from(j.at("scaler").at("mean"));
        m.scaler.std = vec_from(j.at("scaler").at("std"));
        if (j.contains("meta")) {
            const auto& mj = j["meta"];
            m.meta.epochs_run = mj.value("epochs_run", 0);
            m.meta.best_epoch = mj.value("best_epoch", 0);
            m.meta.best_val_rmse = mj.value("best_val_rmse", 0.0);
            m.meta.train_rmse = mj.value("train_rmse", 0.0);
            m.meta.n_train = mj.value("n_train", std::uint64_t(0));
            m.meta.n_val = mj.value("n_val", std::uint64_t(0));
            if (mj.contains("config")) {
                const auto& cj = mj["config"];
                TrainConfig& c = m.meta.config;
                c.max_epochs = cj.value("max_epochs", c.max_epochs);
                c.patience = cj.value("patience", c.patience);
                c.batch_size = cj.value("batch_size", c.batch_size);
                c.learning_rate = cj.value("learning_rate", c.learning_rate);
                c.beta1 = cj.value("beta1", c.beta1);
                c.beta2 = cj.value("beta2", c.beta2);
                c.epsilon = cj.value("epsilon", c.epsilon);
                c.seed = cj.value("seed", c.seed);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("malformed network file: ") + e.what());
    }
    validate(m);
    return m;
}

void save_model(const MlpModel& m, const std::string& path) {
    validate(m);
    write_file_atomic(path, model_to_json(m).dump() + "\n");
}

MlpModel load_model(const std::string& path) { return model_from_json(read_json(path)); }

void ModelRouter::set(int subset_id, MlpModel m) {
    if (subset_id < 1 || subset_id > 3) fail(ErrorKind::InvalidParameter, "subset id must be 1, 2 or 3");
    if (m.n_inputs() != kFeatures) fail(ErrorKind::InvalidParameter, "router networks take six features");
    m.subset_id = subset_id;
    models_[std::size_t(subset_id - 1)] = std::move(m);
}

bool ModelRouter::has(int subset_id) const {
    return subset_id >= 1 && subset_id <= 3 && models_[std::size_t(subset_id - 1)].has_value();
}

const MlpModel& ModelRouter::model_for(double T) const {
    const int id = subset_for_maturity(T);
    if (!has(id)) fail(ErrorKind::Config, "no network loaded for maturity subset " + std::to_string(id));
    return *models_[std::size_t(id - 1)];
}

double ModelRouter::vol(const ScaledSabrParams& p, double T, double k_hat) const {
    return model_for(T).predict(std::array<double, kFeatures>{p.alpha_hat, p.beta, p.rho, p.nu, T, k_hat});
}

ModelRouter ModelRouter::load_dir(const std::string& dir) {
    ModelRouter r;
    for (int id = 1; id <= 3; ++id) {
        const auto path = std::filesystem::path(dir) / ("dnn" + std::to_string(id) + ".json");
        if (std::filesystem::exists(path)) r.set(id, load_model(path.string()));
    }
    return r;
}

}  // namespace sabrdnn
