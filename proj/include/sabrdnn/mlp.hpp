#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sabrdnn/dataset.hpp"

namespace sabrdnn {

inline constexpr int kFeatures = 6;  // alpha_hat, beta, rho, nu, T, k_hat

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
    bool elu = true;
};

struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

// Feature matrix (kFeatures x n, one column per point) and targets.
struct Batch {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Batch to_batch(const std::vector<VolPoint>& rows);

// Column means and population standard deviations; throws on a constant feature.
Scaler fit_scaler(const Eigen::MatrixXd& X);
Eigen::MatrixXd transform(const Scaler& s, const Eigen::MatrixXd& X);

struct TrainConfig {
    int max_epochs = 500;
    int patience = 50;
    int batch_size = 8192;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

struct TrainMeta {
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_rmse = 0.0;
    double train_rmse = 0.0;  // full training set, at the best epoch
    std::uint64_t n_train = 0;
    std::uint64_t n_val = 0;
    TrainConfig config;
};

struct MlpModel {
    std::vector<DenseLayer> layers;
    Scaler scaler;
    TrainMeta meta;
    int subset_id = 0;

    // sizes = {in, hidden..., out}; hidden layers ELU, output linear. LeCun-uniform weights, zero biases.
    static MlpModel create(const std::vector<int>& sizes, std::uint64_t seed);
    // 6 -> 64 x 5 -> 1.
    static MlpModel standard(std::uint64_t seed);

    int n_inputs() const { return int(layers.front().W.cols()); }
    std::size_t n_parameters() const;

    // Raw (unstandardized) features in, predictions out.
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
    double predict(const std::array<double, kFeatures>& features) const;
};

void validate(const MlpModel& m);

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
};

// RMSE over the batch and its gradient; Xs must already be standardized.
double rmse_loss_and_gradient(const MlpModel& m, const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y, Gradients& g);

using EpochCallback = std::function<void(int epoch, double train_rmse, double val_rmse)>;

// Mini-batch ADAM on RMSE with early stopping; returns the best-validation weights.
MlpModel train(const Batch& train_set, const Batch& val_set, const TrainConfig& cfg, const MlpModel& init,
               const EpochCallback& on_epoch = {});
MlpModel train(const Batch& train_set, const Batch& val_set, const TrainConfig& cfg,
               const EpochCallback& on_epoch = {});

// Holds out val_fraction of rows for early stopping, then trains. Empty sizes: the standard layout.
MlpModel fit_rows(const std::vector<VolPoint>& rows, int subset_id, const TrainConfig& cfg, double val_fraction = 0.2,
                  const std::vector<int>& sizes = {}, const EpochCallback& on_epoch = {});

struct EvalMetrics {
    double rmse = 0.0;
    double frac_gt_1pct = 0.0;
    double frac_gt_5pct = 0.0;
    double max_abs = 0.0;
    std::uint64_t n = 0;
};

EvalMetrics evaluate(const MlpModel& m, const Batch& data);
EvalMetrics error_metrics(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);

nlohmann::json model_to_json(const MlpModel& m);
MlpModel model_from_json(const nlohmann::json& j);
void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

// Picks the network whose maturity span contains T.
class ModelRouter {
public:
    void set(int subset_id, MlpModel m);
    bool has(int subset_id) const;
    const MlpModel& model_for(double T) const;
    double vol(const ScaledSabrParams& p, double T, double k_hat) const;

    // Loads dnn1.json, dnn2.json, dnn3.json where present.
    static ModelRouter load_dir(const std::string& dir);

private:
    std::array<std::optional<MlpModel>, 3> models_;
};

}  // namespace sabrdnn
