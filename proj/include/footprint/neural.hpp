#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "footprint/error.hpp"
#include "footprint/ingest.hpp"
#include "footprint/metrics.hpp"
#include "footprint/rng.hpp"

namespace footprint {

// Fully connected layer: outputs = inputs * weights + bias.
struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::VectorXd bias;     // fan_out
};

// ReLU on hidden layers, identity on the output layer.
struct MlpModel {
  std::vector<Eigen::Index> layer_sizes;
  std::vector<DenseLayer> layers;

  std::size_t hidden_layers() const { return layers.empty() ? 0 : layers.size() - 1; }
  bool operator==(const MlpModel& o) const;
};

// He-scaled uniform weights (variance 2 / fan_in), zero biases.
MlpModel init_model(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed);

enum class DropoutScheme {
  every_layer,  // keep 0.5 after each hidden layer
  indexed       // after every second hidden layer, keep i / (2n) for the i-th of n dropouts
};

// Keep probability per hidden layer; 1 means no dropout.
std::vector<double> keep_probabilities(std::size_t hidden_layers, DropoutScheme scheme);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // per hidden layer, ReLU output before dropout
  std::vector<Eigen::MatrixXd> masks;        // per hidden layer, 0 or 1/keep (empty when not dropped)
  Eigen::MatrixXd output;
  Eigen::Index batch_rows = 0;
};

// Train mode when `dropout_rng` is non-null: each hidden unit is dropped
// with probability 1 - keep and survivors are scaled by 1 / keep.
ForwardCache forward(const MlpModel& model, const Eigen::MatrixXd& batch, std::span<const double> keep,
                     Rng* dropout_rng);

// Eval-mode outputs.
Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& batch);

// Mean squared error over the cells where mask is nonzero.
double loss_mse(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

// Exact gradients of loss_mse for the forward pass recorded in `cache`,
// with the dropout masks held fixed.
Gradients backward(const MlpModel& model, const Eigen::MatrixXd& batch, const ForwardCache& cache,
                   const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of a flat parameter block.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 long step, double lr, const AdamConfig& cfg = {});

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_bias, v_bias;

  static AdamState zeros_like(const MlpModel& model);
};

// Throws a numeric error naming the layer if any gradient is non-finite.
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, long step, double lr,
               const AdamConfig& cfg = {});

// gamma0 * rate^(step / decay_steps), continuous.
double lr_schedule(double gamma0, long step, long decay_steps = 10000, double decay_rate = 0.96);

// Fraction of exactly-zero hidden activations per hidden layer.
std::vector<double> dead_relu_ratio(const ForwardCache& cache);

struct TrainConfig {
  double gamma0 = 1e-4;
  long decay_steps = 10000;
  double decay_rate = 0.96;
  Eigen::Index batch_size = 100;
  long max_iterations = 50000;
  long log_every = 100;
  DropoutScheme dropout = DropoutScheme::every_layer;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
};

struct TraceRow {
  long iteration = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  std::vector<double> dead_relu;
};

using TrainingTrace = std::vector<TraceRow>;

// Features plus the 8 trait targets; mask marks observed target cells.
struct TrainingData {
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
  Eigen::MatrixXd mask;
};

TrainingData make_training_data(const Eigen::MatrixXd& features, const TraitTable& traits);

struct DataSplit {
  std::vector<std::size_t> train, validation, test;
};

DataSplit split_rows(std::size_t n, const TrainConfig& cfg);

// Column-wise standardization fitted on the training rows.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct TrainResult {
  MlpModel model;
  Standardizer inputs;
  Standardizer targets;  // identity (0, 1) on binary traits
  TrainingTrace trace;
  DataSplit split;
  bool overfit = false;  // final validation loss above final train loss
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainingTrace trace)
      : Error(ErrorKind::numeric, what), trace_(std::move(trace)) {}
  const TrainingTrace& trace() const noexcept { return trace_; }

 private:
  TrainingTrace trace_;
};

// Minibatch Adam on masked MSE for exactly max_iterations steps. `layer_sizes`
// must start at the feature width, end at 8 and contain a hidden layer.
TrainResult train(const TrainingData& data, const TrainConfig& cfg, const std::vector<Eigen::Index>& layer_sizes);

// Eval-mode outputs for unstandardized features. Continuous outputs stay on
// the standardized target scale.
Eigen::MatrixXd network_outputs(const TrainResult& result, const Eigen::MatrixXd& features);

// Per-trait Pearson/AUC of the outputs on `rows` against observed targets.
std::vector<AccuracyScore> evaluate_nn(const TrainResult& result, const TrainingData& data,
                                       std::span<const std::size_t> rows);

std::string trace_csv(const TrainingTrace& trace);

void save_model(const TrainResult& result, const std::filesystem::path& path);
TrainResult load_model(const std::filesystem::path& path);

}  // namespace footprint
