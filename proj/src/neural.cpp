#include "footprint/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "footprint/io.hpp"

namespace footprint {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& x, const Eigen::MatrixXd* mask, const std::vector<bool>& skip) {
  Standardizer s;
  s.mean = Eigen::RowVectorXd::Zero(x.cols());
  s.scale = Eigen::RowVectorXd::Ones(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (!skip.empty() && skip[static_cast<std::size_t>(j)]) continue;
    double n = 0.0, sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (mask && (*mask)(i, j) == 0.0) continue;
      sum += x(i, j);
      n += 1.0;
    }
    if (n < 2.0) continue;
    const double mean = sum / n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (mask && (*mask)(i, j) == 0.0) continue;
      ss += (x(i, j) - mean) * (x(i, j) - mean);
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    s.mean(j) = mean;
    if (sd > 0.0) s.scale(j) = sd;
  }
  return s;
}

void check_finite_grad(const Eigen::Ref<const Eigen::MatrixXd>& g, std::size_t layer) {
  if (!g.allFinite()) fail(ErrorKind::numeric, fmt::format("non-finite gradient in layer {}", layer + 1));
}

}  // namespace

bool MlpModel::operator==(const MlpModel& o) const {
  if (layer_sizes != o.layer_sizes || layers.size() != o.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weights != o.layers[i].weights || layers[i].bias != o.layers[i].bias) return false;
  }
  return true;
}

MlpModel init_model(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) fail(ErrorKind::parameter, "a network needs at least input and output sizes");
  for (auto s : layer_sizes)
    if (s <= 0) fail(ErrorKind::parameter, fmt::format("non-positive layer size {}", s));
  MlpModel model;
  model.layer_sizes = layer_sizes;
  Rng rng = make_rng(seed, 0);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const Eigen::Index fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> unif(-bound, bound);
    DenseLayer layer;
    layer.weights.resize(fan_in, fan_out);
    for (Eigen::Index c = 0; c < fan_out; ++c)
      for (Eigen::Index r = 0; r < fan_in; ++r) layer.weights(r, c) = unif(rng);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::vector<double> keep_probabilities(std::size_t hidden_layers, DropoutScheme scheme) {
  std::vector<double> keep(hidden_layers, 1.0);
  if (scheme == DropoutScheme::every_layer) {
    std::fill(keep.begin(), keep.end(), 0.5);
    return keep;
  }
  const std::size_t n = hidden_layers / 2;
  for (std::size_t i = 1; i <= n; ++i) keep[2 * i - 1] = static_cast<double>(i) / static_cast<double>(2 * n);
  return keep;
}

ForwardCache forward(const MlpModel& model, const Eigen::MatrixXd& batch, std::span<const double> keep,
                     Rng* dropout_rng) {
  if (model.layers.empty()) fail(ErrorKind::parameter, "forward: empty model");
  if (batch.cols() != model.layer_sizes.front()) {
    fail(ErrorKind::parameter, fmt::format("forward: batch width {} vs input size {}", batch.cols(), model.layer_sizes.front()));
  }
  if (!batch.allFinite()) fail(ErrorKind::parameter, "forward: non-finite input");
  const std::size_t hidden = model.hidden_layers();
  if (dropout_rng && keep.size() != hidden) fail(ErrorKind::parameter, "forward: one keep probability per hidden layer");

  ForwardCache cache;
  cache.batch_rows = batch.rows();
  cache.activations.reserve(hidden);
  cache.masks.resize(hidden);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::MatrixXd x = batch;
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::MatrixXd h = x * model.layers[l].weights;
    h.rowwise() += model.layers[l].bias.transpose();
    h = h.cwiseMax(0.0);
    cache.activations.push_back(h);
    if (dropout_rng && keep[l] < 1.0) {
      Eigen::MatrixXd mask(h.rows(), h.cols());
      const double scale = 1.0 / keep[l];
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = unif(*dropout_rng) < keep[l] ? scale : 0.0;
      h = h.cwiseProduct(mask);
      cache.masks[l] = std::move(mask);
    }
    x = std::move(h);
  }
  cache.output = x * model.layers.back().weights;
  cache.output.rowwise() += model.layers.back().bias.transpose();
  return cache;
}

Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& batch) {
  return forward(model, batch, {}, nullptr).output;
}

double loss_mse(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols() || mask.rows() != outputs.rows() ||
      mask.cols() != outputs.cols()) {
    fail(ErrorKind::parameter, "loss_mse: shape mismatch");
  }
  const double count = (mask.array() != 0.0).count();
  if (count == 0.0) fail(ErrorKind::numeric, "loss_mse: undefined for an empty mask");
  return ((outputs - targets).array().square() * (mask.array() != 0.0).cast<double>()).sum() / count;
}

Gradients backward(const MlpModel& model, const Eigen::MatrixXd& batch, const ForwardCache& cache,
                   const Eigen::MatrixXd& targets, const Eigen::MatrixXd& mask) {
  const std::size_t hidden = model.hidden_layers();
  if (cache.batch_rows != batch.rows() || cache.activations.size() != hidden || cache.output.rows() != batch.rows() ||
      cache.output.cols() != model.layer_sizes.back()) {
    fail(ErrorKind::parameter, "backward: forward cache does not match this model and batch");
  }
  const Eigen::MatrixXd observed = (mask.array() != 0.0).cast<double>();
  const double count = observed.sum();
  if (count == 0.0) fail(ErrorKind::numeric, "backward: empty mask");

  Gradients g;
  g.weights.resize(model.layers.size());
  g.bias.resize(model.layers.size());

  // Input to layer l after dropout.
  auto layer_input = [&](std::size_t l) -> Eigen::MatrixXd {
    if (l == 0) return batch;
    const auto& a = cache.activations[l - 1];
    const auto& m = cache.masks[l - 1];
    return m.size() ? Eigen::MatrixXd(a.cwiseProduct(m)) : a;
  };

  Eigen::MatrixXd delta = (2.0 / count) * (cache.output - targets).cwiseProduct(observed);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    g.weights[l] = layer_input(l).transpose() * delta;
    g.bias[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd up = delta * model.layers[l].weights.transpose();
    const auto& m = cache.masks[l - 1];
    if (m.size()) up = up.cwiseProduct(m);
    delta = up.cwiseProduct((cache.activations[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return g;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 long step, double lr, const AdamConfig& cfg) {
  if (step < 1) fail(ErrorKind::parameter, "adam step counter starts at 1");
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    fail(ErrorKind::parameter, "adam_update: shape mismatch");
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / c1, v_hat = v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

AdamState AdamState::zeros_like(const MlpModel& model) {
  AdamState s;
  for (const auto& layer : model.layers) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    s.v_weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    s.m_bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    s.v_bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  return s;
}

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, long step, double lr, const AdamConfig& cfg) {
  if (grads.weights.size() != model.layers.size() || state.m_weights.size() != model.layers.size()) {
    fail(ErrorKind::parameter, "adam_step: gradient/state layer count mismatch");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    check_finite_grad(grads.weights[l], l);
    check_finite_grad(grads.bias[l], l);
  }
  auto span_of = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  auto cspan_of = [](const auto& m) { return std::span<const double>(m.data(), static_cast<std::size_t>(m.size())); };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    if (grads.weights[l].rows() != layer.weights.rows() || grads.weights[l].cols() != layer.weights.cols()) {
      fail(ErrorKind::parameter, fmt::format("adam_step: gradient shape mismatch in layer {}", l + 1));
    }
    adam_update(span_of(layer.weights), cspan_of(grads.weights[l]), span_of(state.m_weights[l]),
                span_of(state.v_weights[l]), step, lr, cfg);
    adam_update(span_of(layer.bias), cspan_of(grads.bias[l]), span_of(state.m_bias[l]), span_of(state.v_bias[l]),
                step, lr, cfg);
  }
}

double lr_schedule(double gamma0, long step, long decay_steps, double decay_rate) {
  return gamma0 * std::pow(decay_rate, static_cast<double>(step) / static_cast<double>(decay_steps));
}

std::vector<double> dead_relu_ratio(const ForwardCache& cache) {
  std::vector<double> out;
  for (const auto& a : cache.activations) {
    out.push_back(a.size() ? static_cast<double>((a.array() == 0.0).count()) / static_cast<double>(a.size()) : 0.0);
  }
  return out;
}

TrainingData make_training_data(const Eigen::MatrixXd& features, const TraitTable& traits) {
  if (static_cast<std::size_t>(features.rows()) != traits.size()) {
    fail(ErrorKind::parameter, fmt::format("{} feature rows vs {} users", features.rows(), traits.size()));
  }
  TrainingData d;
  d.features = features;
  d.targets = Eigen::MatrixXd::Zero(features.rows(), kNumTraits);
  d.mask = Eigen::MatrixXd::Zero(features.rows(), kNumTraits);
  for (std::size_t i = 0; i < traits.size(); ++i) {
    for (Trait t : kAllTraits) {
      if (const auto& v = traits[i][t]) {
        d.targets(static_cast<Eigen::Index>(i), index_of(t)) = *v;
        d.mask(static_cast<Eigen::Index>(i), index_of(t)) = 1.0;
      }
    }
  }
  return d;
}

DataSplit split_rows(std::size_t n, const TrainConfig& cfg) {
  const double total = cfg.train_fraction + cfg.validation_fraction + cfg.test_fraction;
  if (cfg.train_fraction <= 0.0 || cfg.validation_fraction <= 0.0 || cfg.test_fraction <= 0.0 ||
      std::abs(total - 1.0) > 1e-9) {
    fail(ErrorKind::parameter, "split fractions must be positive and sum to 1");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(cfg.seed, 10);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    fail(ErrorKind::parameter, fmt::format("{} rows cannot be split into non-empty train/validation/test sets", n));
  }
  DataSplit s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                      perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

TrainResult train(const TrainingData& data, const TrainConfig& cfg, const std::vector<Eigen::Index>& layer_sizes) {
  if (layer_sizes.size() < 3) fail(ErrorKind::parameter, "at least one hidden layer is required");
  if (layer_sizes.front() != data.features.cols()) {
    fail(ErrorKind::parameter, fmt::format("input size {} vs {} features", layer_sizes.front(), data.features.cols()));
  }
  if (layer_sizes.back() != kNumTraits) fail(ErrorKind::parameter, "the output layer must have one unit per trait");
  if (data.targets.rows() != data.features.rows() || data.targets.cols() != kNumTraits ||
      data.mask.rows() != data.targets.rows() || data.mask.cols() != data.targets.cols()) {
    fail(ErrorKind::parameter, "train: target/mask shape mismatch");
  }
  if (!(cfg.gamma0 > 0.0)) fail(ErrorKind::parameter, "learning rate must be positive");
  if (cfg.max_iterations < 1 || cfg.log_every < 1 || cfg.decay_steps < 1) {
    fail(ErrorKind::parameter, "iterations, log interval and decay steps must be positive");
  }

  TrainResult res;
  res.split = split_rows(static_cast<std::size_t>(data.features.rows()), cfg);
  if (cfg.batch_size < 1 || static_cast<std::size_t>(cfg.batch_size) > res.split.train.size()) {
    fail(ErrorKind::parameter, fmt::format("batch size {} exceeds training set of {}", cfg.batch_size, res.split.train.size()));
  }

  const Eigen::MatrixXd x_train_raw = gather_rows(data.features, res.split.train);
  const Eigen::MatrixXd y_train_raw = gather_rows(data.targets, res.split.train);
  const Eigen::MatrixXd m_train = gather_rows(data.mask, res.split.train);
  res.inputs = fit_standardizer(x_train_raw, nullptr, {});
  std::vector<bool> binary(kNumTraits);
  for (Trait t : kAllTraits) binary[static_cast<std::size_t>(index_of(t))] = is_binary(t);
  res.targets = fit_standardizer(y_train_raw, &m_train, binary);

  const Eigen::MatrixXd x_train = res.inputs.apply(x_train_raw);
  const Eigen::MatrixXd y_train = res.targets.apply(y_train_raw);
  const Eigen::MatrixXd x_val = res.inputs.apply(gather_rows(data.features, res.split.validation));
  const Eigen::MatrixXd y_val = res.targets.apply(gather_rows(data.targets, res.split.validation));
  const Eigen::MatrixXd m_val = gather_rows(data.mask, res.split.validation);

  res.model = init_model(layer_sizes, derive_seed(cfg.seed, 0));
  AdamState state = AdamState::zeros_like(res.model);
  const auto keep = keep_probabilities(res.model.hidden_layers(), cfg.dropout);
  Rng shuffle_rng = make_rng(cfg.seed, 1);
  Rng dropout_rng = make_rng(cfg.seed, 2);
  Rng probe_rng = make_rng(cfg.seed, 3);

  const auto n_train = static_cast<std::size_t>(x_train.rows());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::size_t cursor = 0;

  auto log = [&](long iteration, std::vector<double> dead) {
    TraceRow row;
    row.iteration = iteration;
    row.lr = lr_schedule(cfg.gamma0, iteration, cfg.decay_steps, cfg.decay_rate);
    row.train_loss = loss_mse(predict(res.model, x_train), y_train, m_train);
    row.validation_loss = loss_mse(predict(res.model, x_val), y_val, m_val);
    row.dead_relu = std::move(dead);
    res.trace.push_back(std::move(row));
  };
  {
    std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch));
    log(0, dead_relu_ratio(forward(res.model, gather_rows(x_train, first), keep, &probe_rng)));
  }

  std::vector<std::size_t> idx(batch);
  for (long step = 1; step <= cfg.max_iterations; ++step) {
    if (cursor + batch > n_train) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    std::copy_n(order.begin() + static_cast<std::ptrdiff_t>(cursor), batch, idx.begin());
    cursor += batch;

    const Eigen::MatrixXd xb = gather_rows(x_train, idx);
    const Eigen::MatrixXd yb = gather_rows(y_train, idx);
    const Eigen::MatrixXd mb = gather_rows(m_train, idx);
    const ForwardCache cache = forward(res.model, xb, keep, &dropout_rng);
    const double batch_loss = loss_mse(cache.output, yb, mb);
    if (!std::isfinite(batch_loss)) {
      throw DivergenceError(fmt::format("training diverged at iteration {} (non-finite loss)", step), res.trace);
    }
    const Gradients grads = backward(res.model, xb, cache, yb, mb);
    adam_step(res.model, grads, state, step, lr_schedule(cfg.gamma0, step - 1, cfg.decay_steps, cfg.decay_rate), cfg.adam);

    if (step % cfg.log_every == 0 || step == cfg.max_iterations) {
      log(step, dead_relu_ratio(cache));
      const auto& last = res.trace.back();
      if (!std::isfinite(last.train_loss) || !std::isfinite(last.validation_loss)) {
        throw DivergenceError(fmt::format("training diverged at iteration {} (non-finite loss)", step), res.trace);
      }
    }
  }
  res.overfit = res.trace.back().validation_loss > res.trace.back().train_loss;
  return res;
}

Eigen::MatrixXd network_outputs(const TrainResult& result, const Eigen::MatrixXd& features) {
  return predict(result.model, result.inputs.apply(features));
}

std::vector<AccuracyScore> evaluate_nn(const TrainResult& result, const TrainingData& data,
                                       std::span<const std::size_t> rows) {
  const Eigen::MatrixXd out = network_outputs(result, gather_rows(data.features, rows));
  std::vector<AccuracyScore> scores;
  for (Trait t : kAllTraits) {
    const Eigen::Index j = index_of(t);
    std::vector<double> pred, actual;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(rows[i]);
      if (data.mask(r, j) == 0.0) continue;
      pred.push_back(out(static_cast<Eigen::Index>(i), j));
      actual.push_back(data.targets(r, j));
    }
    scores.push_back(score_trait(t, pred, actual));
  }
  return scores;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "iteration,lr,train_loss,validation_loss";
  const std::size_t layers = trace.empty() ? 0 : trace.front().dead_relu.size();
  for (std::size_t l = 0; l < layers; ++l) out += fmt::format(",dead_relu_{}", l + 1);
  out += '\n';
  for (const auto& row : trace) {
    out += fmt::format("{},{},{},{}", row.iteration, io::format_double(row.lr), io::format_double(row.train_loss),
                       io::format_double(row.validation_loss));
    for (double d : row.dead_relu) out += ',' + io::format_double(d);
    out += '\n';
  }
  return out;
}

void save_model(const TrainResult& result, const std::filesystem::path& path) {
  std::string out = "# footprint mlp v1\nlayers";
  for (auto s : result.model.layer_sizes) out += fmt::format(" {}", s);
  out += '\n';
  auto put = [&out](std::string_view label, const auto& values) {
    out += label;
    for (Eigen::Index i = 0; i < values.size(); ++i) out += ' ' + io::format_double(values.data()[i]);
    out += '\n';
  };
  put("input_mean", result.inputs.mean);
  put("input_scale", result.inputs.scale);
  put("target_mean", result.targets.mean);
  put("target_scale", result.targets.scale);
  for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
    put(fmt::format("weights{}", l + 1), result.model.layers[l].weights);  // column-major
    put(fmt::format("bias{}", l + 1), result.model.layers[l].bias);
  }
  io::atomic_write(path, out);
}

TrainResult load_model(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "# footprint mlp v1") fail(ErrorKind::parse, path.string() + ": not a model file");
  auto values = [&](std::string_view label) {
    if (!std::getline(in, line)) fail(ErrorKind::parse, path.string() + ": truncated model file");
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head != label) fail(ErrorKind::parse, fmt::format("{}: expected '{}' line", path.string(), label));
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      double d = 0.0;
      if (!io::parse_double(tok, d)) fail(ErrorKind::parse, fmt::format("{}: bad number '{}'", path.string(), tok));
      v.push_back(d);
    }
    return v;
  };
  TrainResult res;
  for (double s : values("layers")) res.model.layer_sizes.push_back(static_cast<Eigen::Index>(s));
  if (res.model.layer_sizes.size() < 2) fail(ErrorKind::parse, path.string() + ": bad layer list");
  auto row = [&](std::string_view label, Eigen::Index n) {
    auto v = values(label);
    if (static_cast<Eigen::Index>(v.size()) != n) fail(ErrorKind::parse, fmt::format("{}: wrong size for {}", path.string(), label));
    return Eigen::RowVectorXd(Eigen::Map<Eigen::RowVectorXd>(v.data(), n));
  };
  const Eigen::Index k = res.model.layer_sizes.front(), out = res.model.layer_sizes.back();
  res.inputs.mean = row("input_mean", k);
  res.inputs.scale = row("input_scale", k);
  res.targets.mean = row("target_mean", out);
  res.targets.scale = row("target_scale", out);
  for (std::size_t l = 0; l + 1 < res.model.layer_sizes.size(); ++l) {
    const Eigen::Index r = res.model.layer_sizes[l], c = res.model.layer_sizes[l + 1];
    DenseLayer layer;
    auto w = values(fmt::format("weights{}", l + 1));
    auto b = values(fmt::format("bias{}", l + 1));
    if (static_cast<Eigen::Index>(w.size()) != r * c || static_cast<Eigen::Index>(b.size()) != c) {
      fail(ErrorKind::parse, fmt::format("{}: wrong parameter count in layer {}", path.string(), l + 1));
    }
    layer.weights = Eigen::Map<Eigen::MatrixXd>(w.data(), r, c);
    layer.bias = Eigen::Map<Eigen::VectorXd>(b.data(), c);
    res.model.layers.push_back(std::move(layer));
  }
  return res;
}

}  // namespace footprint
