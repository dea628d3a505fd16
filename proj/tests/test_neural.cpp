#include <doctest.h>

#include <cmath>

#include "footprint/neural.hpp"
#include "test_support.hpp"

using namespace footprint;
using testing::error_of;

namespace {

Eigen::MatrixXd random_mask(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> unif(0, 1);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unif(rng) < 0.8 ? 1.0 : 0.0;
  m(0, 0) = 1.0;
  return m;
}

// Loss under the dropout masks produced by a freshly seeded rng.
double loss_at(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& mask,
               std::span<const double> keep, std::uint64_t mask_seed) {
  Rng rng = make_rng(mask_seed, 0);
  return loss_mse(forward(model, x, keep, &rng).output, y, mask);
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double denom = std::max((a.cwiseAbs() + b.cwiseAbs()).norm(), 1e-12);
  return (a - b).norm() / denom;
}

// Targets are a fixed linear map of the features plus a little noise,
// thresholded at zero for the binary traits.
TrainingData planted_linear(Eigen::Index n, Eigen::Index p, Rng& rng) {
  TrainingData d;
  d.features = testing::random_normal(n, p, rng);
  const Eigen::MatrixXd w = testing::random_normal(p, kNumTraits, rng);
  d.targets = d.features * w + 0.05 * testing::random_normal(n, kNumTraits, rng);
  for (Trait t : {Trait::gender, Trait::political}) {
    d.targets.col(index_of(t)) = (d.targets.col(index_of(t)).array() > 0.0).cast<double>();
  }
  d.mask = Eigen::MatrixXd::Ones(n, kNumTraits);
  return d;
}

}  // namespace

TEST_CASE("init_model shapes and determinism") {
  const auto m = init_model({6, 5, 4, 8}, 3);
  REQUIRE(m.layers.size() == 3);
  CHECK(m.hidden_layers() == 2);
  CHECK(m.layers[0].weights.rows() == 6);
  CHECK(m.layers[0].weights.cols() == 5);
  CHECK(m.layers[2].bias.size() == 8);
  for (const auto& l : m.layers) {
    CHECK(l.bias.isZero(0.0));
    CHECK(l.weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / double(l.weights.rows())));
  }
  CHECK(init_model({6, 5, 4, 8}, 3) == m);
  CHECK_FALSE(init_model({6, 5, 4, 8}, 4) == m);
  error_of(ErrorKind::parameter, [] { init_model({4}, 0); });
  error_of(ErrorKind::parameter, [] { init_model({4, 0, 8}, 0); });

  // Empirical variance close to 2 / fan_in.
  const auto wide = init_model({400, 400, 8}, 1);
  const double var = wide.layers[0].weights.array().square().mean();
  CHECK(std::abs(var - 2.0 / 400) <= 0.05 * 2.0 / 400);
}

TEST_CASE("keep probabilities") {
  CHECK(keep_probabilities(3, DropoutScheme::every_layer) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(keep_probabilities(1, DropoutScheme::indexed) == std::vector<double>{1.0});
  CHECK(keep_probabilities(3, DropoutScheme::indexed) == std::vector<double>{1.0, 0.5, 1.0});
  CHECK(keep_probabilities(4, DropoutScheme::indexed) == std::vector<double>{1.0, 0.25, 1.0, 0.5});
}

TEST_CASE("hand-computed forward pass") {
  MlpModel m;
  m.layer_sizes = {2, 2, 1};
  m.layers.resize(2);
  m.layers[0].weights.resize(2, 2);
  m.layers[0].weights << 1, -1, 2, 1;
  m.layers[0].bias = Eigen::Vector2d(0, -1);
  m.layers[1].weights.resize(2, 1);
  m.layers[1].weights << 2, 5;
  m.layers[1].bias = Eigen::VectorXd::Constant(1, 0.5);
  Eigen::MatrixXd x(1, 2);
  x << 1, 1;
  // Hidden pre-activation (3, -1), ReLU gives (3, 0), output 2 * 3 + 0.5.
  const auto c = forward(m, x, {}, nullptr);
  CHECK(c.output(0, 0) == 6.5);
  CHECK(c.activations[0](0, 1) == 0.0);
  CHECK(dead_relu_ratio(c) == std::vector<double>{0.5});
  CHECK(predict(m, x)(0, 0) == 6.5);

  error_of(ErrorKind::parameter, [&] { forward(m, Eigen::MatrixXd::Ones(1, 3), {}, nullptr); });
  Eigen::MatrixXd nan = x;
  nan(0, 0) = std::nan("");
  error_of(ErrorKind::parameter, [&] { forward(m, nan, {}, nullptr); });
}

TEST_CASE("keep of one makes train mode equal eval mode") {
  Rng rng = make_rng(1, 0);
  const auto m = init_model({5, 7, 6, 8}, 2);
  const Eigen::MatrixXd x = testing::random_normal(10, 5, rng);
  const std::vector<double> keep{1.0, 1.0};
  CHECK(forward(m, x, keep, &rng).output == predict(m, x));
}

TEST_CASE("dead units") {
  auto m = init_model({3, 4, 8}, 5);
  m.layers[0].bias.setConstant(-100.0);
  Rng rng = make_rng(2, 0);
  const Eigen::MatrixXd x = testing::random_normal(20, 3, rng);
  const auto dead = forward(m, x, {}, nullptr);
  CHECK(dead.activations[0].isZero(0.0));
  CHECK(dead_relu_ratio(dead) == std::vector<double>{1.0});
  m.layers[0].bias.setConstant(100.0);
  CHECK(dead_relu_ratio(forward(m, x, {}, nullptr)) == std::vector<double>{0.0});
}

TEST_CASE("inverted dropout preserves the expectation") {
  const auto m = init_model({2, 4, 8}, 1);
  Rng rng = make_rng(3, 0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(100000, 2);
  for (double keep : {0.5, 0.25}) {
    const std::vector<double> k{keep};
    const auto c = forward(m, x, k, &rng);
    REQUIRE(c.masks.size() == 1);
    const double mean = c.masks[0].mean();
    CHECK(std::abs(mean - 1.0) <= 0.02);
    CHECK((c.masks[0].array() == 0.0 || c.masks[0].array() == 1.0 / keep).all());
  }
}

TEST_CASE("loss_mse") {
  Eigen::MatrixXd o(1, 2), t(1, 2), mask(1, 2);
  o << 1, 2;
  t << 0, 0;
  mask << 1, 1;
  CHECK(loss_mse(o, t, mask) == 2.5);
  mask << 1, 0;
  CHECK(loss_mse(o, t, mask) == 1.0);
  t << 1, 2;
  mask << 1, 1;
  CHECK(loss_mse(o, t, mask) == 0.0);
  mask.setZero();
  error_of(ErrorKind::numeric, [&] { loss_mse(o, t, mask); });
  error_of(ErrorKind::parameter, [&] { loss_mse(o, Eigen::MatrixXd::Zero(2, 2), mask); });
}

TEST_CASE("backward matches central finite differences") {
  Rng rng = make_rng(4, 0);
  for (bool dropout : {false, true}) {
    auto m = init_model({5, 4, 3, 8}, 6);
    // Nonzero biases keep pre-activations of fully dropped rows off the ReLU kink.
    for (auto& l : m.layers) l.bias = 0.5 * testing::random_normal(l.bias.size(), 1, rng).col(0);
    const Eigen::MatrixXd x = testing::random_normal(7, 5, rng);
    const Eigen::MatrixXd y = testing::random_normal(7, 8, rng);
    const Eigen::MatrixXd mask = random_mask(7, 8, rng);
    const std::vector<double> keep = dropout ? std::vector<double>{0.5, 0.75} : std::vector<double>{1.0, 1.0};
    Rng mask_rng = make_rng(99, 0);
    const auto cache = forward(m, x, keep, &mask_rng);
    const auto g = backward(m, x, cache, y, mask);
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      Eigen::MatrixXd fd_w(m.layers[l].weights.rows(), m.layers[l].weights.cols());
      for (Eigen::Index i = 0; i < fd_w.rows(); ++i) {
        for (Eigen::Index j = 0; j < fd_w.cols(); ++j) {
          MlpModel plus = m, minus = m;
          plus.layers[l].weights(i, j) += h;
          minus.layers[l].weights(i, j) -= h;
          fd_w(i, j) = (loss_at(plus, x, y, mask, keep, 99) - loss_at(minus, x, y, mask, keep, 99)) / (2 * h);
        }
      }
      Eigen::VectorXd fd_b(m.layers[l].bias.size());
      for (Eigen::Index i = 0; i < fd_b.size(); ++i) {
        MlpModel plus = m, minus = m;
        plus.layers[l].bias(i) += h;
        minus.layers[l].bias(i) -= h;
        fd_b(i) = (loss_at(plus, x, y, mask, keep, 99) - loss_at(minus, x, y, mask, keep, 99)) / (2 * h);
      }
      CHECK(relative_error(g.weights[l], fd_w) <= 1e-4);
      CHECK(relative_error(g.bias[l], fd_b) <= 1e-4);
    }
  }
}

TEST_CASE("gradient identities") {
  Rng rng = make_rng(5, 0);
  const auto m = init_model({4, 6, 8}, 7);
  const Eigen::MatrixXd x = testing::random_normal(5, 4, rng);
  const Eigen::MatrixXd y = testing::random_normal(5, 8, rng);
  const Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(5, 8);
  const auto c = forward(m, x, {}, nullptr);
  const auto g = backward(m, x, c, y, mask);

  // A batch stacked on itself has the same mean loss and gradients.
  Eigen::MatrixXd x2(10, 4), y2(10, 8);
  x2 << x, x;
  y2 << y, y;
  const auto g2 = backward(m, x2, forward(m, x2, {}, nullptr), y2, Eigen::MatrixXd::Ones(10, 8));
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    CHECK((g.weights[l] - g2.weights[l]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((g.bias[l] - g2.bias[l]).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // Zero error gives zero gradients.
  const auto g0 = backward(m, x, c, c.output, mask);
  for (std::size_t l = 0; l < g0.weights.size(); ++l) {
    CHECK(g0.weights[l].isZero(0.0));
    CHECK(g0.bias[l].isZero(0.0));
  }
}

TEST_CASE("Adam update") {
  std::vector<double> p{0.0}, m{0.0}, v{0.0};
  const std::vector<double> g{4.0};
  adam_update(p, g, m, v, 1, 0.1);
  CHECK(std::abs(p[0] + 0.1) <= 1e-8);
  CHECK(std::abs(m[0] - 0.4) <= 1e-15);
  CHECK(std::abs(v[0] - 0.016) <= 1e-15);

  std::vector<double> q{1.5}, mq{0.0}, vq{0.0};
  const std::vector<double> zero{0.0};
  adam_update(q, zero, mq, vq, 1, 0.1);
  CHECK(q[0] == 1.5);

  // The first step is scale invariant in the gradient.
  std::vector<double> a{0.0}, ma{0.0}, va{0.0}, b{0.0}, mb{0.0}, vb{0.0};
  const std::vector<double> small{0.3}, big{30.0};
  adam_update(a, small, ma, va, 1, 0.01);
  adam_update(b, big, mb, vb, 1, 0.01);
  CHECK(std::abs(a[0] - b[0]) <= 1e-9);

  error_of(ErrorKind::parameter, [&] { adam_update(p, g, m, v, 0, 0.1); });

  auto model = init_model({3, 4, 8}, 1);
  auto state = AdamState::zeros_like(model);
  Gradients bad;
  for (const auto& l : model.layers) {
    bad.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    bad.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  bad.weights[1](0, 0) = std::numeric_limits<double>::infinity();
  CHECK(error_of(ErrorKind::numeric, [&] { adam_step(model, bad, state, 1, 1e-3); }).find("layer 2") !=
        std::string::npos);
}

TEST_CASE("learning-rate schedule") {
  CHECK(std::abs(lr_schedule(1e-4, 0) - 1e-4) <= 1e-12);
  CHECK(std::abs(lr_schedule(1e-4, 10000) - 9.6e-5) <= 1e-12);
  CHECK(std::abs(lr_schedule(1e-4, 20000) - 1e-4 * 0.9216) <= 1e-12);
  CHECK(lr_schedule(1e-4, 5000) < 1e-4);
  CHECK(lr_schedule(1e-4, 5000) > 9.6e-5);
}

TEST_CASE("split_rows") {
  TrainConfig cfg;
  const auto s = split_rows(1000, cfg);
  CHECK(s.train.size() == 800);
  CHECK(s.validation.size() == 100);
  CHECK(s.test.size() == 100);
  std::vector<int> seen(1000, 0);
  for (const auto* part : {&s.train, &s.validation, &s.test})
    for (auto i : *part) seen[i]++;
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  CHECK(split_rows(1000, cfg).train == s.train);
  error_of(ErrorKind::parameter, [&] { split_rows(3, cfg); });
  cfg.test_fraction = 0.3;
  error_of(ErrorKind::parameter, [&] { split_rows(100, cfg); });
}

TEST_CASE("training errors") {
  Rng rng = make_rng(6, 0);
  const auto d = planted_linear(200, 5, rng);
  TrainConfig cfg{.max_iterations = 10, .log_every = 5};
  error_of(ErrorKind::parameter, [&] { train(d, cfg, {5, 8}); });
  error_of(ErrorKind::parameter, [&] { train(d, cfg, {4, 10, 8}); });
  error_of(ErrorKind::parameter, [&] { train(d, cfg, {5, 10, 7}); });
  cfg.batch_size = 1000;
  error_of(ErrorKind::parameter, [&] { train(d, cfg, {5, 10, 8}); });
  cfg.batch_size = 10;
  cfg.gamma0 = 0.0;
  error_of(ErrorKind::parameter, [&] { train(d, cfg, {5, 10, 8}); });
}

TEST_CASE("training learns a planted linear signal") {
  Rng rng = make_rng(7, 0);
  const auto d = planted_linear(1000, 6, rng);
  const TrainConfig cfg{.gamma0 = 3e-3, .batch_size = 50, .max_iterations = 2000, .log_every = 250,
                        .dropout = DropoutScheme::indexed, .seed = 11};
  const auto r = train(d, cfg, {6, 64, 8});
  REQUIRE(r.trace.size() == 9);
  CHECK(r.trace.front().iteration == 0);
  CHECK(r.trace.back().iteration == 2000);
  CHECK(r.trace.front().train_loss >= 10 * r.trace.back().train_loss);
  for (const auto& row : r.trace) {
    CHECK(row.lr == lr_schedule(cfg.gamma0, row.iteration, cfg.decay_steps, cfg.decay_rate));
    CHECK(row.dead_relu.size() == 1);
  }
  CHECK(r.overfit == (r.trace.back().validation_loss > r.trace.back().train_loss));
  const auto scores = evaluate_nn(r, d, r.split.test);
  for (Trait t : {Trait::age, Trait::ope, Trait::neu}) CHECK(scores[std::size_t(index_of(t))].value > 0.95);

  const auto again = train(d, cfg, {6, 64, 8});
  CHECK(again.model == r.model);
  CHECK(trace_csv(again.trace) == trace_csv(r.trace));
  CHECK(trace_csv(r.trace).rfind("iteration,lr,train_loss,validation_loss,dead_relu_1\n0,", 0) == 0);

  testing::TempDir dir;
  save_model(r, dir / "model.txt");
  const auto back = load_model(dir / "model.txt");
  CHECK(back.model == r.model);
  CHECK(back.inputs.mean == r.inputs.mean);
  CHECK(back.targets.scale == r.targets.scale);
  CHECK(network_outputs(back, d.features) == network_outputs(r, d.features));
  testing::write_text(dir / "bad.txt", "# footprint mlp v1\nlayers 6 x 8\n");
  error_of(ErrorKind::parse, [&] { load_model(dir / "bad.txt"); });
}

TEST_CASE("make_training_data marks missing cells") {
  TraitTable t;
  for (int i = 0; i < 3; ++i) {
    UserProfile p;
    p.user_id = "u" + std::to_string(i);
    for (Trait tr : kAllTraits) p[tr] = double(i % 2);
    t.add(p);
  }
  t.at(1)[Trait::political].reset();
  const auto d = make_training_data(Eigen::MatrixXd::Ones(3, 2), t);
  CHECK(d.mask.sum() == 23.0);
  CHECK(d.mask(1, index_of(Trait::political)) == 0.0);
  error_of(ErrorKind::parameter, [&] { make_training_data(Eigen::MatrixXd::Ones(2, 2), t); });
}
