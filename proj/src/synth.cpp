#include "footprint/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "footprint/error.hpp"
#include "footprint/io.hpp"
#include "footprint/rng.hpp"

namespace footprint {

namespace {

enum Stream : std::uint64_t { user_factors = 1, like_affinity, like_draws, trait_noise, missing_cells };

Rng row_rng(std::uint64_t seed, Stream stream, std::size_t row) {
  return make_rng(derive_seed(seed, stream), row);
}

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

void validate(const SynthConfig& cfg) {
  if (cfg.n_users == 0 || cfg.n_likes == 0) fail(ErrorKind::parameter, "n_users and n_likes must be positive");
  if (cfg.n_factors < 1 || static_cast<std::size_t>(cfg.n_factors) > std::min(cfg.n_users, cfg.n_likes)) {
    fail(ErrorKind::parameter, fmt::format("n_factors {} outside [1, min(n_users, n_likes)]", cfg.n_factors));
  }
  if (!(cfg.like_base_rate >= 0.0 && cfg.like_base_rate <= 1.0)) fail(ErrorKind::parameter, "like_base_rate must lie in [0,1]");
  if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate <= 1.0)) fail(ErrorKind::parameter, "missing_rate must lie in [0,1]");
  if (!std::isfinite(cfg.affinity_scale)) fail(ErrorKind::parameter, "affinity_scale must be finite");
  if (cfg.nonlinear_trait && cfg.n_factors < 2) fail(ErrorKind::parameter, "a nonlinear trait needs at least 2 factors");
  for (Trait t : kAllTraits) {
    const auto& w = cfg.signal[index_of(t)];
    const double sd = cfg.noise_sd[index_of(t)];
    if (w.size() != 0 && w.size() != cfg.n_factors) {
      fail(ErrorKind::parameter, fmt::format("{} loadings have length {}, expected {}", name_of(t), w.size(), cfg.n_factors));
    }
    if (!(sd >= 0.0) || !std::isfinite(sd) || (w.size() && !w.allFinite())) {
      fail(ErrorKind::parameter, fmt::format("{}: loadings and noise_sd must be finite, noise_sd non-negative", name_of(t)));
    }
    const bool planted = cfg.nonlinear_trait == t;
    if (!planted && sd == 0.0 && (w.size() == 0 || w.isZero(0.0))) {
      fail(ErrorKind::parameter, fmt::format("{}: all-zero signal with zero noise is degenerate", name_of(t)));
    }
  }
}

Eigen::MatrixXd standard_normal_rows(std::size_t rows, Eigen::Index cols, std::uint64_t seed, Stream stream) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), cols);
  std::normal_distribution<double> normal;
  for (std::size_t r = 0; r < rows; ++r) {
    Rng rng = row_rng(seed, stream, r);
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = normal(rng);
  }
  return m;
}

// Bias making the mean like probability over a row sample equal the base rate.
double calibrate_bias(const Eigen::MatrixXd& logits, double rate) {
  auto mean_p = [&](double b) { return logits.unaryExpr([b](double z) { return logistic(b + z); }).mean(); };
  double lo = -60.0, hi = 60.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_p(mid) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double median(std::vector<double> v) {
  const std::size_t n = v.size(), mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

}  // namespace

SynthConfig planted_config(std::size_t n_users, std::size_t n_likes, Eigen::Index n_factors, bool nonlinear,
                           std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_users = n_users;
  cfg.n_likes = n_likes;
  cfg.n_factors = n_factors;
  cfg.seed = seed;
  cfg.missing_rate = 0.1;
  // At an even base rate the logistic link has no quadratic term, so the
  // likes carry no linear trace of factor products.
  cfg.like_base_rate = 0.5;
  auto load = [&](Trait t, std::initializer_list<std::pair<Eigen::Index, double>> w, double noise) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_factors);
    for (auto [f, x] : w) v(f % n_factors) += x;
    cfg.signal[index_of(t)] = v;
    cfg.noise_sd[index_of(t)] = noise;
  };
  // Factors 0 and 1 are kept for the nonlinear trait.
  load(Trait::gender, {{2, 1.0}, {3, 0.5}}, 0.3);
  load(Trait::age, {{4, 1.0}, {5, 0.5}}, 0.3);
  load(Trait::political, {{6, 0.8}}, 0.6);
  load(Trait::ope, {{7, 0.7}}, 0.7);
  load(Trait::con, {{8, 0.7}}, 0.7);
  load(Trait::ext, {{9, 0.7}}, 0.7);
  load(Trait::agr, {{10, 0.7}}, 0.7);
  cfg.noise_sd[index_of(Trait::neu)] = 1.0;
  if (nonlinear) {
    cfg.nonlinear_trait = Trait::ope;
    cfg.signal[index_of(Trait::ope)] = Eigen::VectorXd();
    cfg.noise_sd[index_of(Trait::ope)] = 0.3;
  }
  return cfg;
}

SynthCorpus generate(const SynthConfig& cfg) {
  validate(cfg);
  SynthCorpus out;
  out.user_factors = standard_normal_rows(cfg.n_users, cfg.n_factors, cfg.seed, user_factors);
  out.like_affinity = standard_normal_rows(cfg.n_likes, cfg.n_factors, cfg.seed, like_affinity);
  const double scale = cfg.affinity_scale / std::sqrt(static_cast<double>(cfg.n_factors));

  const Eigen::Index probe_rows = std::min<Eigen::Index>(500, out.user_factors.rows());
  const Eigen::MatrixXd probe = scale * out.user_factors.topRows(probe_rows) * out.like_affinity.transpose();
  out.bias = calibrate_bias(probe, cfg.like_base_rate);

  std::vector<std::string> user_ids(cfg.n_users), like_ids(cfg.n_likes);
  for (std::size_t i = 0; i < cfg.n_users; ++i) user_ids[i] = fmt::format("u{:06d}", i + 1);
  for (std::size_t j = 0; j < cfg.n_likes; ++j) {
    like_ids[j] = fmt::format("like_{:06d}", j + 1);
    out.likes.add({like_ids[j], fmt::format("Page {}", j + 1)});
  }

  std::vector<UserLikeMatrix::Entry> entries;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    const Eigen::VectorXd logits =
        (scale * out.like_affinity * out.user_factors.row(static_cast<Eigen::Index>(i)).transpose()).array() + out.bias;
    Rng rng = row_rng(cfg.seed, like_draws, i);
    for (std::size_t j = 0; j < cfg.n_likes; ++j) {
      double p = logistic(logits(static_cast<Eigen::Index>(j)));
      if (cfg.like_base_rate == 0.0) p = 0.0;
      if (cfg.like_base_rate == 1.0) p = 1.0;
      if (unif(rng) < p) {
        entries.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
        out.pairs.push_back({user_ids[i], like_ids[j]});
      }
    }
  }

  std::array<std::vector<double>, kNumTraits> values;
  std::normal_distribution<double> normal;
  for (auto& v : values) v.resize(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    Rng rng = row_rng(cfg.seed, trait_noise, i);
    const auto f = out.user_factors.row(static_cast<Eigen::Index>(i));
    for (Trait t : kAllTraits) {
      const auto k = index_of(t);
      double x = 0.0;
      if (cfg.nonlinear_trait == t) {
        x = f(0) * f(1);
      } else if (cfg.signal[k].size()) {
        x = f.dot(cfg.signal[k]);
      }
      values[k][i] = x + cfg.noise_sd[k] * normal(rng);
    }
  }
  for (Trait t : kAllTraits) {
    auto& v = values[index_of(t)];
    if (is_binary(t)) {
      const double cut = median(v);
      for (double& x : v) x = x > cut ? 1.0 : 0.0;
    } else if (t == Trait::age) {
      for (double& x : v) x = std::max(0.0, 30.0 + 8.0 * x);
    }
  }

  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    UserProfile p;
    p.user_id = user_ids[i];
    for (Trait t : kAllTraits) p[t] = values[index_of(t)][i];
    Rng rng = row_rng(cfg.seed, missing_cells, i);
    if (unif(rng) < cfg.missing_rate) p[Trait::political].reset();
    out.traits.add(std::move(p));
  }

  out.matrix = UserLikeMatrix::from_entries(std::move(user_ids), std::move(like_ids), std::move(entries));
  return out;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  write_users(corpus.traits, dir / "users.csv");
  write_likes(corpus.likes, dir / "likes.csv");
  write_pairs(corpus.pairs, dir / "users-likes.csv");
  std::string truth = "userid";
  for (Eigen::Index k = 0; k < corpus.user_factors.cols(); ++k) truth += fmt::format(",f{}", k + 1);
  truth += '\n';
  for (std::size_t i = 0; i < corpus.traits.size(); ++i) {
    truth += corpus.traits[i].user_id;
    for (Eigen::Index k = 0; k < corpus.user_factors.cols(); ++k) {
      truth += ',' + io::format_double(corpus.user_factors(static_cast<Eigen::Index>(i), k));
    }
    truth += '\n';
  }
  io::atomic_write(dir / "truth_factors.csv", truth);
}

}  // namespace footprint
