#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "footprint/ingest.hpp"
#include "footprint/traits.hpp"

namespace footprint {

struct SynthConfig {
  std::size_t n_users = 1000;
  std::size_t n_likes = 400;
  Eigen::Index n_factors = 10;
  double like_base_rate = 0.08;  // target mean like probability
  double affinity_scale = 1.5;   // logit = bias + scale * f.a / sqrt(n_factors)
  std::array<Eigen::VectorXd, kNumTraits> signal;  // per-trait loadings on the factors; empty means zero
  std::array<double, kNumTraits> noise_sd{};
  std::optional<Trait> nonlinear_trait;  // planted as f1 * f2 + noise, ignoring its loadings
  double missing_rate = 0.0;             // fraction of political cells blanked
  std::uint64_t seed = 0;
};

struct SynthCorpus {
  TraitTable traits;
  LikeCatalog likes;
  std::vector<UserLikePair> pairs;
  UserLikeMatrix matrix;          // all users and likes, including empty rows/columns
  Eigen::MatrixXd user_factors;   // n_users x n_factors
  Eigen::MatrixXd like_affinity;  // n_likes x n_factors
  double bias = 0.0;
};

// A corpus with strong binary (gender) and continuous (age) signal, a pure
// noise trait (neu), moderate linear signal elsewhere and 10% missing
// political. With `nonlinear`, ope becomes f1 * f2 + noise. Likes use a
// base rate of 0.5.
SynthConfig planted_config(std::size_t n_users, std::size_t n_likes, Eigen::Index n_factors, bool nonlinear,
                           std::uint64_t seed);

SynthCorpus generate(const SynthConfig& cfg);

// users.csv, likes.csv, users-likes.csv and truth_factors.csv in `dir`.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace footprint
