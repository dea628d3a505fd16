#pragma once

#include <span>
#include <string>

#include "footprint/traits.hpp"

namespace footprint {

struct AccuracyScore {
  Trait trait;
  MetricKind kind;
  double value;
};

// Sample Pearson product-moment correlation. Throws on length mismatch,
// fewer than two points, or a zero-variance argument.
double pearson(std::span<const double> pred, std::span<const double> actual);

// ROC AUC as the Mann-Whitney statistic with midranks: the probability that a
// random positive outscores a random negative, ties counting one half.
// Labels are 0/1; throws if only one class is present.
double auc(std::span<const double> scores, std::span<const double> labels);

// Pearson for continuous traits, AUC for binary ones.
AccuracyScore score_trait(Trait trait, std::span<const double> pred, std::span<const double> actual);

}  // namespace footprint
