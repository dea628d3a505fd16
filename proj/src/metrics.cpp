#include "footprint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "footprint/error.hpp"

namespace footprint {

double pearson(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) {
    fail(ErrorKind::parameter, fmt::format("pearson: length mismatch {} vs {}", pred.size(), actual.size()));
  }
  const std::size_t n = pred.size();
  if (n < 2) fail(ErrorKind::parameter, "pearson: need at least two points");
  const double mx = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pred[i] - mx, dy = actual[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) fail(ErrorKind::numeric, "pearson: undefined correlation (zero variance)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::parameter, fmt::format("auc: length mismatch {} vs {}", scores.size(), labels.size()));
  }
  const std::size_t n = scores.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) fail(ErrorKind::parameter, "auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) fail(ErrorKind::parameter, "auc: NaN score");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the rank sum of positives keeps midranks integral.
  std::uint64_t rank2_pos = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::size_t midrank2 = i + 1 + j;  // 2 * average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0.0) {
        rank2_pos += midrank2;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::numeric, "auc: undefined with a single class");
  const std::uint64_t u2 = rank2_pos - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

AccuracyScore score_trait(Trait trait, std::span<const double> pred, std::span<const double> actual) {
  const MetricKind kind = metric_for(trait);
  return {trait, kind, kind == MetricKind::auc ? auc(pred, actual) : pearson(pred, actual)};
}

}  // namespace footprint
