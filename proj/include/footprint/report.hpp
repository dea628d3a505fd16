#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "footprint/metrics.hpp"

namespace footprint {

// Accuracy of one fitted model family on the eight traits.
struct EvalReport {
  std::string model;  // regression | snn | dnn2 | dnn3
  Eigen::Index K = 0;
  std::string hyper;  // free-form "key=value;..." description
  std::vector<AccuracyScore> scores;
  std::optional<bool> overfit;  // set for network runs
};

// Arithmetic mean of the per-trait accuracies.
double mean_accuracy(const EvalReport& report);

// Scores sorted into trait order; throws on an empty or duplicated trait list.
EvalReport normalized(EvalReport report);

enum class ReportFormat { csv, text };

// model,trait,K,hyper,metric,accuracy,percent,overfit with a trailing mean row.
std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

EvalReport parse_report_csv(const std::filesystem::path& path);

// Side-by-side comparison, one column per model in the order
// regression, snn, dnn2, dnn3.
std::string summary_csv(const std::vector<EvalReport>& reports);
std::string summary_text(const std::vector<EvalReport>& reports);

// Percentage with two decimals, e.g. 0.93651 -> "93.65".
std::string percent(double accuracy);

}  // namespace footprint
