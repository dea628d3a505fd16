#include "footprint/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include <fmt/format.h>

#include "footprint/csv.hpp"
#include "footprint/error.hpp"
#include "footprint/io.hpp"

namespace footprint {

namespace {

constexpr std::array<std::string_view, 4> kModelOrder = {"regression", "snn", "dnn2", "dnn3"};

std::size_t model_rank(const std::string& model) {
  const auto it = std::find(kModelOrder.begin(), kModelOrder.end(), model);
  return static_cast<std::size_t>(it - kModelOrder.begin());
}

std::string overfit_cell(const std::optional<bool>& f) { return f ? (*f ? "yes" : "no") : "NA"; }

std::string metric_label(MetricKind k) { return k == MetricKind::auc ? "AUC" : "Pearson"; }

std::vector<EvalReport> ordered(std::vector<EvalReport> reports) {
  if (reports.empty()) fail(ErrorKind::empty, "no evaluation results to summarize");
  for (auto& r : reports) r = normalized(std::move(r));
  std::stable_sort(reports.begin(), reports.end(),
                   [](const EvalReport& a, const EvalReport& b) { return model_rank(a.model) < model_rank(b.model); });
  return reports;
}

const AccuracyScore* find_score(const EvalReport& r, Trait t) {
  for (const auto& s : r.scores)
    if (s.trait == t) return &s;
  return nullptr;
}

}  // namespace

std::string percent(double accuracy) { return fmt::format("{:.2f}", 100.0 * accuracy); }

double mean_accuracy(const EvalReport& report) {
  if (report.scores.empty()) fail(ErrorKind::empty, "mean of an empty report");
  double sum = 0.0;
  for (const auto& s : report.scores) sum += s.value;
  return sum / static_cast<double>(report.scores.size());
}

EvalReport normalized(EvalReport report) {
  if (report.scores.empty()) fail(ErrorKind::empty, fmt::format("report for '{}' has no rows", report.model));
  std::stable_sort(report.scores.begin(), report.scores.end(),
                   [](const AccuracyScore& a, const AccuracyScore& b) { return index_of(a.trait) < index_of(b.trait); });
  for (std::size_t i = 1; i < report.scores.size(); ++i) {
    if (report.scores[i].trait == report.scores[i - 1].trait) {
      fail(ErrorKind::validation, fmt::format("duplicate trait '{}' in report", name_of(report.scores[i].trait)));
    }
  }
  return report;
}

std::string report_csv(const EvalReport& input) {
  const EvalReport r = normalized(input);
  std::string out = "model,trait,K,hyper,metric,accuracy,percent,overfit\n";
  const std::string prefix = fmt::format("{},", csv::escape(r.model));
  const std::string middle = fmt::format(",{},{},", r.K, csv::escape(r.hyper));
  for (const auto& s : r.scores) {
    out += prefix + std::string(name_of(s.trait)) + middle +
           fmt::format("{},{},{},{}\n", name_of(s.kind), io::format_double(s.value), percent(s.value),
                       overfit_cell(r.overfit));
  }
  const double mean = mean_accuracy(r);
  out += prefix + "mean" + middle +
         fmt::format("mean,{},{},{}\n", io::format_double(mean), percent(mean), overfit_cell(r.overfit));
  return out;
}

std::string report_text(const EvalReport& input) {
  const EvalReport r = normalized(input);
  std::string out = fmt::format("Prediction accuracy: {} (K = {})\n", r.model, r.K);
  if (!r.hyper.empty()) out += fmt::format("Parameters: {}\n", r.hyper);
  out += '\n';
  out += fmt::format("{:<20} {:<8} {:>9}\n", "Trait", "Metric", "Accuracy");
  for (const auto& s : r.scores) {
    out += fmt::format("{:<20} {:<8} {:>8}%\n", label_of(s.trait), metric_label(s.kind), percent(s.value));
  }
  out += fmt::format("{:<20} {:<8} {:>8}%\n", "Mean", "", percent(mean_accuracy(r)));
  if (r.overfit) out += fmt::format("\nOverfitting (validation loss above train loss): {}\n", overfit_cell(r.overfit));
  return out;
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  io::atomic_write(path, format == ReportFormat::csv ? report_csv(report) : report_text(report));
}

EvalReport parse_report_csv(const std::filesystem::path& path) {
  csv::Reader reader(path);
  std::vector<std::string> f;
  if (!reader.next(f) || csv::join(f) != "model,trait,K,hyper,metric,accuracy,percent,overfit") {
    fail(ErrorKind::parse, path.string() + ": not an evaluation report");
  }
  EvalReport r;
  bool first = true;
  while (reader.next(f)) {
    const auto where = fmt::format("{}:{}", path.string(), reader.line());
    if (f.size() != 8) fail(ErrorKind::parse, where + ": expected 8 fields");
    if (first) {
      r.model = f[0];
      r.hyper = f[3];
      long long k = 0;
      auto [p, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), k);
      if (ec != std::errc{} || p != f[2].data() + f[2].size()) fail(ErrorKind::parse, where + ": bad K");
      r.K = static_cast<Eigen::Index>(k);
      if (f[7] != "NA") r.overfit = f[7] == "yes";
      first = false;
    }
    if (f[1] == "mean") continue;
    const auto trait = trait_from_name(f[1]);
    if (!trait) fail(ErrorKind::parse, fmt::format("{}: unknown trait '{}'", where, f[1]));
    double value = 0.0;
    if (!io::parse_double(f[5], value)) fail(ErrorKind::parse, where + ": bad accuracy");
    const MetricKind kind = f[4] == "auc" ? MetricKind::auc : MetricKind::pearson;
    r.scores.push_back({*trait, kind, value});
  }
  return normalized(std::move(r));
}

std::string summary_csv(const std::vector<EvalReport>& input) {
  const auto reports = ordered(input);
  std::string out = "trait,metric";
  for (const auto& r : reports) out += ',' + csv::escape(r.model);
  out += '\n';
  for (Trait t : kAllTraits) {
    out += fmt::format("{},{}", name_of(t), name_of(metric_for(t)));
    for (const auto& r : reports) {
      const auto* s = find_score(r, t);
      out += ',' + (s ? percent(s->value) : std::string("NA"));
    }
    out += '\n';
  }
  out += "mean,";
  for (const auto& r : reports) out += ',' + percent(mean_accuracy(r));
  out += "\nK,";
  for (const auto& r : reports) out += fmt::format(",{}", r.K);
  out += "\noverfit,";
  for (const auto& r : reports) out += ',' + overfit_cell(r.overfit);
  out += '\n';
  return out;
}

std::string summary_text(const std::vector<EvalReport>& input) {
  const auto reports = ordered(input);
  std::string out = "Prediction accuracy by model (%)\n\n";
  out += fmt::format("{:<20}", "Trait");
  for (const auto& r : reports) out += fmt::format(" {:>10}", r.model);
  out += '\n';
  for (Trait t : kAllTraits) {
    out += fmt::format("{:<20}", label_of(t));
    for (const auto& r : reports) {
      const auto* s = find_score(r, t);
      out += fmt::format(" {:>10}", s ? percent(s->value) : "NA");
    }
    out += '\n';
  }
  out += fmt::format("{:<20}", "Mean");
  for (const auto& r : reports) out += fmt::format(" {:>10}", percent(mean_accuracy(r)));
  out += fmt::format("\n{:<20}", "K");
  for (const auto& r : reports) out += fmt::format(" {:>10}", r.K);
  out += fmt::format("\n{:<20}", "Overfit");
  for (const auto& r : reports) out += fmt::format(" {:>10}", overfit_cell(r.overfit));
  out += '\n';
  return out;
}

}  // namespace footprint
