#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "footprint/error.hpp"
#include "footprint/impute.hpp"
#include "footprint/neural.hpp"
#include "footprint/preprocess.hpp"
#include "footprint/regression.hpp"
#include "footprint/synth.hpp"

namespace footprint {

enum class Stage { synth, preprocess, impute, svd, analyze, regress, train_nn, report };

inline constexpr std::array<Stage, 8> kAllStages = {Stage::synth,   Stage::preprocess, Stage::impute,
                                                   Stage::svd,     Stage::analyze,    Stage::regress,
                                                   Stage::train_nn, Stage::report};

std::string_view name_of(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

struct NetworkConfig {
  std::vector<Eigen::Index> hidden{512};
  Eigen::Index svd_dims = 50;
  TrainConfig train;
};

// "snn" for one hidden layer, "dnn<L>" otherwise.
std::string network_label(const NetworkConfig& nn);

struct PipelineConfig {
  std::filesystem::path input_data_dir = "data";
  std::filesystem::path out_dir = "out";
  SynthConfig synth = planted_config(4000, 1200, 12, true, 0);
  TrimConfig trim;
  ImputeConfig impute;
  CombineMode combine = CombineMode::first;
  ReductionConfig reduction;
  CvConfig cv;
  bool refit_per_fold = false;  // recompute SVD inside every training fold
  std::vector<Eigen::Index> sweep_k{2, 5, 10, 20, 50, 100};
  NetworkConfig nn;
};

// Artifact file names, relative to the output directory unless noted.
namespace artifact {
inline constexpr std::string_view users = "users.csv";  // in the input data directory
inline constexpr std::string_view likes = "likes.csv";
inline constexpr std::string_view pairs = "users-likes.csv";
inline constexpr std::string_view matrix = "matrix_trimmed.txt";
inline constexpr std::string_view stats_csv = "matrix_stats.csv";
inline constexpr std::string_view stats_txt = "matrix_stats.txt";
inline constexpr std::string_view traits = "traits_imputed.csv";
inline constexpr std::string_view scores = "svd_scores.csv";
inline constexpr std::string_view loadings = "svd_loadings.csv";
inline constexpr std::string_view svd_meta = "svd_meta.csv";
inline constexpr std::string_view sweep = "analysis_k_sweep.csv";
inline constexpr std::string_view correlations = "analysis_correlations.csv";
inline constexpr std::string_view regr_txt = "pred_accuracy_regr.txt";
inline constexpr std::string_view regr_csv = "pred_accuracy_regr.csv";
inline constexpr std::string_view summary_csv = "summary_report.csv";
inline constexpr std::string_view summary_txt = "summary_report.txt";
inline constexpr std::string_view manifest = "run_manifest.csv";
inline constexpr std::string_view lock = ".footprint.lock";
}  // namespace artifact

// Canonical "key=value" description of everything a stage's output depends on.
std::string canonical_config(Stage stage, const PipelineConfig& cfg);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

// Exclusive per-directory lock held for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Runs one stage under the output-directory lock and records it in the manifest.
void run_stage(Stage stage, const PipelineConfig& cfg);

// Runs the stages in the given order, stopping at the first error.
void run_pipeline(const PipelineConfig& cfg, std::span<const Stage> stages);

// 1 usage/parameter, 2 data, 3 numeric.
int exit_code(const Error& e);

}  // namespace footprint
