#include "footprint/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "footprint/csv.hpp"
#include "footprint/dimred.hpp"
#include "footprint/io.hpp"
#include "footprint/report.hpp"

namespace footprint {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {"synth",   "preprocess", "impute",   "svd",
                                                          "analyze", "regress",    "train-nn", "report"};

std::string join_sizes(const std::vector<Eigen::Index>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return out;
}

std::string dropout_name(DropoutScheme s) { return s == DropoutScheme::every_layer ? "a" : "b"; }

fs::path out_path(const PipelineConfig& cfg, std::string_view name) { return cfg.out_dir / std::string(name); }
fs::path in_path(const PipelineConfig& cfg, std::string_view name) { return cfg.input_data_dir / std::string(name); }

// Throws a prerequisite error naming the artifact and the command that makes it.
void require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    fail(ErrorKind::prerequisite,
         fmt::format("missing artifact {}; run `footprint {}` first", path.string(), producer));
  }
}

std::string nn_file(const PipelineConfig& cfg, std::string_view suffix) {
  return fmt::format("nn_{}_{}", network_label(cfg.nn), suffix);
}

struct StageOutput {
  std::vector<std::string> artifacts;
};

StageOutput run_synth(const PipelineConfig& cfg) {
  const SynthCorpus corpus = generate(cfg.synth);
  write_corpus(corpus, cfg.input_data_dir);
  return {{std::string(artifact::users), std::string(artifact::likes), std::string(artifact::pairs), "truth_factors.csv"}};
}

StageOutput run_preprocess(const PipelineConfig& cfg) {
  for (auto name : {artifact::users, artifact::likes, artifact::pairs}) require(in_path(cfg, name), "synth");
  const TraitTable users = parse_users(in_path(cfg, artifact::users));
  const LikeCatalog likes = parse_likes(in_path(cfg, artifact::likes));
  const auto pairs = parse_pairs(in_path(cfg, artifact::pairs));
  const UserLikeMatrix raw = build_matrix(pairs, users, likes);
  const UserLikeMatrix trimmed = trim(raw, cfg.trim);
  const MatrixStats before = stats(raw), after = stats(trimmed);
  save_matrix(trimmed, out_path(cfg, artifact::matrix));
  io::atomic_write(out_path(cfg, artifact::stats_csv), stats_csv(before, after));
  io::atomic_write(out_path(cfg, artifact::stats_txt), stats_text(before, after, cfg.trim));
  return {{std::string(artifact::matrix), std::string(artifact::stats_csv), std::string(artifact::stats_txt)}};
}

StageOutput run_impute(const PipelineConfig& cfg) {
  require(out_path(cfg, artifact::matrix), "preprocess");
  require(in_path(cfg, artifact::users), "synth");
  const UserLikeMatrix matrix = load_matrix(out_path(cfg, artifact::matrix));
  TraitTable traits = parse_users(in_path(cfg, artifact::users)).select(matrix.row_ids());
  for (Trait t : kAllTraits) {
    if (!is_binary(t) && !traits.complete(t)) {
      fail(ErrorKind::validation, fmt::format("continuous trait {} has {} missing values; only binary traits are imputed",
                                              name_of(t), traits.missing_count(t)));
    }
  }
  StageOutput out;
  for (Trait t : kAllTraits) {
    if (!is_binary(t) || traits.complete(t)) continue;
    const auto completed = impute_binary(traits, t, cfg.impute);
    const auto pooled = pooled_analysis(completed, t, traits);
    const auto name = fmt::format("imputation_pooled_{}.csv", name_of(t));
    io::atomic_write(out_path(cfg, name), pooled_csv(pooled));
    out.artifacts.push_back(name);
    traits = combine_imputations(completed, cfg.combine);
  }
  write_users(traits, out_path(cfg, artifact::traits));
  out.artifacts.insert(out.artifacts.begin(), std::string(artifact::traits));
  return out;
}

StageOutput run_svd(const PipelineConfig& cfg) {
  require(out_path(cfg, artifact::matrix), "preprocess");
  const UserLikeMatrix matrix = load_matrix(out_path(cfg, artifact::matrix));
  const SvdFactors f = truncated_svd(matrix, cfg.reduction.K, cfg.reduction.seed);
  Eigen::MatrixXd scores, loadings;
  double criterion = varimax_criterion(f.V);
  if (cfg.reduction.apply_varimax) {
    const RotatedScores rs = rotate_factors(f, cfg.reduction.varimax);
    scores = rs.scores;
    loadings = rs.loadings;
    criterion = rs.criterion_trace.back();
  } else {
    scores = project_users(f);
    loadings = f.V;
  }
  save_scores({matrix.row_ids(), scores}, out_path(cfg, artifact::scores));

  std::string text = "likeid";
  for (Eigen::Index k = 0; k < loadings.cols(); ++k) text += fmt::format(",dim{}", k + 1);
  text += '\n';
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    text += csv::escape(matrix.col_ids()[j]);
    for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
      text += ',' + io::format_double(loadings(static_cast<Eigen::Index>(j), k));
    }
    text += '\n';
  }
  io::atomic_write(out_path(cfg, artifact::loadings), text);

  std::string meta = "key,value\n";
  meta += fmt::format("K,{}\nvarimax,{}\nseed,{}\nvarimax_criterion,{}\n", cfg.reduction.K,
                      cfg.reduction.apply_varimax ? 1 : 0, cfg.reduction.seed, io::format_double(criterion));
  for (Eigen::Index k = 0; k < f.S.size(); ++k) meta += fmt::format("sigma{},{}\n", k + 1, io::format_double(f.S(k)));
  io::atomic_write(out_path(cfg, artifact::svd_meta), meta);
  return {{std::string(artifact::scores), std::string(artifact::loadings), std::string(artifact::svd_meta)}};
}

// Scores realigned to the rows of `traits`.
Eigen::MatrixXd aligned_scores(const ScoreTable& table, const TraitTable& traits) {
  if (table.user_ids.size() != traits.size()) {
    fail(ErrorKind::referential, fmt::format("score table has {} users but the trait table has {}", table.user_ids.size(),
                                             traits.size()));
  }
  Eigen::MatrixXd out(table.scores.rows(), table.scores.cols());
  for (std::size_t i = 0; i < table.user_ids.size(); ++i) {
    const auto row = traits.find(table.user_ids[i]);
    if (!row) fail(ErrorKind::referential, fmt::format("user {} has scores but no traits", table.user_ids[i]));
    out.row(static_cast<Eigen::Index>(*row)) = table.scores.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

StageOutput run_analyze(const PipelineConfig& cfg) {
  require(out_path(cfg, artifact::matrix), "preprocess");
  require(out_path(cfg, artifact::traits), "impute");
  require(out_path(cfg, artifact::scores), "svd");
  const UserLikeMatrix matrix = load_matrix(out_path(cfg, artifact::matrix));
  const TraitTable traits = parse_users(out_path(cfg, artifact::traits)).select(matrix.row_ids());

  const auto max_k = static_cast<Eigen::Index>(std::min(matrix.rows(), matrix.cols()));
  std::vector<Eigen::Index> ks;
  for (auto k : cfg.sweep_k)
    if (k >= 1 && k <= max_k) ks.push_back(k);
  if (ks.empty()) fail(ErrorKind::parameter, fmt::format("no sweep value of K fits a {}x{} matrix", matrix.rows(), matrix.cols()));
  const SweepTable sweep = k_sweep(matrix, traits, ks, cfg.reduction, cfg.cv);
  std::string text = "trait,metric";
  for (auto k : sweep.k_values) text += fmt::format(",K{}", k);
  text += '\n';
  for (Trait t : kAllTraits) {
    text += fmt::format("{},{}", name_of(t), name_of(metric_for(t)));
    for (Eigen::Index c = 0; c < sweep.accuracy.cols(); ++c) text += ',' + io::format_double(sweep.accuracy(index_of(t), c));
    text += '\n';
  }
  io::atomic_write(out_path(cfg, artifact::sweep), text);

  const ScoreTable table = load_scores(out_path(cfg, artifact::scores));
  const CorrelationTable corr = trait_correlations(aligned_scores(table, traits), traits);
  std::string ctext = "dim";
  for (Trait t : kAllTraits) ctext += fmt::format(",{}", name_of(t));
  ctext += '\n';
  for (Eigen::Index k = 0; k < corr.r.rows(); ++k) {
    ctext += fmt::format("dim{}", k + 1);
    for (Eigen::Index c = 0; c < corr.r.cols(); ++c) ctext += ',' + io::format_double(corr.r(k, c));
    ctext += '\n';
  }
  io::atomic_write(out_path(cfg, artifact::correlations), ctext);
  return {{std::string(artifact::sweep), std::string(artifact::correlations)}};
}

StageOutput run_regress(const PipelineConfig& cfg) {
  require(out_path(cfg, artifact::traits), "impute");
  EvalReport report;
  report.model = "regression";
  report.K = cfg.reduction.K;
  report.hyper = fmt::format("varimax={};folds={};seed={};refit={}", cfg.reduction.apply_varimax ? 1 : 0, cfg.cv.k,
                             cfg.cv.seed, cfg.refit_per_fold ? 1 : 0);
  if (cfg.refit_per_fold) {
    require(out_path(cfg, artifact::matrix), "preprocess");
    const UserLikeMatrix matrix = load_matrix(out_path(cfg, artifact::matrix));
    const TraitTable traits = parse_users(out_path(cfg, artifact::traits)).select(matrix.row_ids());
    for (Trait t : kAllTraits) report.scores.push_back(cross_validate_refit(matrix, traits, t, cfg.reduction, cfg.cv).score);
  } else {
    require(out_path(cfg, artifact::scores), "svd");
    const ScoreTable table = load_scores(out_path(cfg, artifact::scores));
    const TraitTable traits = parse_users(out_path(cfg, artifact::traits)).select(table.user_ids);
    report.K = table.scores.cols();
    for (Trait t : kAllTraits) report.scores.push_back(cross_validate(table.scores, traits, t, cfg.cv).score);
  }
  emit_report(report, ReportFormat::text, out_path(cfg, artifact::regr_txt));
  emit_report(report, ReportFormat::csv, out_path(cfg, artifact::regr_csv));
  return {{std::string(artifact::regr_txt), std::string(artifact::regr_csv)}};
}

StageOutput run_train_nn(const PipelineConfig& cfg) {
  require(out_path(cfg, artifact::matrix), "preprocess");
  require(out_path(cfg, artifact::traits), "impute");
  const UserLikeMatrix matrix = load_matrix(out_path(cfg, artifact::matrix));
  const TraitTable traits = parse_users(out_path(cfg, artifact::traits)).select(matrix.row_ids());
  ReductionConfig rc = cfg.reduction;
  rc.K = cfg.nn.svd_dims;
  const TrainingData data = make_training_data(reduce(matrix, rc), traits);

  std::vector<Eigen::Index> sizes{cfg.nn.svd_dims};
  sizes.insert(sizes.end(), cfg.nn.hidden.begin(), cfg.nn.hidden.end());
  sizes.push_back(kNumTraits);

  const auto trace_name = nn_file(cfg, "trace.csv");
  TrainResult result;
  try {
    result = train(data, cfg.nn.train, sizes);
  } catch (const DivergenceError& e) {
    io::atomic_write(out_path(cfg, trace_name), trace_csv(e.trace()));
    throw;
  }
  io::atomic_write(out_path(cfg, trace_name), trace_csv(result.trace));
  save_model(result, out_path(cfg, nn_file(cfg, "model.txt")));

  EvalReport report;
  report.model = network_label(cfg.nn);
  report.K = cfg.nn.svd_dims;
  const auto& t = cfg.nn.train;
  report.hyper = fmt::format("hidden={};lr={};batch={};iters={};dropout={};seed={}", join_sizes(cfg.nn.hidden, '-'),
                             io::format_double(t.gamma0), t.batch_size, t.max_iterations, dropout_name(t.dropout), t.seed);
  report.scores = evaluate_nn(result, data, result.split.test);
  report.overfit = result.overfit;
  emit_report(report, ReportFormat::csv, out_path(cfg, nn_file(cfg, "eval.csv")));
  emit_report(report, ReportFormat::text, out_path(cfg, nn_file(cfg, "eval.txt")));
  return {{trace_name, nn_file(cfg, "model.txt"), nn_file(cfg, "eval.csv"), nn_file(cfg, "eval.txt")}};
}

StageOutput run_report(const PipelineConfig& cfg) {
  std::vector<EvalReport> reports;
  StageOutput out;
  if (fs::exists(out_path(cfg, artifact::regr_csv))) reports.push_back(parse_report_csv(out_path(cfg, artifact::regr_csv)));
  for (const char* label : {"snn", "dnn2", "dnn3"}) {
    const auto p = out_path(cfg, fmt::format("nn_{}_eval.csv", label));
    if (fs::exists(p)) reports.push_back(parse_report_csv(p));
  }
  if (reports.empty()) {
    fail(ErrorKind::prerequisite, fmt::format("no evaluation results in {}; run `footprint regress` or `footprint train-nn` first",
                                              cfg.out_dir.string()));
  }
  io::atomic_write(out_path(cfg, artifact::summary_csv), summary_csv(reports));
  io::atomic_write(out_path(cfg, artifact::summary_txt), summary_text(reports));
  return {{std::string(artifact::summary_csv), std::string(artifact::summary_txt)}};
}

// One row per (stage, artifact list), so networks with different labels keep
// separate rows.
void record_manifest(const PipelineConfig& cfg, Stage stage, const StageOutput& out) {
  const fs::path path = out_path(cfg, artifact::manifest);
  std::map<std::pair<std::size_t, std::string>, std::string> rows;
  auto artifacts_of = [](const std::string& line) {
    const auto second = line.find(',', line.find(',') + 1);
    return second == std::string::npos ? std::string() : line.substr(second + 1);
  };
  if (fs::exists(path)) {
    std::istringstream in(io::read_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (const auto s = stage_from_name(line.substr(0, line.find(',')))) {
        rows[{static_cast<std::size_t>(*s), artifacts_of(line)}] = line;
      }
    }
  }
  std::string files;
  for (std::size_t i = 0; i < out.artifacts.size(); ++i) files += (i ? ";" : "") + out.artifacts[i];
  const std::string line = fmt::format("{},{:016x},{}", name_of(stage), fnv1a(canonical_config(stage, cfg)), csv::escape(files));
  rows[{static_cast<std::size_t>(stage), artifacts_of(line)}] = line;
  std::string text = "stage,config_hash,artifacts\n";
  for (const auto& [_, row] : rows) text += row + '\n';
  io::atomic_write(path, text);
}

std::string synth_config(const SynthConfig& s) {
  std::string out = fmt::format("synth.n_users={};synth.n_likes={};synth.n_factors={};synth.base_rate={};synth.scale={};"
                                "synth.missing={};synth.nonlinear={};synth.seed={};",
                                s.n_users, s.n_likes, s.n_factors, io::format_double(s.like_base_rate),
                                io::format_double(s.affinity_scale), io::format_double(s.missing_rate),
                                s.nonlinear_trait ? name_of(*s.nonlinear_trait) : "none", s.seed);
  for (Trait t : kAllTraits) {
    out += fmt::format("synth.{}=", name_of(t));
    for (Eigen::Index k = 0; k < s.signal[index_of(t)].size(); ++k) out += io::format_double(s.signal[index_of(t)](k)) + ' ';
    out += fmt::format("/{};", io::format_double(s.noise_sd[index_of(t)]));
  }
  return out;
}

}  // namespace

std::string_view name_of(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> stage_from_name(std::string_view name) {
  for (Stage s : kAllStages)
    if (name_of(s) == name) return s;
  return std::nullopt;
}

std::string network_label(const NetworkConfig& nn) {
  return nn.hidden.size() == 1 ? std::string("snn") : fmt::format("dnn{}", nn.hidden.size());
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_config(Stage stage, const PipelineConfig& cfg) {
  const std::string trim = fmt::format("trim.u={};trim.l={};", cfg.trim.min_users_per_like, cfg.trim.min_likes_per_user);
  const std::string impute = trim + fmt::format("impute.m={};impute.seed={};impute.combine={};", cfg.impute.m,
                                                cfg.impute.seed, cfg.combine == CombineMode::first ? "first" : "majority");
  const auto& r = cfg.reduction;
  const std::string reduction = fmt::format("svd.K={};svd.varimax={};svd.seed={};varimax.sweeps={};varimax.tol={};",
                                            r.K, r.apply_varimax ? 1 : 0, r.seed, r.varimax.max_sweeps,
                                            io::format_double(r.varimax.tol));
  const std::string cv = fmt::format("cv.k={};cv.seed={};cv.stratify={};cv.average={};cv.refit={};", cfg.cv.k, cfg.cv.seed,
                                     cfg.cv.stratify_binary ? 1 : 0, cfg.cv.average_folds ? 1 : 0,
                                     cfg.refit_per_fold ? 1 : 0);
  const auto& t = cfg.nn.train;
  const std::string nn = fmt::format(
      "nn.hidden={};nn.K={};nn.lr={};nn.decay={}/{};nn.batch={};nn.iters={};nn.log={};nn.dropout={};nn.seed={};"
      "nn.split={}/{}/{};",
      join_sizes(cfg.nn.hidden), cfg.nn.svd_dims, io::format_double(t.gamma0), t.decay_steps,
      io::format_double(t.decay_rate), t.batch_size, t.max_iterations, t.log_every, dropout_name(t.dropout), t.seed,
      io::format_double(t.train_fraction), io::format_double(t.validation_fraction), io::format_double(t.test_fraction));
  std::string out = fmt::format("stage={};", name_of(stage));
  switch (stage) {
    case Stage::synth: return out + synth_config(cfg.synth);
    case Stage::preprocess: return out + trim;
    case Stage::impute: return out + impute;
    case Stage::svd: return out + trim + reduction;
    case Stage::analyze: {
      return out + impute + reduction + cv + "sweep=" + join_sizes(cfg.sweep_k) + ';';
    }
    case Stage::regress: return out + impute + reduction + cv;
    case Stage::train_nn: return out + impute + reduction + nn;
    case Stage::report: return out + impute + reduction + cv + nn;
  }
  return out;
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / std::string(artifact::lock)) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      fail(ErrorKind::io, fmt::format("{} is locked by another stage (remove {} if no stage is running)", dir.string(),
                                      path_.string()));
    }
    fail(ErrorKind::io, fmt::format("cannot create lock {}: {}", path_.string(), std::strerror(errno)));
  }
  const auto pid = std::to_string(::getpid()) + '\n';
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void run_stage(Stage stage, const PipelineConfig& cfg) {
  OutputLock lock(cfg.out_dir);
  StageOutput out;
  switch (stage) {
    case Stage::synth: out = run_synth(cfg); break;
    case Stage::preprocess: out = run_preprocess(cfg); break;
    case Stage::impute: out = run_impute(cfg); break;
    case Stage::svd: out = run_svd(cfg); break;
    case Stage::analyze: out = run_analyze(cfg); break;
    case Stage::regress: out = run_regress(cfg); break;
    case Stage::train_nn: out = run_train_nn(cfg); break;
    case Stage::report: out = run_report(cfg); break;
  }
  record_manifest(cfg, stage, out);
}

void run_pipeline(const PipelineConfig& cfg, std::span<const Stage> stages) {
  for (Stage s : stages) run_stage(s, cfg);
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::parameter:
    case ErrorKind::prerequisite: return 1;
    case ErrorKind::numeric: return 3;
    default: return 2;
  }
}

}  // namespace footprint
