// Command-line front end: one subcommand per pipeline stage, plus `run` for a
// sequence of stages.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "footprint/pipeline.hpp"

using namespace footprint;

namespace {

std::vector<Eigen::Index> parse_sizes(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string tok = text.substr(start, end - start);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || v <= 0) {
      throw CLI::ValidationError("size list", "expected positive integers separated by commas, got '" + text + "'");
    }
    out.push_back(static_cast<Eigen::Index>(v));
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predict psycho-demographic traits from a users x likes matrix"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file (keys are long option names)");

  PipelineConfig cfg;
  std::string input_dir = cfg.input_data_dir.string();
  std::string out_dir = cfg.out_dir.string();
  std::uint64_t seed = 0;
  bool linear_only = false;
  std::string combine = "first";
  std::string hidden = "512";
  std::string sweep = "2,5,10,20,50,100";
  std::string dropout = "a";
  std::vector<double> split{cfg.nn.train.train_fraction, cfg.nn.train.validation_fraction, cfg.nn.train.test_fraction};
  std::size_t n_users = cfg.synth.n_users, n_likes = cfg.synth.n_likes;
  Eigen::Index n_factors = cfg.synth.n_factors;
  double base_rate = cfg.synth.like_base_rate, missing_rate = cfg.synth.missing_rate;
  double affinity_scale = cfg.synth.affinity_scale;

  app.add_option("--input-data-dir", input_dir, "Directory holding users.csv, likes.csv and users-likes.csv")
      ->envname("INPUT_DATA_DIR")
      ->capture_default_str();
  app.add_option("--out", out_dir, "Output directory for artifacts and reports")->capture_default_str();
  app.add_option("--seed", seed, "Master random seed")->capture_default_str();

  auto* g_synth = "Synthetic corpus";
  app.add_option("--n-users", n_users)->group(g_synth)->capture_default_str();
  app.add_option("--n-likes", n_likes)->group(g_synth)->capture_default_str();
  app.add_option("--n-factors", n_factors)->group(g_synth)->capture_default_str();
  app.add_option("--base-rate", base_rate, "Mean like probability")->group(g_synth)->capture_default_str();
  app.add_option("--affinity-scale", affinity_scale, "Strength of the factor signal in the like logits")
      ->group(g_synth)
      ->capture_default_str();
  app.add_option("--missing-rate", missing_rate, "Fraction of political values left blank")
      ->group(g_synth)
      ->capture_default_str();
  app.add_flag("--linear-only", linear_only, "Do not plant the nonlinear openness trait")->group(g_synth);

  auto* g_pre = "Trimming";
  app.add_option("-u", cfg.trim.min_users_per_like, "Minimum users per like")->group(g_pre)->capture_default_str();
  app.add_option("-l", cfg.trim.min_likes_per_user, "Minimum likes per user")->group(g_pre)->capture_default_str();

  auto* g_imp = "Imputation";
  app.add_option("--m", cfg.impute.m, "Number of imputations")->group(g_imp)->capture_default_str();
  app.add_option("--combine", combine, "Completed table fed downstream")
      ->check(CLI::IsMember({"first", "majority"}))
      ->group(g_imp)
      ->capture_default_str();

  auto* g_svd = "Dimensionality reduction and regression";
  app.add_option("--svd_dimensions", cfg.reduction.K, "Number of SVD dimensions")->group(g_svd)->capture_default_str();
  app.add_option("--apply_varimax", cfg.reduction.apply_varimax, "Rotate the SVD factors with varimax")
      ->group(g_svd)
      ->capture_default_str();
  app.add_option("--folds", cfg.cv.k, "Cross-validation folds")->group(g_svd)->capture_default_str();
  app.add_flag("--average-folds", cfg.cv.average_folds, "Average per-fold metrics instead of pooling")->group(g_svd);
  app.add_flag("--refit-per-fold", cfg.refit_per_fold, "Recompute SVD inside each training fold")->group(g_svd);
  app.add_option("--sweep-k", sweep, "K values for the analyze sweep")->group(g_svd)->capture_default_str();

  auto* g_nn = "Neural networks";
  app.add_option("--hidden", hidden, "Hidden layer sizes, e.g. 512,256")->group(g_nn)->capture_default_str();
  app.add_option("--svd_dims", cfg.nn.svd_dims, "SVD dimensions fed to the network")->group(g_nn)->capture_default_str();
  app.add_option("--lr", cfg.nn.train.gamma0, "Initial learning rate")->group(g_nn)->capture_default_str();
  app.add_option("--batch", cfg.nn.train.batch_size, "Minibatch size")->group(g_nn)->capture_default_str();
  app.add_option("--iters", cfg.nn.train.max_iterations, "Training iterations")->group(g_nn)->capture_default_str();
  app.add_option("--log-every", cfg.nn.train.log_every, "Trace interval in iterations")->group(g_nn)->capture_default_str();
  app.add_option("--split", split, "Train, validation and test fractions, e.g. 0.8,0.1,0.1")
      ->expected(3)
      ->delimiter(',')
      ->group(g_nn)
      ->capture_default_str();
  app.add_option("--dropout-scheme", dropout, "a: keep 0.5 after every hidden layer; b: indexed keep i/(2n)")
      ->check(CLI::IsMember({"a", "b"}))
      ->group(g_nn)
      ->capture_default_str();

  std::vector<Stage> stages;
  for (Stage s : kAllStages) {
    auto* sub = app.add_subcommand(std::string(name_of(s)), "Run the " + std::string(name_of(s)) + " stage");
    sub->fallthrough();
    sub->callback([&stages, s] { stages.push_back(s); });
  }
  std::vector<std::string> run_list;
  auto* run = app.add_subcommand("run", "Run several stages in order");
  run->fallthrough();
  run->add_option("stages", run_list, "Stage names")->required()->check(CLI::IsMember(std::vector<std::string>{
      "synth", "preprocess", "impute", "svd", "analyze", "regress", "train-nn", "report"}));
  run->callback([&] {
    for (const auto& n : run_list) stages.push_back(*stage_from_name(n));
  });

  try {
    app.parse(argc, argv);
    cfg.nn.hidden = parse_sizes(hidden);
    cfg.sweep_k = parse_sizes(sweep);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  cfg.input_data_dir = input_dir;
  cfg.out_dir = out_dir;
  cfg.synth = planted_config(n_users, n_likes, n_factors, !linear_only, seed);
  cfg.synth.like_base_rate = base_rate;
  cfg.synth.missing_rate = missing_rate;
  cfg.synth.affinity_scale = affinity_scale;
  cfg.combine = combine == "majority" ? CombineMode::majority : CombineMode::first;
  cfg.impute.seed = seed;
  cfg.reduction.seed = seed;
  cfg.cv.seed = seed;
  cfg.nn.train.seed = seed;
  cfg.nn.train.train_fraction = split[0];
  cfg.nn.train.validation_fraction = split[1];
  cfg.nn.train.test_fraction = split[2];
  cfg.nn.train.dropout = dropout == "b" ? DropoutScheme::indexed : DropoutScheme::every_layer;

  try {
    for (Stage s : stages) {
      run_stage(s, cfg);
      std::cerr << "footprint: " << name_of(s) << " done\n";
    }
  } catch (const Error& e) {
    std::cerr << "footprint: error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "footprint: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
