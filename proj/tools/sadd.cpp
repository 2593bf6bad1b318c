#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "sadd/runs.hpp"

namespace {

void add_common(CLI::App* cmd, sadd::RunOptions& opt) {
  cmd->add_option("--config", opt.config_path, "config file (key = value with [sections])");
  cmd->add_option("--set", opt.overrides,
                  "override a config key, e.g. --set train.alpha=0.5")
      ->take_all();
  cmd->add_flag("--force", opt.force, "overwrite existing run outputs");
  cmd->add_option("--threads", opt.threads, "worker threads for scoring (1 = fully deterministic)")
      ->check(CLI::PositiveNumber);
}

std::vector<double> parse_alphas(const std::string& csv) {
  std::vector<double> out;
  std::string cur;
  std::istringstream is(csv);
  while (std::getline(is, cur, ',')) {
    if (cur.empty()) continue;
    try {
      out.push_back(std::stod(cur));
    } catch (const std::exception&) {
      throw sadd::ConfigError("bad --alphas entry '" + cur + "'");
    }
  }
  if (out.empty()) throw sadd::ConfigError("--alphas list is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sadd: statistics-aware audio-visual deepfake detector on synthetic data"};
  app.require_subcommand(1);

  sadd::RunOptions opt;
  std::uint64_t seed_flag = 0;
  double alpha_flag = 0;
  std::uint64_t epochs_flag = 0;
  std::string variant_flag;
  std::string ids_csv;
  std::string alphas_csv;
  std::string range_str;

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--out", opt.out_dir, "output dataset directory")->required();
  auto* gen_seed = generate->add_option("--seed", seed_flag, "dataset seed");
  add_common(generate, opt);

  auto* train = app.add_subcommand("train", "train a model on a generated dataset");
  train->add_option("--data", opt.data_dir, "dataset directory")->required();
  train->add_option("--out", opt.out_dir, "run output directory")->required();
  auto* train_seed = train->add_option("--seed", seed_flag, "training seed");
  auto* train_alpha = train->add_option("--alpha", alpha_flag, "statistics-loss weight");
  auto* train_variant =
      train->add_option("--variant", variant_flag, "loss variant: stats|kl|none")
          ->check(CLI::IsMember({"stats", "kl", "none"}));
  auto* train_epochs = train->add_option("--epochs", epochs_flag, "epoch count");
  add_common(train, opt);

  auto* eval = app.add_subcommand("eval", "score a dataset split and report AUC");
  eval->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint")->required();
  eval->add_option("--data", opt.data_dir, "dataset directory")->required();
  eval->add_option("--out", opt.out_dir, "output directory")->required();
  eval->add_option("--normalizer", opt.normalizer_path,
                   "normalizer file (default: next to the checkpoint)");
  eval->add_option("--split", opt.split, "dataset split (train|test)")
      ->check(CLI::IsMember({"train", "test"}));
  add_common(eval, opt);

  auto* hist = app.add_subcommand("hist", "export per-sample feature histograms");
  hist->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint")->required();
  hist->add_option("--data", opt.data_dir, "dataset directory")->required();
  hist->add_option("--out", opt.out_dir, "output directory")->required();
  hist->add_option("--split", opt.split, "dataset split (train|test)")
      ->check(CLI::IsMember({"train", "test"}));
  hist->add_option("--ids", ids_csv, "comma-separated video ids (default: 3 real + 3 fake)");
  hist->add_option("--bins", opt.hist_bins, "histogram bins")->check(CLI::PositiveNumber);
  hist->add_option("--range", range_str, "bin range as LO:HI (default -1:3)");
  add_common(hist, opt);

  auto* sweep = app.add_subcommand(
      "sweep-alpha", "train and evaluate across a grid of alpha values");
  sweep->add_option("--data", opt.data_dir, "dataset directory")->required();
  sweep->add_option("--out", opt.out_dir, "output directory")->required();
  sweep->add_option("--alphas", alphas_csv,
                    "comma-separated grid (default 0,0.01,0.05,0.1,0.5,1,5,10,50,100)");
  auto* sweep_variant =
      sweep->add_option("--variant", variant_flag, "loss variant: stats|kl|none")
          ->check(CLI::IsMember({"stats", "kl", "none"}));
  auto* sweep_epochs = sweep->add_option("--epochs", epochs_flag, "epoch count per run");
  auto* sweep_seed = sweep->add_option("--seed", seed_flag, "training seed");
  add_common(sweep, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_seed->count() || train_seed->count() || sweep_seed->count())
      opt.seed = seed_flag;
    if (train_alpha->count()) opt.alpha = alpha_flag;
    if (train_variant->count() || sweep_variant->count()) opt.variant = variant_flag;
    if (train_epochs->count() || sweep_epochs->count()) opt.epochs = epochs_flag;
    if (!ids_csv.empty()) {
      std::istringstream is(ids_csv);
      std::string id;
      while (std::getline(is, id, ','))
        if (!id.empty()) opt.hist_ids.push_back(id);
    }
    if (!range_str.empty()) {
      const auto colon = range_str.find(':');
      if (colon == std::string::npos)
        throw sadd::ConfigError("--range expects LO:HI, got '" + range_str + "'");
      opt.hist_lo = std::stod(range_str.substr(0, colon));
      opt.hist_hi = std::stod(range_str.substr(colon + 1));
    }
    if (!alphas_csv.empty()) opt.alphas = parse_alphas(alphas_csv);

    if (generate->parsed()) sadd::run_generate(opt, std::cout);
    else if (train->parsed()) sadd::run_train(opt, std::cout);
    else if (eval->parsed()) sadd::run_eval(opt, std::cout);
    else if (hist->parsed()) sadd::run_hist(opt, std::cout);
    else if (sweep->parsed()) sadd::run_sweep(opt, std::cout);
    return 0;
  } catch (const sadd::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return sadd::exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
