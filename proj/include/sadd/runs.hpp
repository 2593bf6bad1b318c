#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sadd/config.hpp"

namespace sadd {

// Command plumbing shared by the CLI and the test suites. Every run resolves
// its configuration (defaults -> config file -> --set overrides -> direct
// flags), writes its artifacts, then drops a run.meta file holding the full
// resolved config and FNV-1a checksums of everything written. A run.meta file
// parses as a config file, so rerunning with it reproduces the run.

struct RunOptions {
  std::string config_path;              // optional config file
  std::vector<std::string> overrides;   // dotted section.key=value
  std::filesystem::path out_dir;
  std::filesystem::path data_dir;       // dataset root (train/eval/hist/sweep)
  std::filesystem::path checkpoint_path;
  std::filesystem::path normalizer_path;  // defaults to <checkpoint dir>/normalizer.txt
  std::string split = "test";
  std::vector<std::string> hist_ids;    // empty: 3 real + 3 fake defaults
  std::size_t hist_bins = 40;
  double hist_lo = -1.0;
  double hist_hi = 3.0;
  std::vector<double> alphas;           // sweep grid; empty: the full default grid
  bool force = false;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> epochs;
};

void run_generate(const RunOptions& opt, std::ostream& out);
void run_train(const RunOptions& opt, std::ostream& out);
void run_eval(const RunOptions& opt, std::ostream& out);
void run_hist(const RunOptions& opt, std::ostream& out);
void run_sweep(const RunOptions& opt, std::ostream& out);

// FNV-1a 64-bit of a file's bytes, lowercase hex.
std::string file_checksum(const std::filesystem::path& path);

// Normalizer sidecar (two key = value lines, full double precision).
void save_normalizer(const std::filesystem::path& path, double min, double max);
std::pair<double, double> load_normalizer(const std::filesystem::path& path);

int exit_code_for(const Error& e);

}  // namespace sadd
