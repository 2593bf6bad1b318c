#include "sadd/runs.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "binio.hpp"
#include "sadd/checkpoint.hpp"
#include "sadd/metrics.hpp"
#include "sadd/trainer.hpp"

namespace sadd {

namespace fs = std::filesystem;

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConfigMap resolve_config(const RunOptions& opt) {
  ConfigMap cfg = default_config();
  if (!opt.config_path.empty()) {
    for (const auto& [k, v] : load_config_file(opt.config_path)) cfg[k] = v;
    validate_known_keys(cfg);
  }
  for (const auto& o : opt.overrides) apply_override(cfg, o);
  if (opt.alpha) cfg["train.alpha"] = fmt17(*opt.alpha);
  if (opt.variant) cfg["train.variant"] = *opt.variant;
  if (opt.epochs) cfg["train.epochs"] = std::to_string(*opt.epochs);
  if (opt.seed) {
    cfg["data.seed"] = std::to_string(*opt.seed);
    cfg["train.seed"] = std::to_string(*opt.seed);
  }
  return cfg;
}

void refuse_overwrite(const RunOptions& opt, const fs::path& marker) {
  if (!opt.force && fs::exists(marker))
    throw ConfigError("output '" + marker.string() +
                      "' already exists; pass --force to overwrite");
}

void write_text(const fs::path& path, const std::string& text) {
  detail::write_file(path, text);
}

struct MetaBuilder {
  explicit MetaBuilder(std::string command) : command_(std::move(command)) {}

  void artifact(const fs::path& path) {
    artifacts_.emplace_back(path.filename().string(), file_checksum(path));
  }

  void write(const fs::path& out_dir, const ConfigMap& cfg, const RunOptions& opt) {
    std::ostringstream os;
    os << "[run]\n";
    os << "command = " << command_ << "\n";
    os << "threads = " << opt.threads << "\n";
    if (!opt.data_dir.empty()) os << "data_dir = " << opt.data_dir.string() << "\n";
    if (!opt.checkpoint_path.empty())
      os << "checkpoint = " << opt.checkpoint_path.string() << "\n";
    os << "\n" << render_config(cfg);
    os << "\n[artifacts]\n";
    for (const auto& [name, sum] : artifacts_) os << name << " = " << sum << "\n";
    write_text(out_dir / "run.meta", os.str());
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
};

void check_window_matches_arch(const WindowConfig& win, const ArchConfig& arch,
                               const std::string& where) {
  if (win.audio_window != arch.audio_sample_len ||
      win.frames_per_window != arch.video_frames ||
      win.frame_channels != arch.frame_channels ||
      win.frame_height != arch.frame_height || win.frame_width != arch.frame_width)
    throw DataError("dataset windows in " + where +
                    " do not match the configured architecture shapes");
}

WindowConfig manifest_window(const fs::path& data_dir, const std::string& split) {
  // load_dataset re-derives windows from the manifest header; peek at one
  // video would be wasteful, so parse the header directly
  const fs::path manifest = data_dir / split / "manifest.tsv";
  std::ifstream is(manifest);
  if (!is) throw IoError("cannot open manifest: " + manifest.string());
  std::string line;
  std::getline(is, line);
  WindowConfig win;
  auto field = [&](const std::string& key) {
    const std::string needle = "\t" + key + "=";
    const auto at = line.find(needle);
    if (at == std::string::npos)
      throw DataError("manifest header missing '" + key + "' in " + manifest.string());
    return std::stoull(line.substr(at + needle.size()));
  };
  win.audio_window = field("audio_window");
  win.frames_per_window = field("frames_per_window");
  win.frame_channels = field("frame_channels");
  win.frame_height = field("frame_height");
  win.frame_width = field("frame_width");
  return win;
}

std::string scores_csv_text(const std::vector<ScoreRecord>& records) {
  // s is a fakeness score: 1 = most dissonant = most fake
  std::ostringstream os;
  os << "video_id,label,mu_d,s_fakeness\n";
  for (const auto& r : records)
    os << r.video_id << "," << label_value_str(r.label.value) << ","
       << fmt9(r.mu_d) << "," << fmt9(r.s) << "\n";
  return os.str();
}

std::string separation_csv_text(const SeparationReport& rep) {
  std::ostringstream os;
  os << "label,metric,q25,median,q75,count\n";
  auto row = [&](const char* label, const char* metric, const QuartileStats& q) {
    os << label << "," << metric << "," << fmt9(q.q25) << "," << fmt9(q.median)
       << "," << fmt9(q.q75) << "," << q.count << "\n";
  };
  row("REAL", "mean_gap", rep.real_gap);
  row("FAKE", "mean_gap", rep.fake_gap);
  row("REAL", "std_sum", rep.real_stdsum);
  row("FAKE", "std_sum", rep.fake_stdsum);
  return os.str();
}

struct EvalArtifacts {
  double auc_mu = 0;
  double auc_s = 0;
  SeparationReport separation;
};

EvalArtifacts eval_into(const fs::path& out_dir, const ModelParams<float>& params,
                        const std::vector<VideoRecord>& videos,
                        const ScoreNormalizer& norm, int threads) {
  const ModelParams<float> detached = params.detached();
  const auto records = score_videos(detached, videos, norm, threads);
  EvalArtifacts a;
  a.auc_mu = compute_auc(records, /*use_normalized=*/false);
  a.auc_s = compute_auc(records, /*use_normalized=*/true);
  a.separation = separation_report(detached, videos);
  write_text(out_dir / "scores.csv", scores_csv_text(records));
  write_text(out_dir / "separation.csv", separation_csv_text(a.separation));
  write_text(out_dir / "auc.txt", "auc_mu_d=" + fmt9(a.auc_mu) + "\nauc_s=" +
                                      fmt9(a.auc_s) + "\n");
  return a;
}

}  // namespace

std::string file_checksum(const fs::path& path) {
  const std::string bytes = detail::read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_normalizer(const fs::path& path, double min, double max) {
  write_text(path, "mu_d_min = " + fmt17(min) + "\nmu_d_max = " + fmt17(max) + "\n");
}

std::pair<double, double> load_normalizer(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open normalizer: " + path.string());
  double min = 0, max = 0;
  bool have_min = false, have_max = false;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, line.find(' '));
    const double v = std::stod(line.substr(eq + 1));
    if (key == "mu_d_min") { min = v; have_min = true; }
    if (key == "mu_d_max") { max = v; have_max = true; }
  }
  if (!have_min || !have_max)
    throw DataError("normalizer file missing mu_d_min/mu_d_max: " + path.string());
  return {min, max};
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config: return 1;
    case ErrorKind::Numeric: return 3;
    default: return 2;
  }
}

void run_generate(const RunOptions& opt, std::ostream& out) {
  const ConfigMap cfg = resolve_config(opt);
  const GenConfig gen = gen_from_map(cfg);
  const std::uint64_t seed = gen_seed_from_map(cfg);
  gen.validate();

  fs::create_directories(opt.out_dir);
  refuse_overwrite(opt, opt.out_dir / "train" / "manifest.tsv");

  auto [train_videos, test_videos] = generate_synthetic_dataset(gen, seed);
  save_dataset(opt.out_dir, "train", train_videos, gen.window);
  save_dataset(opt.out_dir, "test", test_videos, gen.window);

  MetaBuilder meta("generate");
  meta.artifact(opt.out_dir / "train" / "manifest.tsv");
  meta.artifact(opt.out_dir / "test" / "manifest.tsv");
  meta.write(opt.out_dir, cfg, opt);

  for (const auto& [split, videos] : {std::pair{"train", &train_videos},
                                      std::pair{"test", &test_videos}}) {
    const auto s = summarize(*videos);
    out << split << ": " << s.n_videos << " videos (" << s.n_real << " real, "
        << s.n_fake_audio << " audio-fake, " << s.n_fake_visual
        << " visual-fake, " << s.n_fake_both << " both), " << s.n_subsequences
        << " subsequences\n";
    if (s.n_real == s.n_videos)
      out << "warning: " << split << " split contains no fake videos\n";
    if (s.n_real == 0)
      out << "warning: " << split << " split contains no real videos\n";
  }
}

void run_train(const RunOptions& opt, std::ostream& out) {
  const ConfigMap cfg = resolve_config(opt);
  TrainConfig tc = train_from_map(cfg);
  tc.validate();

  fs::create_directories(opt.out_dir);
  refuse_overwrite(opt, opt.out_dir / "checkpoint.sadd");

  check_window_matches_arch(manifest_window(opt.data_dir, "train"), tc.arch,
                            (opt.data_dir / "train").string());
  const auto train_videos = load_dataset(opt.data_dir, "train");
  const auto samples = flatten_samples(train_videos);

  std::ofstream epochs_csv(opt.out_dir / "epochs.csv", std::ios::trunc);
  if (!epochs_csv)
    throw IoError("cannot write " + (opt.out_dir / "epochs.csv").string());
  const TrainResult result = train(samples, tc, &epochs_csv);
  epochs_csv.close();

  save_checkpoint(opt.out_dir / "checkpoint.sadd", result.best_params);

  // fit the score normalizer on the training videos with the best checkpoint
  const ModelParams<float> detached = result.best_params.detached();
  std::vector<double> train_mu;
  std::vector<bool> train_fake;
  for (const auto& v : train_videos) {
    train_mu.push_back(video_score(detached, v));
    train_fake.push_back(v.label.is_fake());
  }
  const ScoreNormalizer norm = fit_normalizer(train_mu);
  save_normalizer(opt.out_dir / "normalizer.txt", norm.min, norm.max);
  if (norm.degenerate())
    out << "warning: degenerate normalizer (all training scores equal)\n";

  MetaBuilder meta("train");
  meta.artifact(opt.out_dir / "checkpoint.sadd");
  meta.artifact(opt.out_dir / "epochs.csv");
  meta.artifact(opt.out_dir / "normalizer.txt");
  meta.write(opt.out_dir, cfg, opt);

  out << "trained " << tc.epochs << " epochs on " << samples.size()
      << " subsequences; best epoch " << result.best_epoch
      << " (mean total " << fmt9(result.logs[result.best_epoch - 1].total) << ")\n";
  out << "normalizer: mu_d_min=" << fmt9(norm.min) << " mu_d_max=" << fmt9(norm.max)
      << "\n";
}

void run_eval(const RunOptions& opt, std::ostream& out) {
  const ConfigMap cfg = resolve_config(opt);
  fs::create_directories(opt.out_dir);
  refuse_overwrite(opt, opt.out_dir / "scores.csv");

  const ModelParams<float> params = load_checkpoint(opt.checkpoint_path);
  const fs::path norm_path = opt.normalizer_path.empty()
                                 ? opt.checkpoint_path.parent_path() / "normalizer.txt"
                                 : opt.normalizer_path;
  const auto [nmin, nmax] = load_normalizer(norm_path);
  const ScoreNormalizer norm{nmin, nmax};

  check_window_matches_arch(manifest_window(opt.data_dir, opt.split), params.config,
                            (opt.data_dir / opt.split).string());
  const auto videos = load_dataset(opt.data_dir, opt.split);
  const EvalArtifacts a =
      eval_into(opt.out_dir, params, videos, norm, opt.threads);

  MetaBuilder meta("eval");
  meta.artifact(opt.out_dir / "scores.csv");
  meta.artifact(opt.out_dir / "separation.csv");
  meta.artifact(opt.out_dir / "auc.txt");
  meta.write(opt.out_dir, cfg, opt);

  out << opt.split << " AUC (raw mu_d ranking): " << fmt9(a.auc_mu) << "\n";
  out << opt.split << " AUC (normalized s):     " << fmt9(a.auc_s) << "\n";
}

void run_hist(const RunOptions& opt, std::ostream& out) {
  const ConfigMap cfg = resolve_config(opt);
  fs::create_directories(opt.out_dir);
  refuse_overwrite(opt, opt.out_dir / "histograms.csv");
  if (!(opt.hist_lo < opt.hist_hi) || opt.hist_bins < 1)
    throw ConfigError("hist: need bins >= 1 and lo < hi");

  const ModelParams<float> params = load_checkpoint(opt.checkpoint_path).detached();
  check_window_matches_arch(manifest_window(opt.data_dir, opt.split), params.config,
                            (opt.data_dir / opt.split).string());
  const auto videos = load_dataset(opt.data_dir, opt.split);

  // requested ids, or the first 3 real + 3 fake in video_id order
  std::vector<const VideoRecord*> selected;
  if (!opt.hist_ids.empty()) {
    for (const auto& id : opt.hist_ids) {
      const auto it = std::find_if(videos.begin(), videos.end(),
                                   [&](const auto& v) { return v.video_id == id; });
      if (it == videos.end())
        throw DataError("unknown sample id '" + id + "' in split " + opt.split);
      selected.push_back(&*it);
    }
  } else {
    std::vector<const VideoRecord*> ordered;
    for (const auto& v : videos) ordered.push_back(&v);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->video_id < b->video_id; });
    std::size_t real = 0, fake = 0;
    for (const auto* v : ordered) {
      if (!v->label.is_fake() && real < 3) { selected.push_back(v); ++real; }
      if (v->label.is_fake() && fake < 3) { selected.push_back(v); ++fake; }
    }
    if (real < 3 || fake < 3)
      throw DataError("split " + opt.split +
                      " has fewer than 3 real + 3 fake videos; pass --ids");
  }

  std::ostringstream csv;
  csv << "sample_id,label,modality,bin_lo,bin_hi,count\n";
  const double width = (opt.hist_hi - opt.hist_lo) / double(opt.hist_bins);
  for (const auto* v : selected) {
    const auto h = feature_histogram(params, v->subsequences.front(),
                                     opt.hist_bins, opt.hist_lo, opt.hist_hi);
    for (const auto& [modality, counts] :
         {std::pair{"audio", &h.audio_counts}, std::pair{"visual", &h.visual_counts}}) {
      for (std::size_t b = 0; b < counts->size(); ++b)
        csv << h.sample_id << "," << label_value_str(h.label.value) << ","
            << modality << "," << fmt9(opt.hist_lo + width * double(b)) << ","
            << fmt9(opt.hist_lo + width * double(b + 1)) << "," << (*counts)[b]
            << "\n";
    }
  }
  write_text(opt.out_dir / "histograms.csv", csv.str());

  MetaBuilder meta("hist");
  meta.artifact(opt.out_dir / "histograms.csv");
  meta.write(opt.out_dir, cfg, opt);
  out << "wrote " << selected.size() * 2 << " histogram series ("
      << selected.size() << " samples x 2 modalities)\n";
}

void run_sweep(const RunOptions& opt, std::ostream& out) {
  const ConfigMap cfg = resolve_config(opt);
  fs::create_directories(opt.out_dir);
  refuse_overwrite(opt, opt.out_dir / "sweep_summary.csv");

  std::vector<double> alphas = opt.alphas;
  if (alphas.empty())
    alphas = {0, 0.01, 0.05, 0.1, 0.5, 1, 5, 10, 50, 100};

  std::ostringstream summary;
  summary << "alpha,auc_mu_d,auc_s,best_epoch,"
             "gap_median_real,gap_median_fake,stdsum_median_real,stdsum_median_fake\n";

  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double alpha = alphas[i];
    char tag[64];
    std::snprintf(tag, sizeof tag, "alpha_%02zu_%g", i, alpha);
    const fs::path sub = opt.out_dir / tag;

    RunOptions train_opt = opt;
    train_opt.out_dir = sub;
    train_opt.alpha = alpha;
    run_train(train_opt, out);

    RunOptions eval_opt = opt;
    eval_opt.out_dir = sub / "eval";
    eval_opt.checkpoint_path = sub / "checkpoint.sadd";
    eval_opt.normalizer_path = sub / "normalizer.txt";
    eval_opt.split = "test";
    run_eval(eval_opt, out);

    // pull the numbers back out of the eval artifacts
    std::ifstream auc_in(sub / "eval" / "auc.txt");
    std::string line;
    double auc_mu = 0, auc_s = 0;
    while (std::getline(auc_in, line)) {
      if (line.rfind("auc_mu_d=", 0) == 0) auc_mu = std::stod(line.substr(9));
      if (line.rfind("auc_s=", 0) == 0) auc_s = std::stod(line.substr(6));
    }
    std::ifstream sep_in(sub / "eval" / "separation.csv");
    double gap_real = 0, gap_fake = 0, std_real = 0, std_fake = 0;
    std::getline(sep_in, line);  // header
    while (std::getline(sep_in, line)) {
      std::istringstream ls(line);
      std::string label, metric, q25, median;
      std::getline(ls, label, ',');
      std::getline(ls, metric, ',');
      std::getline(ls, q25, ',');
      std::getline(ls, median, ',');
      const double med = std::stod(median);
      if (metric == "mean_gap") (label == "REAL" ? gap_real : gap_fake) = med;
      if (metric == "std_sum") (label == "REAL" ? std_real : std_fake) = med;
    }
    // replay the epoch log to recover the best epoch
    std::size_t best_epoch = 0;
    {
      std::ifstream epochs_in(sub / "epochs.csv");
      std::string row;
      std::getline(epochs_in, row);  // header
      double best = std::numeric_limits<double>::infinity();
      std::size_t epoch_index = 0;
      while (std::getline(epochs_in, row)) {
        ++epoch_index;
        const auto last_comma = row.rfind(',');
        const auto prev_comma = row.rfind(',', last_comma - 1);
        const double total =
            std::stod(row.substr(prev_comma + 1, last_comma - prev_comma - 1));
        if (total < best) {
          best = total;
          best_epoch = epoch_index;
        }
      }
    }

    char rowbuf[256];
    std::snprintf(rowbuf, sizeof rowbuf, "%g,%s,%s,%zu,%s,%s,%s,%s\n", alpha,
                  fmt9(auc_mu).c_str(), fmt9(auc_s).c_str(), best_epoch,
                  fmt9(gap_real).c_str(), fmt9(gap_fake).c_str(),
                  fmt9(std_real).c_str(), fmt9(std_fake).c_str());
    summary << rowbuf;
  }

  write_text(opt.out_dir / "sweep_summary.csv", summary.str());
  MetaBuilder meta("sweep-alpha");
  meta.artifact(opt.out_dir / "sweep_summary.csv");
  meta.write(opt.out_dir, cfg, opt);
  out << "sweep complete: " << alphas.size() << " alpha values -> "
      << (opt.out_dir / "sweep_summary.csv").string() << "\n";
}

}  // namespace sadd
