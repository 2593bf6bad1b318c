// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "sadd/checkpoint.hpp"
#include "sadd/grad_check.hpp"
#include "sadd/metrics.hpp"
#include "sadd/runs.hpp"
#include "sadd/tensor_io.hpp"
#include "sadd/trainer.hpp"

using namespace sadd;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s %s\n", ok ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void criterion(int id, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    report(id, name, ok, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename S>
Tensor<S> random_tensor(Shape shape, Xoshiro256& rng, double lo = -1.0,
                        double hi = 1.0) {
  return sadd::testing::random_tensor<S>(std::move(shape), rng, lo, hi);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

// --------------------------------------------------------------------------
// 1. Gradient fidelity, 64-bit verification mode.

std::pair<bool, std::string> gradient_fidelity() {
  const double t0 = now_seconds();
  const double h = 1e-6;
  double worst = 0;
  auto track = [&](double err) { worst = std::max(worst, err); };

  Xoshiro256 rng(424242);
  {  // primitive by primitive, at points away from nonsmooth loci
    auto x = random_tensor<double>({10, 2}, rng);
    auto k = random_tensor<double>({3, 2, 3}, rng);
    track(grad_check([&](const Tensor<double>& p) { return sum(mul(conv1d(p, k, 2), conv1d(p, k, 2))); }, x, h));
    track(grad_check([&](const Tensor<double>& p) { return sum(mul(conv1d(x, p, 2), conv1d(x, p, 2))); }, k, h));

    auto x3 = random_tensor<double>({4, 2, 6, 6}, rng);
    auto k3 = random_tensor<double>({3, 2, 2, 3, 3}, rng);
    track(grad_check([&](const Tensor<double>& p) { auto y = conv3d(p, k3, {1, 2, 2}); return sum(mul(y, y)); }, x3, h));
    track(grad_check([&](const Tensor<double>& p) { auto y = conv3d(x3, p, {2, 1, 2}); return sum(mul(y, y)); }, k3, h));

    auto xm = random_tensor<double>({8, 3}, rng);  // continuous draws: no ties
    track(grad_check([](const Tensor<double>& p) { auto y = maxpool(p, {2, 1}, {2, 1}); return sum(mul(y, y)); }, xm, h));

    auto xv = random_tensor<double>({6}, rng);
    auto w = random_tensor<double>({4, 6}, rng);
    auto b = random_tensor<double>({4}, rng);
    track(grad_check([&](const Tensor<double>& p) { auto y = dense(p, w, b); return sum(mul(y, y)); }, xv, h));
    track(grad_check([&](const Tensor<double>& p) { auto y = dense(xv, p, b); return sum(mul(y, y)); }, w, h));
    track(grad_check([&](const Tensor<double>& p) { auto y = dense(xv, w, p); return sum(mul(y, y)); }, b, h));

    auto xr = random_tensor<double>({10}, rng);
    for (auto& v : xr.data_mut())
      if (std::abs(v) < 10 * h) v = v < 0 ? -10 * h : 10 * h;  // off the kink
    track(grad_check([](const Tensor<double>& p) { auto y = relu(p); return sum(mul(y, y)); }, xr, h));

    auto xl = random_tensor<double>({7}, rng, -2, 2);
    track(grad_check([](const Tensor<double>& p) { auto y = log_softmax(p); return sum(mul(y, y)); }, xl, h));
    track(grad_check([](const Tensor<double>& p) { return mean(p); }, xl, h));
    Tensor<double> xs({6}, {0.4, 1.7, -0.8, 2.1, 0.9, -1.4});  // std well above 0
    track(grad_check([](const Tensor<double>& p) { return std_pop(p); }, xs, h));

    auto a = random_tensor<double>({9}, rng);
    auto c = random_tensor<double>({9}, rng);
    track(grad_check([&](const Tensor<double>& p) { return l2_sq_distance(p, c); }, a, h));
    track(grad_check([&](const Tensor<double>& p) { return l2_sq_distance(a, p); }, c, h));
    track(grad_check([&](const Tensor<double>& p) { return sum(mul(add(p, c), sub(p, c))); }, a, h));
    track(grad_check([&](const Tensor<double>& p) { return sum(exp(affine(p, 0.5, 0.1))); }, a, h));
    track(grad_check([&](const Tensor<double>& p) { return pick(mul(p, p), 3); }, a, h));
    track(grad_check([&](const Tensor<double>& p) { auto r = reshape(p, {3, 3}); return sum(mul(r, r)); }, a, h));

    auto xb = random_tensor<double>({3, 4}, rng);
    auto bb = random_tensor<double>({4}, rng);
    track(grad_check([&](const Tensor<double>& p) { auto y = channel_bias_add(xb, p, 1); return sum(mul(y, y)); }, bb, h));
  }

  {  // full total-loss graph on a one-sample reduced-scale batch, both variants
    const ArchConfig arch = sadd::testing::tiny_arch();
    // Dense random inputs and biases pushed off zero keep every relu input
    // and maxpool comparison at least 10h away from its nonsmooth locus;
    // generated frames would put thousands of relu inputs exactly at zero.
    const Tensor<double> audio =
        random_tensor<double>({arch.audio_sample_len, 1}, rng, -1, 1);
    const Tensor<double> frames = random_tensor<double>(
        {arch.video_frames, arch.frame_channels, arch.frame_height, arch.frame_width},
        rng, 0.05, 1.0);

    ModelParams<double> base = init_params<double>(arch, 3).detached();
    const auto names = param_names(arch);
    for (std::size_t j = 0; j < base.tensors.size(); ++j)
      if (names[j].ends_with("bias") || names[j].ends_with("b0") ||
          names[j].ends_with("b1"))
        for (auto& v : base.tensors[j].data_mut()) v = rng.uniform(0.011, 0.037);

    for (const Label label : {Label::real(), Label::fake(FakeProvenance::Both)}) {
      for (LossVariant variant : {LossVariant::Stats, LossVariant::Kl}) {
        auto loss_with = [&](const ModelParams<double>& ps) {
          Tensor<double> fa = audio_forward(ps, audio);
          Tensor<double> fv = visual_forward(ps, frames);
          Tensor<double> la = classify(ps, Branch::Audio, fa);
          Tensor<double> lv = classify(ps, Branch::Visual, fv);
          return total_loss(la, lv, fa, fv, label, 0.7, variant).total_tensor;
        };
        for (std::size_t j = 0; j < base.tensors.size(); ++j) {
          auto fn = [&](const Tensor<double>& p) {
            ModelParams<double> ps = base;
            ps.tensors[j] = p;
            return loss_with(ps);
          };
          track(grad_check(fn, base.tensors[j], h));
        }
      }
    }
  }

  const double dt = now_seconds() - t0;
  const bool ok = worst < 1e-3 && dt < 60.0;
  return {ok, "max rel err " + fmt(worst) + ", " + fmt(dt) + " s"};
}

// --------------------------------------------------------------------------
// 2. Loss oracles, <= 1e-6 absolute.

std::pair<bool, std::string> loss_oracles() {
  double worst = 0;
  auto expect = [&](double actual, double expected) {
    worst = std::max(worst, std::abs(actual - expected));
  };
  const double ln2 = std::log(2.0);

  Tensor<double> uniform({2}, {0, 0});
  expect(cross_entropy(uniform, Label::real()).item(), ln2);
  expect(cross_entropy(uniform, Label::fake(FakeProvenance::Both)).item(), ln2);
  Tensor<double> confident({2}, {10, -10});
  expect(cross_entropy(confident, Label::real()).item(), std::log1p(std::exp(-20.0)));

  Tensor<double> f({3}, {0.1, 0.5, -0.2});
  expect(contrastive_feature_loss(f, f, Label::real()).item(), 0.0);
  expect(contrastive_feature_loss(f, f, Label::fake(FakeProvenance::Both)).item(), 0.9801);
  Tensor<double> e1({2}, {1, 0});
  Tensor<double> e2({2}, {0, 1});
  expect(contrastive_feature_loss(e1, e2, Label::fake(FakeProvenance::AudioOnly)).item(), 0.0);

  Tensor<double> same({3}, {1, 2, 3});
  expect(statistics_aware_loss(same, same, Label::real()).item(), 0.0);
  Tensor<double> ones({2}, {1, 1});
  Tensor<double> threes({2}, {3, 3});
  expect(statistics_aware_loss(ones, threes, Label::fake(FakeProvenance::VisualOnly)).item(), 0.0);
  Tensor<double> fa({2}, {0, 2});
  Tensor<double> fv({2}, {0.5, 2.5});
  expect(statistics_aware_loss(fa, fv, Label::fake(FakeProvenance::AudioOnly)).item(), 1.75);
  Tensor<double> fv2({2}, {1, 3});
  expect(statistics_aware_loss(fa, fv2, Label::real()).item(), 1.0);

  expect(kl_variant_loss(f, f).item(), 0.0);
  Tensor<double> ka({2}, {0.0, std::log(3.0)});
  Tensor<double> kv({2}, {0.0, 0.0});
  expect(kl_variant_loss(ka, kv).item(), 0.25 * std::log(0.5) + 0.75 * std::log(1.5));

  auto bd = total_loss(uniform, uniform, f, f, Label::real(), 1.0, LossVariant::Stats);
  expect(bd.total, 2 * ln2);

  return {worst <= 1e-6, "max abs err " + fmt(worst)};
}

// --------------------------------------------------------------------------
// 3. AUC against brute-force pair counting.

std::pair<bool, std::string> auc_oracle() {
  Xoshiro256 rng(77);
  double worst = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> scores;
    std::vector<bool> fake;
    for (std::size_t i = 0; i < n; ++i) {
      scores.push_back(rng.below(2) ? rng.uniform(0, 1)
                                    : double(rng.below(4)) * (1.0 / 3.0));
      fake.push_back(rng.below(2) == 1);
    }
    fake[0] = true;
    fake[n - 1] = false;

    double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!fake[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (fake[j]) continue;
        ++pairs;
        if (scores[i] > scores[j]) wins += 1;
        else if (scores[i] == scores[j]) wins += 0.5;
      }
    }
    worst = std::max(worst,
                     std::abs(compute_auc(scores, fake) - wins / double(pairs)));
  }
  return {worst <= 1e-12, "500 instances, max abs err " + fmt(worst)};
}

// --------------------------------------------------------------------------
// 4. Normalization contract on 10,000 draws.

std::pair<bool, std::string> normalization_contract() {
  Xoshiro256 rng(4242);
  bool ok = true;
  double worst_auc_gap = 0;
  std::size_t draws = 0;
  for (int group = 0; group < 200 && ok; ++group) {
    ScoreNormalizer n;
    n.min = rng.uniform(-10, 10);
    n.max = n.min + rng.uniform(0.1, 20.0);

    std::vector<double> mu;
    std::vector<bool> fake;
    for (int i = 0; i < 50; ++i) {
      mu.push_back(rng.uniform(n.min, n.max));  // inside range: no clipping
      fake.push_back(rng.below(2) == 1);
      ++draws;
    }
    fake[0] = true;
    fake[1] = false;

    std::vector<double> s;
    for (double m : mu) {
      const double v = normalize_score(m, n);
      if (v < 0.0 || v > 1.0) ok = false;
      s.push_back(v);
    }
    std::vector<std::size_t> order(mu.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return mu[a] < mu[b]; });
    for (std::size_t i = 1; i < order.size(); ++i)
      if (s[order[i]] < s[order[i - 1]]) ok = false;

    worst_auc_gap = std::max(
        worst_auc_gap, std::abs(compute_auc(mu, fake) - compute_auc(s, fake)));
  }
  ok = ok && worst_auc_gap <= 1e-12;
  return {ok, std::to_string(draws) + " draws, max AUC gap " + fmt(worst_auc_gap)};
}

// --------------------------------------------------------------------------
// 5/6/8 share one alpha in {0, 1} sweep on the shipped default config.

struct SweepArtifacts {
  fs::path root;
  fs::path data_dir;
  fs::path sweep_dir;
  fs::path alpha1_dir;  // the alpha = 1 subrun
  bool ready = false;
  std::string error;
};

SweepArtifacts run_default_sweep() {
  SweepArtifacts a;
  a.root = fs::temp_directory_path() / "sadd_acceptance";
  fs::remove_all(a.root);
  fs::create_directories(a.root);
  a.data_dir = a.root / "data";
  a.sweep_dir = a.root / "sweep";
  a.alpha1_dir = a.sweep_dir / "alpha_01_1";
  std::ostringstream log;
  try {
    RunOptions gen;
    gen.out_dir = a.data_dir;
    gen.seed = 42;
    run_generate(gen, log);

    RunOptions sweep;
    sweep.data_dir = a.data_dir;
    sweep.out_dir = a.sweep_dir;
    sweep.alphas = {0.0, 1.0};
    sweep.seed = 42;
    run_sweep(sweep, log);
    a.ready = true;
  } catch (const std::exception& e) {
    a.error = e.what();
  }
  return a;
}

double auc_from_file(const fs::path& auc_txt, const char* key) {
  std::ifstream is(auc_txt);
  std::string line;
  while (std::getline(is, line))
    if (line.rfind(key, 0) == 0) return std::stod(line.substr(std::strlen(key)));
  throw DataError("missing " + std::string(key) + " in " + auc_txt.string());
}

std::pair<bool, std::string> end_to_end(const SweepArtifacts& a) {
  if (!a.ready) return {false, "pipeline failed: " + a.error};

  // wall time and loss trajectory from the streamed epoch log
  std::ifstream epochs(a.alpha1_dir / "epochs.csv");
  std::string line;
  std::getline(epochs, line);  // header
  double train_seconds = 0, first_total = 0, last_total = 0;
  std::size_t rows = 0;
  while (std::getline(epochs, line)) {
    ++rows;
    const auto last_comma = line.rfind(',');
    train_seconds += std::stod(line.substr(last_comma + 1));
    const auto prev_comma = line.rfind(',', last_comma - 1);
    last_total = std::stod(line.substr(prev_comma + 1, last_comma - prev_comma - 1));
    if (rows == 1) first_total = last_total;
  }
  const double auc = auc_from_file(a.alpha1_dir / "eval" / "auc.txt", "auc_s=");

  const bool ok = rows == 50 && auc >= 0.90 && train_seconds < 1800.0 &&
                  last_total < first_total;
  return {ok, "test AUC " + fmt(auc) + " (floor 0.90), 50 epochs in " +
                  fmt(train_seconds) + " s, mean total " + fmt(first_total) +
                  " -> " + fmt(last_total)};
}

std::pair<bool, std::string> ablation_report(const SweepArtifacts& a) {
  if (!a.ready) return {false, "pipeline failed: " + a.error};
  std::ifstream csv(a.sweep_dir / "sweep_summary.csv");
  if (!csv) return {false, "sweep summary missing"};
  std::string line;
  std::getline(csv, line);  // header
  std::vector<std::string> rows;
  while (std::getline(csv, line))
    if (!line.empty()) rows.push_back(line);
  if (rows.size() != 2) return {false, "expected 2 summary rows"};
  // soft criterion: both runs reported side by side with finite values
  for (const auto& row : rows) {
    std::istringstream ls(row);
    std::string field;
    while (std::getline(ls, field, ','))
      if (!std::isfinite(std::stod(field))) return {false, "non-finite field " + field};
  }
  return {true, "alpha=0: [" + rows[0] + "], alpha=1: [" + rows[1] + "]"};
}

std::pair<bool, std::string> statistics_separation(const SweepArtifacts& a) {
  if (!a.ready) return {false, "pipeline failed: " + a.error};
  const auto params = load_checkpoint(a.alpha1_dir / "checkpoint.sadd").detached();
  const auto test_videos = load_dataset(a.data_dir, "test");
  const SeparationReport rep = separation_report(params, test_videos);
  const bool ok = rep.fake_gap.median > rep.real_gap.median;
  return {ok, "median |mu_a-mu_v| fake " + fmt(rep.fake_gap.median) + " > real " +
                  fmt(rep.real_gap.median)};
}

// --------------------------------------------------------------------------
// 7. Bitwise determinism of generate + train + eval.

std::pair<bool, std::string> determinism() {
  const std::vector<std::string> overrides = {
      "data.n_train_videos=12", "data.n_test_videos=8",
      "data.windows_per_video=2", "train.epochs=4",
  };
  const fs::path root = fs::temp_directory_path() / "sadd_acceptance_det";
  fs::remove_all(root);
  std::ostringstream log;

  auto one_round = [&](const fs::path& dir) {
    RunOptions gen;
    gen.out_dir = dir / "data";
    gen.overrides = overrides;
    gen.seed = 4242;
    run_generate(gen, log);
    RunOptions tr;
    tr.data_dir = dir / "data";
    tr.out_dir = dir / "run";
    tr.overrides = overrides;
    tr.seed = 4242;
    run_train(tr, log);
    RunOptions ev;
    ev.data_dir = dir / "data";
    ev.out_dir = dir / "eval";
    ev.checkpoint_path = dir / "run" / "checkpoint.sadd";
    ev.overrides = overrides;
    run_eval(ev, log);
  };
  one_round(root / "a");
  one_round(root / "b");

  const bool ckpt = slurp(root / "a" / "run" / "checkpoint.sadd") ==
                    slurp(root / "b" / "run" / "checkpoint.sadd");
  const bool scores = slurp(root / "a" / "eval" / "scores.csv") ==
                      slurp(root / "b" / "eval" / "scores.csv");
  const bool auc = slurp(root / "a" / "eval" / "auc.txt") ==
                   slurp(root / "b" / "eval" / "auc.txt");
  return {ckpt && scores && auc,
          std::string("checkpoint ") + (ckpt ? "identical" : "DIFFERS") +
              ", scores " + (scores ? "identical" : "DIFFER") + ", AUC " +
              (auc ? "identical" : "DIFFERS")};
}

// --------------------------------------------------------------------------
// 9. Parameter-count ordering.

std::pair<bool, std::string> parameter_ordering() {
  const std::size_t shallow = param_count(ArchConfig::shallow_default());
  const std::size_t deep = param_count(ArchConfig::deep_reference());
  return {shallow < deep,
          "shallow " + std::to_string(shallow) + " < deep " + std::to_string(deep)};
}

// --------------------------------------------------------------------------
// 10. Format round-trips and structured corruption errors.

std::pair<bool, std::string> format_roundtrips() {
  const fs::path dir = fs::temp_directory_path() / "sadd_acceptance_fmt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Xoshiro256 rng(10);
  bool ok = true;
  std::string note;

  auto expect_fault = [&](const std::function<void()>& fn, FormatFault want,
                          const char* what) {
    try {
      fn();
      ok = false;
      note += std::string(what) + " did not throw; ";
    } catch (const FormatError& e) {
      if (e.fault() != want) {
        ok = false;
        note += std::string(what) + " wrong fault; ";
      }
    }
  };

  {  // SDT1
    auto t = random_tensor<float>({5, 4, 3}, rng, -50, 50);
    t.data_mut()[0] = -0.0f;
    t.data_mut()[1] = 1e-42f;
    const fs::path p = dir / "t.sdt";
    write_tensor(p, t);
    const auto back = read_tensor(p);
    for (std::size_t i = 0; i < t.numel(); ++i)
      if (std::bit_cast<std::uint32_t>(t.data()[i]) !=
          std::bit_cast<std::uint32_t>(back.data()[i]))
        ok = false;

    const std::string good = slurp(p);
    auto spit = [&](const fs::path& f, const std::string& s) {
      std::ofstream os(f, std::ios::binary | std::ios::trunc);
      os << s;
    };
    std::string bad = good;
    bad[0] = 'x';
    spit(dir / "m.sdt", bad);
    expect_fault([&] { read_tensor(dir / "m.sdt"); }, FormatFault::BadMagic, "sdt magic");
    spit(dir / "tr.sdt", good.substr(0, good.size() - 3));
    expect_fault([&] { read_tensor(dir / "tr.sdt"); }, FormatFault::Truncated, "sdt trunc");
    std::string huge = good.substr(0, 8);
    for (int rep = 0; rep < 2; ++rep) {
      const std::uint64_t ext = std::uint64_t(1) << 40;
      for (int i = 0; i < 8; ++i) huge.push_back(char((ext >> (8 * i)) & 0xff));
    }
    // header claims rank 3; add one sane extent after the two huge ones
    huge.push_back(1); for (int i = 0; i < 7; ++i) huge.push_back(0);
    spit(dir / "ov.sdt", huge);
    expect_fault([&] { read_tensor(dir / "ov.sdt"); }, FormatFault::ExtentOverflow, "sdt overflow");
    expect_fault([&] { write_tensor(dir / "z.sdt", Tensor<float>(Shape{0, 2})); },
                 FormatFault::ZeroExtent, "sdt zero extent");
  }

  {  // checkpoint
    const auto params = init_params<float>(sadd::testing::tiny_arch(), 5);
    const fs::path p = dir / "m.sadd";
    save_checkpoint(p, params);
    const auto back = load_checkpoint(p);
    for (std::size_t i = 0; i < params.tensors.size() && ok; ++i)
      for (std::size_t j = 0; j < params.tensors[i].numel(); ++j)
        if (std::bit_cast<std::uint32_t>(params.tensors[i].data()[j]) !=
            std::bit_cast<std::uint32_t>(back.tensors[i].data()[j]))
          ok = false;

    const std::string good = slurp(p);
    auto spit = [&](const fs::path& f, const std::string& s) {
      std::ofstream os(f, std::ios::binary | std::ios::trunc);
      os << s;
    };
    std::string bad = good;
    bad[1] = 'q';
    spit(dir / "cm.sadd", bad);
    expect_fault([&] { load_checkpoint(dir / "cm.sadd"); }, FormatFault::BadMagic, "ckpt magic");
    std::string ver = good;
    ver[4] = 7;
    spit(dir / "cv.sadd", ver);
    expect_fault([&] { load_checkpoint(dir / "cv.sadd"); }, FormatFault::BadVersion, "ckpt version");
    spit(dir / "ct.sadd", good.substr(0, good.size() - 9));
    expect_fault([&] { load_checkpoint(dir / "ct.sadd"); }, FormatFault::Truncated, "ckpt trunc");
  }

  return {ok, ok ? "SDT1 + checkpoint bitwise, all faults structured" : note};
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");

  criterion(1, "gradient fidelity", gradient_fidelity);
  criterion(2, "loss oracles", loss_oracles);
  criterion(3, "AUC oracle equivalence", auc_oracle);
  criterion(4, "normalization contract", normalization_contract);

  const SweepArtifacts sweep = run_default_sweep();
  criterion(5, "end-to-end training", [&] { return end_to_end(sweep); });
  criterion(6, "ablation report (soft)", [&] { return ablation_report(sweep); });
  criterion(7, "determinism", determinism);
  criterion(8, "statistics separation", [&] { return statistics_separation(sweep); });
  criterion(9, "parameter-count ordering", parameter_ordering);
  criterion(10, "format round-trips", format_roundtrips);

  if (failures == 0) std::printf("all criteria passed\n");
  else std::printf("%d criteria FAILED\n", failures);
  return failures;
}
