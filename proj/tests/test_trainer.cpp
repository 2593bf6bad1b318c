#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sadd/checkpoint.hpp"
#include "sadd/trainer.hpp"

using namespace sadd;
using sadd::testing::tiny_arch;

namespace {

// Generator config matching the tiny architecture's window shapes.
GenConfig tiny_gen(std::size_t n_train = 8, std::size_t n_test = 4) {
  GenConfig cfg;
  cfg.n_train_videos = n_train;
  cfg.n_test_videos = n_test;
  cfg.windows_per_video = 2;
  cfg.window.audio_window = tiny_arch().audio_sample_len;
  cfg.window.frames_per_window = tiny_arch().video_frames;
  cfg.window.frame_height = tiny_arch().frame_height;
  cfg.window.frame_width = tiny_arch().frame_width;
  return cfg;
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.arch = tiny_arch();
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seed = 5;
  return cfg;
}

// populates zero gradients without touching values
void seed_zero_grads(ModelParams<float>& p) {
  for (auto& t : p.tensors) backward(affine(sum(t), 0.0f, 0.0f));
}

}  // namespace

TEST_CASE("adam fixed point at zero gradient and zero decay") {
  auto p = init_params<float>(tiny_arch(), 1);
  auto snapshot = p.clone();
  seed_zero_grads(p);
  AdamState state = AdamState::for_params(p);
  adam_step(p, state, 1e-3, 0.0);
  CHECK(state.t == 1);
  for (std::size_t i = 0; i < p.tensors.size(); ++i)
    for (std::size_t j = 0; j < p.tensors[i].numel(); ++j)
      CHECK(p.tensors[i].data()[j] == snapshot.tensors[i].data()[j]);
}

TEST_CASE("adam first step is a bias-corrected unit step") {
  ModelParams<float> p;
  p.config = tiny_arch();
  auto t = Tensor<float>::scalar(1.0f);
  t.set_requires_grad(true);
  p.tensors.push_back(t);
  backward(sum(t));  // grad = 1
  REQUIRE(t.grad()[0] == 1.0f);

  AdamState state = AdamState::for_params(p);
  adam_step(p, state, 1e-3, 0.0);
  CHECK(std::abs(p.tensors[0].data()[0] - 0.999f) < 1e-7f);
}

TEST_CASE("adam requires populated gradients") {
  auto p = init_params<float>(tiny_arch(), 2);
  AdamState state = AdamState::for_params(p);
  CHECK_THROWS_AS(adam_step(p, state, 1e-3, 0.0), DataError);
}

TEST_CASE("training is bitwise deterministic") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(), 9);
  const auto samples = flatten_samples(train_videos);
  TrainConfig cfg = tiny_train_config();

  auto a = train(samples, cfg);
  auto b = train(samples, cfg);
  REQUIRE(a.best_params.tensors.size() == b.best_params.tensors.size());
  for (std::size_t i = 0; i < a.best_params.tensors.size(); ++i)
    for (std::size_t j = 0; j < a.best_params.tensors[i].numel(); ++j)
      CHECK(a.best_params.tensors[i].data()[j] == b.best_params.tensors[i].data()[j]);
  REQUIRE(a.logs.size() == b.logs.size());
  for (std::size_t e = 0; e < a.logs.size(); ++e)
    CHECK(a.logs[e].total == b.logs[e].total);
}

TEST_CASE("steps per epoch and partial batches") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(5, 4), 3);
  const auto samples = flatten_samples(train_videos);  // 10 samples
  REQUIRE(samples.size() == 10);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 2;
  cfg.batch_size = 4;  // 10 -> batches of 4, 4, 2: last partial batch kept
  auto r = train(samples, cfg);
  CHECK(r.total_steps == std::size_t(2 * 3));
}

TEST_CASE("epoch-1 training returns the epoch-1 weights") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(), 13);
  const auto samples = flatten_samples(train_videos);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  auto r = train(samples, cfg);
  CHECK(r.best_epoch == 1);
  CHECK(r.logs.size() == 1);
}

TEST_CASE("checkpoint selection minimizes the epoch-mean total") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(), 17);
  const auto samples = flatten_samples(train_videos);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 6;
  auto r = train(samples, cfg);

  // replay the log: the reported epoch is the argmin, earliest on ties
  REQUIRE(r.logs.size() == 6);
  std::size_t argmin = 1;
  for (std::size_t e = 0; e < r.logs.size(); ++e)
    if (r.logs[e].total < r.logs[argmin - 1].total) argmin = e + 1;
  CHECK(r.best_epoch == argmin);

  // retraining for exactly best_epoch epochs reproduces the snapshot bitwise
  TrainConfig prefix = cfg;
  prefix.epochs = r.best_epoch;
  auto replay = train(samples, prefix);
  for (std::size_t i = 0; i < r.best_params.tensors.size(); ++i)
    for (std::size_t j = 0; j < r.best_params.tensors[i].numel(); ++j)
      CHECK(r.best_params.tensors[i].data()[j] == replay.best_params.tensors[i].data()[j]);
}

TEST_CASE("loss decreases on a two-sample toy problem") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(10, 4), 23);
  // one aligned real and one fully broken fake
  const VideoRecord* real = nullptr;
  const VideoRecord* fake = nullptr;
  for (const auto& v : train_videos) {
    if (!v.label.is_fake() && !real) real = &v;
    if (v.label.provenance == FakeProvenance::Both && !fake) fake = &v;
  }
  REQUIRE(real != nullptr);
  REQUIRE(fake != nullptr);
  std::vector<AVSample> samples{real->subsequences[0], fake->subsequences[0]};

  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 200;  // batch_size 2: one step per epoch
  cfg.batch_size = 2;
  auto r = train(samples, cfg);
  REQUIRE(r.logs.size() == 200);
  std::size_t decreases = 0;
  for (std::size_t e = 1; e < r.logs.size(); ++e)
    if (r.logs[e].total < r.logs[e - 1].total) ++decreases;
  CHECK(double(decreases) >= 0.9 * double(r.logs.size() - 1));
  CHECK(r.logs.back().total < r.logs.front().total);
}

TEST_CASE("alpha 0 and alpha 1 runs differ but both stay finite") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(), 29);
  const auto samples = flatten_samples(train_videos);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 4;

  cfg.alpha = 0.0;
  auto base = train(samples, cfg);
  cfg.alpha = 1.0;
  auto stats = train(samples, cfg);
  bool differs = false;
  for (std::size_t e = 0; e < 4; ++e) {
    CHECK(std::isfinite(base.logs[e].total));
    CHECK(std::isfinite(stats.logs[e].total));
    if (base.logs[e].total != stats.logs[e].total) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("non-finite losses abort with a diagnostic") {
  auto [train_videos, test_videos] = generate_synthetic_dataset(tiny_gen(4, 4), 31);
  auto samples = flatten_samples(train_videos);
  // poison a REAL sample's waveform: the squared feature distance overflows
  // float and the real-branch contrastive term goes non-finite
  REQUIRE_FALSE(samples[0].label.is_fake());
  for (std::size_t i = 0; i < 8; ++i) samples[0].audio.data_mut()[i] = 1e30f;
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  CHECK_THROWS_WITH_AS(train(samples, cfg), doctest::Contains("epoch 1"),
                       NumericError);
}

TEST_CASE("empty dataset is rejected") {
  CHECK_THROWS_AS(train({}, tiny_train_config()), DataError);
}

TEST_CASE("epoch permutation is a seeded permutation") {
  const auto p1 = epoch_permutation(100, 7, 3);
  const auto p2 = epoch_permutation(100, 7, 3);
  CHECK(p1 == p2);
  const auto p3 = epoch_permutation(100, 7, 4);
  CHECK(p1 != p3);
  auto sorted = p1;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("checkpoint round-trip is bitwise") {
  const auto dir = std::filesystem::temp_directory_path() / "sadd_test_ckpt";
  std::filesystem::create_directories(dir);
  auto p = init_params<float>(tiny_arch(), 37);
  const auto path = dir / "model.sadd";
  save_checkpoint(path, p);
  auto back = load_checkpoint(path);
  CHECK(back.config == p.config);
  REQUIRE(back.tensors.size() == p.tensors.size());
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    REQUIRE(back.tensors[i].shape() == p.tensors[i].shape());
    CHECK(back.tensors[i].requires_grad());
    for (std::size_t j = 0; j < p.tensors[i].numel(); ++j) {
      const auto a = std::bit_cast<std::uint32_t>(p.tensors[i].data()[j]);
      const auto b = std::bit_cast<std::uint32_t>(back.tensors[i].data()[j]);
      CHECK(a == b);
    }
  }
}

TEST_CASE("checkpoint structured errors") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "sadd_test_ckpt_err";
  fs::create_directories(dir);
  auto p = init_params<float>(tiny_arch(), 41);
  const auto path = dir / "model.sadd";
  save_checkpoint(path, p);

  std::ifstream is(path, std::ios::binary);
  std::string good((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  auto spit = [&](const fs::path& f, const std::string& s) {
    std::ofstream os(f, std::ios::binary | std::ios::trunc);
    os << s;
  };
  auto fault_of = [](const fs::path& f) {
    try {
      load_checkpoint(f);
    } catch (const FormatError& e) {
      return e.fault();
    }
    return FormatFault::Corrupt;
  };

  std::string bad = good;
  bad[0] = 'Z';
  spit(dir / "magic.sadd", bad);
  CHECK(fault_of(dir / "magic.sadd") == FormatFault::BadMagic);

  std::string version = good;
  version[4] = 9;  // little-endian low byte of the version word
  spit(dir / "version.sadd", version);
  CHECK(fault_of(dir / "version.sadd") == FormatFault::BadVersion);

  spit(dir / "trunc.sadd", good.substr(0, good.size() / 2));
  CHECK(fault_of(dir / "trunc.sadd") == FormatFault::Truncated);

  spit(dir / "trailing.sadd", good + "x");
  CHECK(fault_of(dir / "trailing.sadd") == FormatFault::Corrupt);

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.sadd"), IoError);
}
