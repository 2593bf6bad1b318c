#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sadd/rng.hpp"
#include "sadd/tensor.hpp"

namespace sadd {

// Two-branch detector: a 1D-convolutional extractor over raw waveforms and a
// 3D-convolutional extractor over frame sequences, each projecting to a
// feature vector of the same length, plus one classification head per branch.

struct Conv1dSpec {
  std::size_t channels = 16;
  std::size_t kernel = 9;
  std::size_t stride = 1;
  bool pool = false;
  std::size_t pool_window = 2;
  std::size_t pool_stride = 2;

  bool operator==(const Conv1dSpec&) const = default;
};

struct Conv3dSpec {
  std::size_t channels = 8;
  std::array<std::size_t, 3> kernel{3, 3, 3};   // (T, H, W)
  std::array<std::size_t, 3> stride{1, 1, 1};
  bool pool = false;
  std::array<std::size_t, 3> pool_window{2, 2, 2};
  std::array<std::size_t, 3> pool_stride{2, 2, 2};

  bool operator==(const Conv3dSpec&) const = default;
};

struct ArchConfig {
  std::size_t audio_sample_len = 1600;  // samples per subsequence window
  std::size_t video_frames = 8;         // frames per subsequence window
  std::size_t frame_channels = 3;
  std::size_t frame_height = 32;
  std::size_t frame_width = 32;
  std::size_t feature_dim = 128;
  std::size_t head_hidden_dim = 0;  // 0: single linear head; >0: hidden layer
  std::vector<Conv1dSpec> audio_blocks;
  std::vector<Conv3dSpec> visual_blocks;

  // The working configuration: 2 audio blocks, 3 visual blocks, max pooling
  // only after the last block of each branch.
  static ArchConfig shallow_default();

  // Full-resolution input shapes (48000x1 waveform, 30x3x224x224 frames) on
  // the shallow topology. Shape arithmetic only; never trained here.
  static ArchConfig paper_scale();

  // Deeper comparison point (4 audio / 5 visual blocks, hidden head layer)
  // used only to check the parameter-count ordering against the shallow net.
  static ArchConfig deep_reference();

  bool is_shallow() const {
    return audio_blocks.size() == 2 && visual_blocks.size() == 3;
  }

  bool operator==(const ArchConfig&) const = default;
};

// Key=value text form, used inside checkpoints and config files.
std::string arch_to_text(const ArchConfig& cfg);
ArchConfig arch_from_text(const std::string& text);

// Compact one-line block lists (shared by the arch text form and config files).
std::string conv1d_blocks_to_text(const std::vector<Conv1dSpec>& blocks);
std::vector<Conv1dSpec> conv1d_blocks_from_text(const std::string& text);
std::string conv3d_blocks_to_text(const std::vector<Conv3dSpec>& blocks);
std::vector<Conv3dSpec> conv3d_blocks_from_text(const std::string& text);

// Per-block output shapes and the flattened size feeding the projection.
struct BranchShapes {
  std::vector<Shape> block_out;  // after conv(+bias)+relu and optional pool
  std::size_t flat = 0;
};
BranchShapes audio_shapes(const ArchConfig& cfg);
BranchShapes visual_shapes(const ArchConfig& cfg);

// Exact number of learnable scalars for a config.
std::size_t param_count(const ArchConfig& cfg);

// Parameter tensor names, in the fixed flat order used everywhere
// (optimizer state, checkpoints, gradient checks).
std::vector<std::string> param_names(const ArchConfig& cfg);

namespace detail {

// Flat tensor layout: per branch, conv kernels/biases per block, projection
// weight/bias, then head weight/bias pairs. Audio branch first.
struct ParamLayout {
  std::size_t audio_kernel(std::size_t block) const { return 2 * block; }
  std::size_t audio_bias(std::size_t block) const { return 2 * block + 1; }
  std::size_t audio_proj_w() const { return 2 * n_audio_blocks; }
  std::size_t audio_proj_b() const { return 2 * n_audio_blocks + 1; }
  std::size_t audio_head(std::size_t i) const { return 2 * n_audio_blocks + 2 + i; }
  std::size_t visual_base() const {
    return 2 * n_audio_blocks + 2 + n_head_tensors;
  }
  std::size_t visual_kernel(std::size_t block) const { return visual_base() + 2 * block; }
  std::size_t visual_bias(std::size_t block) const { return visual_base() + 2 * block + 1; }
  std::size_t visual_proj_w() const { return visual_base() + 2 * n_visual_blocks; }
  std::size_t visual_proj_b() const { return visual_base() + 2 * n_visual_blocks + 1; }
  std::size_t visual_head(std::size_t i) const {
    return visual_base() + 2 * n_visual_blocks + 2 + i;
  }
  std::size_t total() const { return visual_base() + 2 * n_visual_blocks + 2 + n_head_tensors; }

  std::size_t n_audio_blocks = 0;
  std::size_t n_visual_blocks = 0;
  std::size_t n_head_tensors = 2;  // 2 for linear head, 4 with a hidden layer
};

inline ParamLayout layout_for(const ArchConfig& cfg) {
  return ParamLayout{.n_audio_blocks = cfg.audio_blocks.size(),
                     .n_visual_blocks = cfg.visual_blocks.size(),
                     .n_head_tensors = cfg.head_hidden_dim > 0 ? 4u : 2u};
}

}  // namespace detail

template <typename S>
struct ModelParams {
  ArchConfig config;
  std::vector<Tensor<S>> tensors;  // order per param_names(config)

  detail::ParamLayout layout() const { return detail::layout_for(config); }

  // Read-only copy for scoring: no graph is recorded through these.
  ModelParams detached() const {
    ModelParams out;
    out.config = config;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) out.tensors.push_back(t.detached());
    return out;
  }

  // Deep copy preserving requires_grad (fresh leaves, no grads).
  ModelParams clone() const {
    ModelParams out;
    out.config = config;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) out.tensors.push_back(t.clone());
    return out;
  }

  void zero_grads() {
    for (auto& t : tensors) t.zero_grad();
  }
};

enum class Branch { Audio, Visual };

// Kaiming-style uniform init, bounds +/- sqrt(6 / fan_in), zero biases.
// Fully determined by (config, seed).
template <typename S>
ModelParams<S> init_params(const ArchConfig& cfg, std::uint64_t seed);

// waveform [T_a x 1] -> feature vector [D].
template <typename S>
Tensor<S> audio_forward(const ModelParams<S>& params, const Tensor<S>& waveform);

// frames [T_v x C x H x W] -> feature vector [D].
template <typename S>
Tensor<S> visual_forward(const ModelParams<S>& params, const Tensor<S>& frames);

// feature vector [D] -> 2 raw logits (index 0 real, index 1 fake).
template <typename S>
Tensor<S> classify(const ModelParams<S>& params, Branch branch,
                   const Tensor<S>& f);

// ---------------------------------------------------------------------------
// Template implementations.

template <typename S>
ModelParams<S> init_params(const ArchConfig& cfg, std::uint64_t seed) {
  // Shape-check the config up front.
  audio_shapes(cfg);
  visual_shapes(cfg);

  Xoshiro256 rng = Xoshiro256::stream(seed, /*tag=*/0x5add0001ull);
  auto kaiming = [&rng](Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / double(fan_in));
    std::vector<S> v(shape_numel(shape));
    for (auto& x : v) x = S(rng.uniform(-bound, bound));
    Tensor<S> t(std::move(shape), std::move(v));
    t.set_requires_grad(true);
    return t;
  };
  auto zeros = [](Shape shape) {
    Tensor<S> t(std::move(shape));
    t.set_requires_grad(true);
    return t;
  };

  ModelParams<S> p;
  p.config = cfg;
  const BranchShapes ash = audio_shapes(cfg);
  const BranchShapes vsh = visual_shapes(cfg);

  std::size_t in_ch = 1;
  for (const auto& b : cfg.audio_blocks) {
    p.tensors.push_back(kaiming({b.channels, in_ch, b.kernel}, in_ch * b.kernel));
    p.tensors.push_back(zeros({b.channels}));
    in_ch = b.channels;
  }
  p.tensors.push_back(kaiming({cfg.feature_dim, ash.flat}, ash.flat));
  p.tensors.push_back(zeros({cfg.feature_dim}));
  auto push_head = [&] {
    if (cfg.head_hidden_dim > 0) {
      p.tensors.push_back(kaiming({cfg.head_hidden_dim, cfg.feature_dim}, cfg.feature_dim));
      p.tensors.push_back(zeros({cfg.head_hidden_dim}));
      p.tensors.push_back(kaiming({2, cfg.head_hidden_dim}, cfg.head_hidden_dim));
      p.tensors.push_back(zeros({2}));
    } else {
      p.tensors.push_back(kaiming({2, cfg.feature_dim}, cfg.feature_dim));
      p.tensors.push_back(zeros({2}));
    }
  };
  push_head();

  in_ch = cfg.frame_channels;
  for (const auto& b : cfg.visual_blocks) {
    const std::size_t fan = in_ch * b.kernel[0] * b.kernel[1] * b.kernel[2];
    p.tensors.push_back(
        kaiming({b.channels, in_ch, b.kernel[0], b.kernel[1], b.kernel[2]}, fan));
    p.tensors.push_back(zeros({b.channels}));
    in_ch = b.channels;
  }
  p.tensors.push_back(kaiming({cfg.feature_dim, vsh.flat}, vsh.flat));
  p.tensors.push_back(zeros({cfg.feature_dim}));
  push_head();

  return p;
}

template <typename S>
Tensor<S> audio_forward(const ModelParams<S>& params, const Tensor<S>& waveform) {
  const auto& cfg = params.config;
  if (waveform.rank() != 2 || waveform.shape()[0] != cfg.audio_sample_len ||
      waveform.shape()[1] != 1)
    throw ShapeError("audio_forward: expected waveform [" +
                     std::to_string(cfg.audio_sample_len) + " x 1], got " +
                     shape_str(waveform.shape()));
  const auto lay = params.layout();
  Tensor<S> x = waveform;
  for (std::size_t i = 0; i < cfg.audio_blocks.size(); ++i) {
    const auto& b = cfg.audio_blocks[i];
    x = conv1d(x, params.tensors[lay.audio_kernel(i)], b.stride);
    x = channel_bias_add(x, params.tensors[lay.audio_bias(i)], 1);
    x = relu(x);
    if (b.pool) x = maxpool(x, {b.pool_window, 1}, {b.pool_stride, 1});
  }
  x = flatten(x);
  x = dense(x, params.tensors[lay.audio_proj_w()], params.tensors[lay.audio_proj_b()]);
  return relu(x);
}

template <typename S>
Tensor<S> visual_forward(const ModelParams<S>& params, const Tensor<S>& frames) {
  const auto& cfg = params.config;
  if (frames.rank() != 4 || frames.shape()[0] != cfg.video_frames ||
      frames.shape()[1] != cfg.frame_channels ||
      frames.shape()[2] != cfg.frame_height ||
      frames.shape()[3] != cfg.frame_width)
    throw ShapeError("visual_forward: expected frames [" +
                     std::to_string(cfg.video_frames) + " x " +
                     std::to_string(cfg.frame_channels) + " x " +
                     std::to_string(cfg.frame_height) + " x " +
                     std::to_string(cfg.frame_width) + "], got " +
                     shape_str(frames.shape()));
  const auto lay = params.layout();
  Tensor<S> x = frames;
  for (std::size_t i = 0; i < cfg.visual_blocks.size(); ++i) {
    const auto& b = cfg.visual_blocks[i];
    x = conv3d(x, params.tensors[lay.visual_kernel(i)], b.stride);
    x = channel_bias_add(x, params.tensors[lay.visual_bias(i)], 1);
    x = relu(x);
    if (b.pool)
      x = maxpool(x, {b.pool_window[0], 1, b.pool_window[1], b.pool_window[2]},
                  {b.pool_stride[0], 1, b.pool_stride[1], b.pool_stride[2]});
  }
  x = flatten(x);
  x = dense(x, params.tensors[lay.visual_proj_w()], params.tensors[lay.visual_proj_b()]);
  return relu(x);
}

template <typename S>
Tensor<S> classify(const ModelParams<S>& params, Branch branch,
                   const Tensor<S>& f) {
  const auto& cfg = params.config;
  if (f.rank() != 1 || f.numel() != cfg.feature_dim)
    throw ShapeError("classify: expected feature vector [" +
                     std::to_string(cfg.feature_dim) + "], got " +
                     shape_str(f.shape()));
  const auto lay = params.layout();
  auto head_at = [&](std::size_t i) {
    return branch == Branch::Audio ? lay.audio_head(i) : lay.visual_head(i);
  };
  if (cfg.head_hidden_dim > 0) {
    Tensor<S> h = relu(dense(f, params.tensors[head_at(0)], params.tensors[head_at(1)]));
    return dense(h, params.tensors[head_at(2)], params.tensors[head_at(3)]);
  }
  return dense(f, params.tensors[head_at(0)], params.tensors[head_at(1)]);
}

}  // namespace sadd
