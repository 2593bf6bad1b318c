#pragma once

#include "sadd/model.hpp"
#include "sadd/rng.hpp"

namespace sadd::testing {

// Small architecture for fast tests and finite-difference verification.
inline ArchConfig tiny_arch() {
  ArchConfig c;
  c.audio_sample_len = 64;
  c.video_frames = 4;
  c.frame_channels = 3;
  c.frame_height = 8;
  c.frame_width = 8;
  c.feature_dim = 8;
  c.audio_blocks = {
      {.channels = 2, .kernel = 5, .stride = 2, .pool = false},
      {.channels = 3, .kernel = 3, .stride = 2, .pool = true, .pool_window = 2, .pool_stride = 2},
  };
  c.visual_blocks = {
      {.channels = 2, .kernel = {3, 3, 3}, .stride = {1, 1, 1}, .pool = false},
      {.channels = 3, .kernel = {1, 3, 3}, .stride = {1, 1, 1}, .pool = false},
      {.channels = 4, .kernel = {2, 3, 3}, .stride = {1, 1, 1}, .pool = true,
       .pool_window = {1, 2, 2}, .pool_stride = {1, 2, 2}},
  };
  return c;
}

template <typename S>
Tensor<S> random_tensor(Shape shape, Xoshiro256& rng, double lo = -1.0,
                        double hi = 1.0) {
  std::vector<S> v(shape_numel(shape));
  for (auto& x : v) x = S(rng.uniform(lo, hi));
  return Tensor<S>(std::move(shape), std::move(v));
}

}  // namespace sadd::testing
