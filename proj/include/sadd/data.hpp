#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sadd/losses.hpp"
#include "sadd/tensor.hpp"

namespace sadd {

// Synthetic audio-visual corpus. Real videos carry one latent envelope that
// drives both the audio amplitude and the brightness of a moving blob in the
// frames; fakes break the cross-modal link per provenance (shifted audio
// envelope with re-randomized carriers, independent visual envelope, or both).

// One aligned window: ~audio_window samples of waveform and the co-temporal
// frames.
struct AVSample {
  Tensor<float> audio;   // [T_a x 1]
  Tensor<float> frames;  // [T_v x C x H x W]
  Label label;
  std::string video_id;
  std::size_t subseq_index = 0;
};

struct VideoRecord {
  std::string video_id;
  Label label;
  std::string gen_params;    // free-form provenance notes from the generator
  Tensor<float> raw_audio;   // full stream [T_total x 1]
  Tensor<float> raw_frames;  // full stream [T_total x C x H x W]
  std::vector<AVSample> subsequences;
};

struct WindowConfig {
  std::size_t audio_window = 1600;     // samples per subsequence
  std::size_t frames_per_window = 8;
  std::size_t frame_channels = 3;
  std::size_t frame_height = 32;
  std::size_t frame_width = 32;

  bool operator==(const WindowConfig&) const = default;
};

struct GenConfig {
  std::size_t n_train_videos = 200;
  std::size_t n_test_videos = 50;
  std::size_t windows_per_video = 3;
  double fake_ratio = 0.5;
  double fake_mix_audio = 0.4;   // share of fakes with only the audio broken
  double fake_mix_visual = 0.4;
  double fake_mix_both = 0.2;
  WindowConfig window;

  void validate() const;
};

// Deterministic for a given (config, seed): every random draw comes from
// seeded xoshiro256** streams keyed by (seed, split, video index), and the
// synthesis path uses no libm transcendentals.
std::pair<std::vector<VideoRecord>, std::vector<VideoRecord>>
generate_synthetic_dataset(const GenConfig& cfg, std::uint64_t seed);

// Chops aligned raw streams into non-overlapping windows (stride = window
// length); a trailing remainder is dropped. Throws if the streams are shorter
// than one window.
std::vector<AVSample> extract_subsequences(const Tensor<float>& raw_audio,
                                           const Tensor<float>& raw_frames,
                                           const WindowConfig& window,
                                           const Label& label,
                                           const std::string& video_id);

// On-disk layout: <dir>/<split>/manifest.tsv plus one SDT1 file per stream.
// The manifest is line-delimited, tab-separated; the header row pins the
// format version and the window configuration.
void save_dataset(const std::filesystem::path& dir, const std::string& split,
                  const std::vector<VideoRecord>& videos,
                  const WindowConfig& window);
std::vector<VideoRecord> load_dataset(const std::filesystem::path& dir,
                                      const std::string& split);

std::vector<AVSample> flatten_samples(const std::vector<VideoRecord>& videos);

struct DatasetSummary {
  std::size_t n_videos = 0;
  std::size_t n_real = 0;
  std::size_t n_fake_audio = 0;
  std::size_t n_fake_visual = 0;
  std::size_t n_fake_both = 0;
  std::size_t n_subsequences = 0;
};
DatasetSummary summarize(const std::vector<VideoRecord>& videos);

// Diagnostics used by generator tests: per-frame mean brightness and the
// per-frame-window audio RMS, plus their Pearson correlation.
std::vector<double> frame_brightness_series(const Tensor<float>& raw_frames);
std::vector<double> audio_rms_series(const Tensor<float>& raw_audio,
                                     std::size_t samples_per_frame);
double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b);

}  // namespace sadd
