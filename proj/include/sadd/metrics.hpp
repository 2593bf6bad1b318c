#pragma once

#include <string>
#include <vector>

#include "sadd/data.hpp"
#include "sadd/model.hpp"

namespace sadd {

// Video-level scoring and evaluation. The raw fakeness statistic mu_d is the
// mean squared feature distance over a video's subsequences; higher means
// more dissonant, i.e. more fake. The normalized score s maps mu_d through
// the train-set min/max and clips to [0, 1] (1 = most fake).

struct ScoreNormalizer {
  double min = 0;
  double max = 0;
  bool degenerate() const { return !(max > min); }
};

struct ScoreRecord {
  std::string video_id;
  Label label;
  double mu_d = 0;
  double s = 0;
};

// mu_d = mean over subsequences of the squared L2 feature distance.
// Pass detached params (ModelParams::detached()) to avoid growing a graph.
double video_score(const ModelParams<float>& params, const VideoRecord& video);

ScoreNormalizer fit_normalizer(const std::vector<double>& train_scores);

// clip((mu_d - min) / (max - min), 0, 1); a degenerate normalizer
// (max == min) maps everything to 0.5.
double normalize_score(double mu_d, const ScoreNormalizer& n);

// Hard-threshold rule: 1 (real) when mu_d < tau, else 0 (fake). Kept for
// baseline comparison; the normalization path is the shipped default.
int threshold_score(double mu_d, double tau);

// Exhaustive sweep over candidate thresholds, maximizing accuracy of the
// threshold rule on the given scores; ties resolve to the smallest tau.
double best_threshold(const std::vector<double>& mu_d,
                      const std::vector<bool>& is_fake);

// Mann-Whitney AUC with midrank tie handling, fake as the positive class,
// computed by sort-and-rank in O(n log n). Throws unless both classes are
// present.
double compute_auc(const std::vector<double>& scores,
                   const std::vector<bool>& is_fake);
double compute_auc(const std::vector<ScoreRecord>& records, bool use_normalized);

// Scores every video (ordered by video_id) and fills both mu_d and s.
std::vector<ScoreRecord> score_videos(const ModelParams<float>& params,
                                      const std::vector<VideoRecord>& videos,
                                      const ScoreNormalizer& n,
                                      int threads = 1);

// Uniform-bin histogram; out-of-range values clamp into the edge bins, so
// counts always sum to the number of values.
std::vector<std::size_t> histogram_counts(std::span<const float> values,
                                          std::size_t bins, double lo, double hi);

struct FeatureHistogram {
  std::string sample_id;
  Label label;
  double lo = 0, hi = 0;
  std::vector<std::size_t> audio_counts;
  std::vector<std::size_t> visual_counts;
};

FeatureHistogram feature_histogram(const ModelParams<float>& params,
                                   const AVSample& sample, std::size_t bins,
                                   double lo, double hi);

struct QuartileStats {
  double q25 = 0, median = 0, q75 = 0;
  std::size_t count = 0;
};

// Per-label distribution of the feature-statistics gap |mu_a - mu_v| and of
// the adaptive margin sigma_a + sigma_v, across all subsequences.
struct SeparationReport {
  QuartileStats real_gap, fake_gap;
  QuartileStats real_stdsum, fake_stdsum;
};

SeparationReport separation_report(const ModelParams<float>& params,
                                   const std::vector<VideoRecord>& videos);

QuartileStats quartiles(std::vector<double> values);

}  // namespace sadd
