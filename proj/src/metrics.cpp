#include "sadd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace sadd {

double video_score(const ModelParams<float>& params, const VideoRecord& video) {
  if (video.subsequences.empty())
    throw DataError("video_score: video '" + video.video_id +
                    "' has no subsequences");
  double acc = 0;
  for (const auto& s : video.subsequences) {
    Tensor<float> fa = audio_forward(params, s.audio);
    Tensor<float> fv = visual_forward(params, s.frames);
    acc += double(l2_sq_distance(fv, fa).item());
  }
  return acc / double(video.subsequences.size());
}

ScoreNormalizer fit_normalizer(const std::vector<double>& train_scores) {
  if (train_scores.empty())
    throw DataError("fit_normalizer: no training scores");
  ScoreNormalizer n;
  n.min = *std::min_element(train_scores.begin(), train_scores.end());
  n.max = *std::max_element(train_scores.begin(), train_scores.end());
  return n;
}

double normalize_score(double mu_d, const ScoreNormalizer& n) {
  if (n.degenerate()) return 0.5;
  const double s = (mu_d - n.min) / (n.max - n.min);
  return std::min(1.0, std::max(s, 0.0));
}

int threshold_score(double mu_d, double tau) { return mu_d < tau ? 1 : 0; }

double best_threshold(const std::vector<double>& mu_d,
                      const std::vector<bool>& is_fake) {
  if (mu_d.empty() || mu_d.size() != is_fake.size())
    throw DataError("best_threshold: empty or mismatched inputs");
  std::vector<double> candidates = mu_d;
  candidates.push_back(*std::max_element(mu_d.begin(), mu_d.end()) + 1.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  double best_tau = candidates.front();
  std::size_t best_correct = 0;
  for (double tau : candidates) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < mu_d.size(); ++i) {
      const bool predicted_fake = threshold_score(mu_d[i], tau) == 0;
      if (predicted_fake == bool(is_fake[i])) ++correct;
    }
    if (correct > best_correct) {
      best_correct = correct;
      best_tau = tau;
    }
  }
  return best_tau;
}

double compute_auc(const std::vector<double>& scores,
                   const std::vector<bool>& is_fake) {
  if (scores.size() != is_fake.size())
    throw DataError("compute_auc: scores and labels differ in length");
  std::size_t n_fake = 0;
  for (bool f : is_fake) n_fake += f ? 1 : 0;
  const std::size_t n_real = scores.size() - n_fake;
  if (n_fake == 0 || n_real == 0)
    throw DataError("compute_auc: need both classes, got " +
                    std::to_string(n_fake) + " fake / " +
                    std::to_string(n_real) + " real");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // midranks over tie groups; rank sum of the fake class
  double fake_rank_sum = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * double((i + 1) + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k)
      if (is_fake[idx[k]]) fake_rank_sum += midrank;
    i = j;
  }
  const double u = fake_rank_sum - 0.5 * double(n_fake) * double(n_fake + 1);
  return u / (double(n_fake) * double(n_real));
}

double compute_auc(const std::vector<ScoreRecord>& records, bool use_normalized) {
  std::vector<double> scores;
  std::vector<bool> fake;
  scores.reserve(records.size());
  fake.reserve(records.size());
  for (const auto& r : records) {
    scores.push_back(use_normalized ? r.s : r.mu_d);
    fake.push_back(r.label.is_fake());
  }
  return compute_auc(scores, fake);
}

std::vector<ScoreRecord> score_videos(const ModelParams<float>& params,
                                      const std::vector<VideoRecord>& videos,
                                      const ScoreNormalizer& n, int threads) {
  std::vector<std::size_t> order(videos.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return videos[a].video_id < videos[b].video_id;
  });

  std::vector<ScoreRecord> out(videos.size());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const VideoRecord& v = videos[order[k]];
      ScoreRecord rec;
      rec.video_id = v.video_id;
      rec.label = v.label;
      rec.mu_d = video_score(params, v);
      rec.s = normalize_score(rec.mu_d, n);
      out[k] = std::move(rec);
    }
  };

  const int n_threads = std::max(1, threads);
  if (n_threads == 1 || videos.size() < 2) {
    worker(0, videos.size());
    return out;
  }
  // read-only params, one output slot per video: merge order is by video_id
  // no matter how the ranges land on threads
  std::vector<std::thread> pool;
  const std::size_t chunk = (videos.size() + n_threads - 1) / n_threads;
  for (int t = 0; t < n_threads; ++t) {
    const std::size_t begin = std::min(videos.size(), std::size_t(t) * chunk);
    const std::size_t end = std::min(videos.size(), begin + chunk);
    if (begin < end) pool.emplace_back(worker, begin, end);
  }
  for (auto& th : pool) th.join();
  return out;
}

std::vector<std::size_t> histogram_counts(std::span<const float> values,
                                          std::size_t bins, double lo, double hi) {
  if (bins < 1 || !(lo < hi))
    throw ConfigError("histogram_counts: need bins >= 1 and lo < hi");
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi - lo) / double(bins);
  for (float v : values) {
    double b = std::floor((double(v) - lo) / width);
    b = std::max(0.0, std::min(double(bins - 1), b));
    ++counts[std::size_t(b)];
  }
  return counts;
}

FeatureHistogram feature_histogram(const ModelParams<float>& params,
                                   const AVSample& sample, std::size_t bins,
                                   double lo, double hi) {
  FeatureHistogram h;
  h.sample_id = sample.video_id + "#" + std::to_string(sample.subseq_index);
  h.label = sample.label;
  h.lo = lo;
  h.hi = hi;
  Tensor<float> fa = audio_forward(params, sample.audio);
  Tensor<float> fv = visual_forward(params, sample.frames);
  h.audio_counts = histogram_counts(fa.data(), bins, lo, hi);
  h.visual_counts = histogram_counts(fv.data(), bins, lo, hi);
  return h;
}

QuartileStats quartiles(std::vector<double> values) {
  QuartileStats q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  // linear interpolation between closest ranks
  auto at = [&](double p) {
    const double pos = p * double(values.size() - 1);
    const std::size_t i = std::size_t(pos);
    const double frac = pos - double(i);
    if (i + 1 >= values.size()) return values.back();
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
  };
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  return q;
}

SeparationReport separation_report(const ModelParams<float>& params,
                                   const std::vector<VideoRecord>& videos) {
  auto value_mean_std = [](std::span<const float> x) {
    double m = 0;
    for (float v : x) m += v;
    m /= double(x.size());
    double ss = 0;
    for (float v : x) ss += (double(v) - m) * (double(v) - m);
    return std::pair{m, std::sqrt(ss / double(x.size()))};
  };

  std::vector<double> real_gap, fake_gap, real_std, fake_std;
  for (const auto& v : videos) {
    for (const auto& s : v.subsequences) {
      Tensor<float> fa = audio_forward(params, s.audio);
      Tensor<float> fv = visual_forward(params, s.frames);
      auto [ma, sa] = value_mean_std(fa.data());
      auto [mv, sv] = value_mean_std(fv.data());
      const double gap = std::abs(ma - mv);
      const double stdsum = sa + sv;
      if (s.label.is_fake()) {
        fake_gap.push_back(gap);
        fake_std.push_back(stdsum);
      } else {
        real_gap.push_back(gap);
        real_std.push_back(stdsum);
      }
    }
  }
  SeparationReport r;
  r.real_gap = quartiles(std::move(real_gap));
  r.fake_gap = quartiles(std::move(fake_gap));
  r.real_stdsum = quartiles(std::move(real_std));
  r.fake_stdsum = quartiles(std::move(fake_std));
  return r;
}

}  // namespace sadd
