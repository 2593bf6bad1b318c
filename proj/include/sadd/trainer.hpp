#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sadd/data.hpp"
#include "sadd/losses.hpp"
#include "sadd/model.hpp"

namespace sadd {

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  double weight_decay = 1e-5;
  double alpha = 1.0;
  LossVariant variant = LossVariant::Stats;
  std::uint64_t seed = 42;
  ArchConfig arch = ArchConfig::shallow_default();

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double audio_ce = 0;
  double visual_ce = 0;
  double contrastive = 0;
  double stats = 0;
  double total = 0;
  double seconds = 0;
};

// Adam moment accumulators, one pair per parameter tensor.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  static AdamState for_params(const ModelParams<float>& params);
};

// One Adam update with bias correction. Weight decay enters as an L2 term
// added to the gradient (coupled, not decoupled). Every parameter must carry
// a gradient.
void adam_step(ModelParams<float>& params, AdamState& state, double lr,
               double weight_decay);

struct TrainResult {
  ModelParams<float> best_params;  // snapshot at the end of the best epoch
  std::size_t best_epoch = 0;      // 1-based; earliest epoch wins ties
  std::size_t total_steps = 0;     // optimizer steps == batches consumed
  std::vector<EpochLog> logs;
};

// Mini-batch training over seeded-shuffled epochs. The checkpoint returned is
// the one with the lowest epoch-mean training total. When epoch_csv is given,
// one CSV row per epoch is streamed to it (header written first). Aborts with
// NumericError naming the batch and term if any loss turns non-finite.
TrainResult train(const std::vector<AVSample>& samples, const TrainConfig& cfg,
                  std::ostream* epoch_csv = nullptr);

void write_epoch_csv_header(std::ostream& os);
void write_epoch_csv_row(std::ostream& os, const EpochLog& log);

// Deterministic per-epoch shuffle order (Fisher-Yates on a stream derived
// from seed and epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::size_t epoch);

}  // namespace sadd
