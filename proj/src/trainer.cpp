#include "sadd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "sadd/rng.hpp"

namespace sadd {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (alpha < 0) throw ConfigError("alpha must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
}

AdamState AdamState::for_params(const ModelParams<float>& params) {
  AdamState s;
  s.m.reserve(params.tensors.size());
  s.v.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    s.m.emplace_back(t.numel(), 0.0f);
    s.v.emplace_back(t.numel(), 0.0f);
  }
  return s;
}

void adam_step(ModelParams<float>& params, AdamState& state, double lr,
               double weight_decay) {
  if (state.m.size() != params.tensors.size())
    throw DataError("adam_step: state does not match the parameter list");
  for (std::size_t i = 0; i < params.tensors.size(); ++i)
    if (!params.tensors[i].has_grad())
      throw DataError("adam_step: missing gradient for parameter tensor " +
                      std::to_string(i));

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto value = params.tensors[i].data_mut();
    const auto grad = params.tensors[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = double(grad[j]) + weight_decay * double(value[j]);
      m[j] = float(state.beta1 * m[j] + (1.0 - state.beta1) * g);
      v[j] = float(state.beta2 * v[j] + (1.0 - state.beta2) * g * g);
      const double m_hat = double(m[j]) / bc1;
      const double v_hat = double(v[j]) / bc2;
      value[j] = float(double(value[j]) - lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Xoshiro256 rng = Xoshiro256::stream(seed, 0x5add0002ull, epoch);
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

namespace {

const char* term_name(int i) {
  switch (i) {
    case 0: return "L_a";
    case 1: return "L_v";
    case 2: return "L_c";
    case 3: return "L_s";
    default: return "total";
  }
}

}  // namespace

TrainResult train(const std::vector<AVSample>& samples, const TrainConfig& cfg,
                  std::ostream* epoch_csv) {
  cfg.validate();
  if (samples.empty()) throw DataError("train: empty dataset");

  ModelParams<float> params = init_params<float>(cfg.arch, cfg.seed);
  AdamState state = AdamState::for_params(params);
  const float alpha = float(cfg.alpha);

  TrainResult result;
  double best_total = std::numeric_limits<double>::infinity();
  if (epoch_csv) write_epoch_csv_header(*epoch_csv);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = epoch_permutation(samples.size(), cfg.seed, epoch);

    double sum_a = 0, sum_v = 0, sum_c = 0, sum_s = 0, sum_total = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor<float>> totals;
      totals.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const AVSample& s = samples[order[k]];
        Tensor<float> fa = audio_forward(params, s.audio);
        Tensor<float> fv = visual_forward(params, s.frames);
        Tensor<float> la = classify(params, Branch::Audio, fa);
        Tensor<float> lv = classify(params, Branch::Visual, fv);
        LossBreakdown<float> bd =
            total_loss(la, lv, fa, fv, s.label, alpha, cfg.variant);
        const double terms[5] = {bd.audio_ce, bd.visual_ce, bd.contrastive,
                                 bd.stats, bd.total};
        for (int i = 0; i < 5; ++i)
          if (!std::isfinite(terms[i]))
            throw NumericError("non-finite " + std::string(term_name(i)) +
                               " in epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch_index) + " (sample '" +
                               s.video_id + "')");
        sum_a += bd.audio_ce;
        sum_v += bd.visual_ce;
        sum_c += bd.contrastive;
        sum_s += bd.stats;
        sum_total += bd.total;
        totals.push_back(bd.total_tensor);
      }
      Tensor<float> batch_total = totals[0];
      for (std::size_t i = 1; i < totals.size(); ++i)
        batch_total = add(batch_total, totals[i]);
      batch_total = affine(batch_total, 1.0f / float(totals.size()), 0.0f);
      backward(batch_total);
      adam_step(params, state, cfg.learning_rate, cfg.weight_decay);
      params.zero_grads();
      ++result.total_steps;
    }

    const double n = double(samples.size());
    EpochLog log;
    log.epoch = epoch;
    log.audio_ce = sum_a / n;
    log.visual_ce = sum_v / n;
    log.contrastive = sum_c / n;
    log.stats = sum_s / n;
    log.total = sum_total / n;
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.logs.push_back(log);
    if (epoch_csv) write_epoch_csv_row(*epoch_csv, log);

    if (log.total < best_total) {
      best_total = log.total;
      result.best_epoch = epoch;
      result.best_params = params.clone();
    }
  }
  return result;
}

void write_epoch_csv_header(std::ostream& os) {
  os << "epoch,L_a,L_v,L_c,L_s,total,seconds\n";
}

void write_epoch_csv_row(std::ostream& os, const EpochLog& log) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f\n",
                log.epoch, log.audio_ce, log.visual_ce, log.contrastive,
                log.stats, log.total, log.seconds);
  os << buf;
}

}  // namespace sadd
