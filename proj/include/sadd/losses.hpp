#pragma once

#include <string>

#include "sadd/errors.hpp"
#include "sadd/tensor.hpp"

namespace sadd {

// Training objectives for the two-branch detector.
//
// Per sample with features f_a, f_v and per-branch logits:
//   total = L_v + L_a + L_c + alpha * L_s
// where L_a / L_v are branch cross-entropies against the (noisy) video-level
// label, L_c is the contrastive feature-distance loss and L_s is the
// statistics-aware term (or its KL variant).

enum class LabelValue { Real, Fake };
enum class FakeProvenance { None, AudioOnly, VisualOnly, Both };

struct Label {
  LabelValue value = LabelValue::Real;
  FakeProvenance provenance = FakeProvenance::None;

  static Label real() { return {LabelValue::Real, FakeProvenance::None}; }
  static Label fake(FakeProvenance p) {
    if (p == FakeProvenance::None)
      throw DataError("fake label needs a fake provenance");
    return {LabelValue::Fake, p};
  }

  bool is_fake() const { return value == LabelValue::Fake; }
  bool operator==(const Label&) const = default;
};

std::string label_value_str(LabelValue v);
std::string provenance_str(FakeProvenance p);
LabelValue label_value_from_str(const std::string& s);
FakeProvenance provenance_from_str(const std::string& s);

enum class LossVariant { Stats, Kl, None };

std::string variant_str(LossVariant v);
LossVariant variant_from_str(const std::string& s);

template <typename S>
struct LossBreakdown {
  S audio_ce = 0;    // L_a
  S visual_ce = 0;   // L_v
  S contrastive = 0; // L_c
  S stats = 0;       // L_s (0 when the variant is None)
  S total = 0;
  Tensor<S> total_tensor;  // differentiable total for backward()
};

// -log p(label), logits index 0 = real, 1 = fake.
template <typename S>
Tensor<S> cross_entropy(const Tensor<S>& logits, const Label& label) {
  if (logits.rank() != 1 || logits.numel() != 2)
    throw ShapeError("cross_entropy: expected 2 logits, got " +
                     shape_str(logits.shape()));
  const std::size_t idx = label.is_fake() ? 1 : 0;
  return affine(pick(log_softmax(logits), idx), S(-1), S(0));
}

// d = squared L2 distance of the feature vectors.
// real: d^2, fake: max(m - d, 0)^2.
template <typename S>
Tensor<S> contrastive_feature_loss(const Tensor<S>& f_a, const Tensor<S>& f_v,
                                   const Label& label, S margin = S(0.99)) {
  Tensor<S> d = l2_sq_distance(f_v, f_a);
  if (!label.is_fake()) return mul(d, d);
  Tensor<S> hinge = relu(affine(d, S(-1), margin));
  return mul(hinge, hinge);
}

// Contrastive loss over per-vector first-order statistics with an adaptive
// margin. With mu/sigma the mean and population std of each feature vector
// and d2 = (mu_a - mu_v)^2:
//   real: d2, fake: max((sigma_v + sigma_a) - d2, 0).
// The fake branch hinges the margin against the squared mean gap and is not
// itself squared; the real/fake asymmetry is intentional.
template <typename S>
Tensor<S> statistics_aware_loss(const Tensor<S>& f_a, const Tensor<S>& f_v,
                                const Label& label) {
  detail::check_same_shape("statistics_aware_loss", f_a, f_v);
  auto [mu_a, sigma_a] = mean_std(f_a);
  auto [mu_v, sigma_v] = mean_std(f_v);
  Tensor<S> diff = sub(mu_a, mu_v);
  Tensor<S> d2 = mul(diff, diff);
  if (!label.is_fake()) return d2;
  return relu(sub(add(sigma_v, sigma_a), d2));
}

// KL(P_a || P_v) with P = softmax(f), computed through log_softmax.
template <typename S>
Tensor<S> kl_variant_loss(const Tensor<S>& f_a, const Tensor<S>& f_v) {
  detail::check_same_shape("kl_variant_loss", f_a, f_v);
  Tensor<S> la = log_softmax(f_a);
  Tensor<S> lv = log_softmax(f_v);
  return sum(mul(exp(la), sub(la, lv)));
}

template <typename S>
LossBreakdown<S> total_loss(const Tensor<S>& logits_a, const Tensor<S>& logits_v,
                            const Tensor<S>& f_a, const Tensor<S>& f_v,
                            const Label& label, S alpha, LossVariant variant) {
  if (alpha < S(0)) throw ConfigError("total_loss: alpha must be >= 0");
  LossBreakdown<S> out;
  Tensor<S> ce_a = cross_entropy(logits_a, label);
  Tensor<S> ce_v = cross_entropy(logits_v, label);
  Tensor<S> lc = contrastive_feature_loss(f_a, f_v, label);
  Tensor<S> total = add(add(ce_v, ce_a), lc);
  if (variant != LossVariant::None) {
    Tensor<S> ls = variant == LossVariant::Stats
                       ? statistics_aware_loss(f_a, f_v, label)
                       : kl_variant_loss(f_a, f_v);
    out.stats = ls.item();
    if (alpha != S(0)) total = add(total, affine(ls, alpha, S(0)));
  }
  out.audio_ce = ce_a.item();
  out.visual_ce = ce_v.item();
  out.contrastive = lc.item();
  out.total = total.item();
  out.total_tensor = total;
  return out;
}

}  // namespace sadd
