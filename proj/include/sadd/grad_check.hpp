#pragma once

#include <cmath>

#include "sadd/tensor.hpp"

namespace sadd {

// Compares the analytic gradient of a scalar-valued tensor function against
// central finite differences, coordinate by coordinate, and returns the
// maximum of |analytic - numeric| / max(1, |analytic|, |numeric|).
//
// Only meaningful where fn is smooth: keep the evaluation point at least an
// order of magnitude of `step` away from relu kinks, maxpool ties and
// std == 0, or the numeric side is garbage.
template <typename S, typename Fn>
S grad_check(Fn&& fn, const Tensor<S>& point, S step) {
  Tensor<S> p = point.detached();
  p.set_requires_grad(true);
  Tensor<S> loss = fn(p);
  if (loss.numel() != 1)
    throw ShapeError("grad_check: fn must be scalar-valued, got shape " +
                     shape_str(loss.shape()));
  backward(loss);
  std::vector<S> analytic(p.numel(), S(0));
  if (p.has_grad())
    std::copy(p.grad().begin(), p.grad().end(), analytic.begin());

  Tensor<S> q = point.detached();
  S max_err(0);
  for (std::size_t i = 0; i < q.numel(); ++i) {
    const S orig = q.data()[i];
    q.data_mut()[i] = orig + step;
    const S f_plus = fn(q).item();
    q.data_mut()[i] = orig - step;
    const S f_minus = fn(q).item();
    q.data_mut()[i] = orig;
    const S numeric = (f_plus - f_minus) / (S(2) * step);
    const S denom =
        std::max(S(1), std::max(std::abs(analytic[i]), std::abs(numeric)));
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

}  // namespace sadd
