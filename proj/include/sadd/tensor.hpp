#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sadd/errors.hpp"

namespace sadd {

// Dense row-major tensors with reverse-mode autodiff.
//
// Tensor<S> is a cheap handle: copies alias the same storage and the same
// graph node. Primitives are free functions. Whenever an input of a primitive
// requires gradients, the output node records its parents and a backprop
// closure; backward() replays the recorded nodes in reverse execution order
// and accumulates gradients into requires_grad leaves.
//
// The scalar type doubles as the precision switch: float is the working
// precision, double exists for gradient-check verification.

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " x " : "") << s[i];
  os << "]";
  return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) {
    if (e != 0 && n > SIZE_MAX / e)
      throw ShapeError("tensor extent product overflows: " + shape_str(s));
    n *= e;
  }
  return n;
}

namespace detail {

inline std::uint64_t next_seq() {
  thread_local std::uint64_t counter = 0;
  return ++counter;
}

template <typename S>
struct TensorImpl {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // empty until backward touches this node
  bool requires_grad = false;
  bool backward_done = false;  // set on a node that served as backward() root
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Propagates this node's grad into its parents. Receives *this so the
  // closure does not have to capture the node it lives on.
  std::function<void(TensorImpl&)> backprop;

  bool is_leaf() const { return !backprop; }

  S* grad_buf() {
    if (grad.empty()) grad.assign(value.size(), S(0));
    return grad.data();
  }
};

template <typename S>
void add_into_grad(const std::shared_ptr<TensorImpl<S>>& t, const S* g,
                   std::size_t n, S scale = S(1)) {
  if (!t->requires_grad) return;
  S* dst = t->grad_buf();
  for (std::size_t i = 0; i < n; ++i) dst[i] += scale * g[i];
}

}  // namespace detail

template <typename S>
class Tensor {
 public:
  using Impl = detail::TensorImpl<S>;

  Tensor() = default;

  explicit Tensor(Shape shape) {
    const std::size_t n = shape_numel(shape);
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->value.assign(n, S(0));
    impl_->seq = detail::next_seq();
  }

  Tensor(Shape shape, std::vector<S> data) {
    const std::size_t n = shape_numel(shape);
    if (n != data.size())
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->value = std::move(data);
    impl_->seq = detail::next_seq();
  }

  static Tensor scalar(S v) { return Tensor(Shape{1}, std::vector<S>{v}); }

  static Tensor full(Shape shape, S v) {
    Tensor t(std::move(shape));
    std::fill(t.impl_->value.begin(), t.impl_->value.end(), v);
    return t;
  }

  bool valid() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->value.size(); }

  std::span<const S> data() const { return impl_->value; }
  std::span<S> data_mut() { return impl_->value; }

  S item() const {
    if (numel() != 1)
      throw ShapeError("item(): tensor is not scalar, shape " +
                       shape_str(shape()));
    return impl_->value[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    return *this;
  }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const S> grad() const {
    if (impl_->grad.empty())
      throw GraphError("grad(): no gradient present on this tensor");
    return impl_->grad;
  }
  void zero_grad() { impl_->grad.clear(); }

  // Deep copy as a fresh leaf (no graph linkage, no grad).
  Tensor clone() const {
    Tensor t(impl_->shape, impl_->value);
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
  }

  // Deep copy that never records gradients; used for read-only evaluation.
  Tensor detached() const {
    return Tensor(impl_->shape, impl_->value);
  }

  template <typename T2>
  Tensor<T2> cast() const {
    std::vector<T2> v(impl_->value.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = T2(impl_->value[i]);
    return Tensor<T2>(impl_->shape, std::move(v));
  }

  const std::shared_ptr<Impl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  template <typename T>
  friend Tensor<T> make_node(Shape shape, std::vector<T> value,
                             std::vector<std::shared_ptr<detail::TensorImpl<T>>> parents,
                             std::function<void(detail::TensorImpl<T>&)> backprop);

  std::shared_ptr<Impl> impl_;
};

template <typename S>
Tensor<S> make_node(Shape shape, std::vector<S> value,
                    std::vector<std::shared_ptr<detail::TensorImpl<S>>> parents,
                    std::function<void(detail::TensorImpl<S>&)> backprop) {
  Tensor<S> out(std::make_shared<detail::TensorImpl<S>>());
  out.impl_->shape = std::move(shape);
  out.impl_->value = std::move(value);
  out.impl_->seq = detail::next_seq();
  bool needs = false;
  for (const auto& p : parents)
    if (p->requires_grad) needs = true;
  if (needs) {
    out.impl_->requires_grad = true;
    out.impl_->parents = std::move(parents);
    out.impl_->backprop = std::move(backprop);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GradTape: the ordered record of executed primitives reachable from a root,
// in reverse execution order. backward() builds one and replays it.

template <typename S>
class GradTape {
 public:
  static GradTape record(const Tensor<S>& root) {
    GradTape tape;
    tape.root_ = root.impl();
    std::unordered_set<detail::TensorImpl<S>*> seen;
    std::vector<std::shared_ptr<detail::TensorImpl<S>>> stack{tape.root_};
    seen.insert(tape.root_.get());
    while (!stack.empty()) {
      auto node = std::move(stack.back());
      stack.pop_back();
      tape.nodes_.push_back(node);
      for (const auto& p : node->parents) {
        if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p);
      }
    }
    std::sort(tape.nodes_.begin(), tape.nodes_.end(),
              [](const auto& a, const auto& b) { return a->seq > b->seq; });
    return tape;
  }

  // Seeds the root gradient with 1 and visits each recorded primitive exactly
  // once. Intermediate node grads are scratch (reset per replay); leaf grads
  // accumulate across replays.
  void replay_backward() {
    for (const auto& n : nodes_) {
      if (!n->is_leaf()) n->grad.assign(n->value.size(), S(0));
    }
    root_->grad_buf()[0] = S(1);
    for (const auto& n : nodes_) {
      if (!n->is_leaf()) n->backprop(*n);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::shared_ptr<detail::TensorImpl<S>>> nodes_;
  std::shared_ptr<detail::TensorImpl<S>> root_;
};

template <typename S>
void backward(const Tensor<S>& loss) {
  if (loss.numel() != 1)
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(loss.shape()));
  const auto& impl = loss.impl();
  if (impl->is_leaf())
    throw GraphError(
        "backward: tensor is detached (not produced by recorded primitives)");
  if (impl->backward_done)
    throw GraphError("backward: already called on this loss; rebuild the graph");
  impl->backward_done = true;
  GradTape<S>::record(loss).replay_backward();
}

// ---------------------------------------------------------------------------
// Elementwise and reduction primitives.

namespace detail {

template <typename S>
void check_same_shape(const char* op, const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  detail::check_same_shape("add", a, b);
  std::vector<S> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + b.data()[i];
  auto pa = a.impl(), pb = b.impl();
  return make_node<S>(a.shape(), std::move(v), {pa, pb},
                      [pa, pb](detail::TensorImpl<S>& out) {
                        detail::add_into_grad(pa, out.grad.data(), out.grad.size());
                        detail::add_into_grad(pb, out.grad.data(), out.grad.size());
                      });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  detail::check_same_shape("sub", a, b);
  std::vector<S> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] - b.data()[i];
  auto pa = a.impl(), pb = b.impl();
  return make_node<S>(a.shape(), std::move(v), {pa, pb},
                      [pa, pb](detail::TensorImpl<S>& out) {
                        detail::add_into_grad(pa, out.grad.data(), out.grad.size());
                        detail::add_into_grad(pb, out.grad.data(), out.grad.size(), S(-1));
                      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<S> v(a.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * b.data()[i];
  auto pa = a.impl(), pb = b.impl();
  return make_node<S>(a.shape(), std::move(v), {pa, pb},
                      [pa, pb](detail::TensorImpl<S>& out) {
                        const std::size_t n = out.grad.size();
                        if (pa->requires_grad) {
                          S* ga = pa->grad_buf();
                          for (std::size_t i = 0; i < n; ++i)
                            ga[i] += out.grad[i] * pb->value[i];
                        }
                        if (pb->requires_grad) {
                          S* gb = pb->grad_buf();
                          for (std::size_t i = 0; i < n; ++i)
                            gb[i] += out.grad[i] * pa->value[i];
                        }
                      });
}

// y = scale * x + shift, elementwise with scalar constants.
template <typename S>
Tensor<S> affine(const Tensor<S>& x, S scale, S shift) {
  std::vector<S> v(x.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * x.data()[i] + shift;
  auto px = x.impl();
  return make_node<S>(x.shape(), std::move(v), {px},
                      [px, scale](detail::TensorImpl<S>& out) {
                        detail::add_into_grad(px, out.grad.data(), out.grad.size(), scale);
                      });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  std::vector<S> v(x.numel());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = x.data()[i] > S(0) ? x.data()[i] : S(0);
  auto px = x.impl();
  return make_node<S>(x.shape(), std::move(v), {px},
                      [px](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        S* g = px->grad_buf();
                        // subgradient at 0 is 0
                        for (std::size_t i = 0; i < out.grad.size(); ++i)
                          if (px->value[i] > S(0)) g[i] += out.grad[i];
                      });
}

template <typename S>
Tensor<S> exp(const Tensor<S>& x) {
  std::vector<S> v(x.numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(x.data()[i]);
  auto px = x.impl();
  return make_node<S>(x.shape(), std::move(v), {px},
                      [px](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        S* g = px->grad_buf();
                        for (std::size_t i = 0; i < out.grad.size(); ++i)
                          g[i] += out.grad[i] * out.value[i];
                      });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  S acc(0);
  for (S v : x.data()) acc += v;
  auto px = x.impl();
  return make_node<S>(Shape{1}, std::vector<S>{acc}, {px},
                      [px](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        S* g = px->grad_buf();
                        const S go = out.grad[0];
                        for (std::size_t i = 0; i < px->value.size(); ++i) g[i] += go;
                      });
}

template <typename S>
Tensor<S> pick(const Tensor<S>& x, std::size_t index) {
  if (index >= x.numel())
    throw ShapeError("pick: index " + std::to_string(index) +
                     " out of range for " + std::to_string(x.numel()) +
                     " elements");
  auto px = x.impl();
  return make_node<S>(Shape{1}, std::vector<S>{x.data()[index]}, {px},
                      [px, index](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        px->grad_buf()[index] += out.grad[0];
                      });
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  std::vector<S> v(x.data().begin(), x.data().end());
  auto px = x.impl();
  return make_node<S>(std::move(shape), std::move(v), {px},
                      [px](detail::TensorImpl<S>& out) {
                        detail::add_into_grad(px, out.grad.data(), out.grad.size());
                      });
}

template <typename S>
Tensor<S> flatten(const Tensor<S>& x) {
  return reshape(x, Shape{x.numel()});
}

// Numerically stable log-softmax over a rank-1 tensor.
template <typename S>
Tensor<S> log_softmax(const Tensor<S>& x) {
  if (x.rank() != 1 || x.numel() == 0)
    throw ShapeError("log_softmax: expected non-empty rank-1 tensor, got " +
                     shape_str(x.shape()));
  const std::size_t n = x.numel();
  S mx = x.data()[0];
  for (S v : x.data()) mx = std::max(mx, v);
  S lse(0);
  for (S v : x.data()) lse += std::exp(v - mx);
  lse = std::log(lse) + mx;
  std::vector<S> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = x.data()[i] - lse;
  auto px = x.impl();
  return make_node<S>(x.shape(), std::move(v), {px},
                      [px](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        S gsum(0);
                        for (S g : out.grad) gsum += g;
                        S* g = px->grad_buf();
                        for (std::size_t i = 0; i < out.grad.size(); ++i)
                          g[i] += out.grad[i] - std::exp(out.value[i]) * gsum;
                      });
}

// Population mean over all elements.
template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  if (x.numel() == 0)
    throw ShapeError("mean: empty tensor " + shape_str(x.shape()));
  S acc(0);
  for (S v : x.data()) acc += v;
  const S n = S(x.numel());
  auto px = x.impl();
  return make_node<S>(Shape{1}, std::vector<S>{acc / n}, {px},
                      [px, n](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        S* g = px->grad_buf();
                        const S go = out.grad[0] / n;
                        for (std::size_t i = 0; i < px->value.size(); ++i) g[i] += go;
                      });
}

// Population standard deviation (divide by N). The backward pass is defined
// as zero at sigma == 0.
template <typename S>
Tensor<S> std_pop(const Tensor<S>& x) {
  if (x.numel() == 0)
    throw ShapeError("std_pop: empty tensor " + shape_str(x.shape()));
  const std::size_t n = x.numel();
  S m(0);
  for (S v : x.data()) m += v;
  m /= S(n);
  S ss(0);
  for (S v : x.data()) ss += (v - m) * (v - m);
  const S sigma = std::sqrt(ss / S(n));
  auto px = x.impl();
  return make_node<S>(Shape{1}, std::vector<S>{sigma}, {px},
                      [px, m](detail::TensorImpl<S>& out) {
                        if (!px->requires_grad) return;
                        px->grad_buf();
                        const S sigma = out.value[0];
                        if (sigma == S(0)) return;
                        const S go = out.grad[0];
                        const S n = S(px->value.size());
                        S* g = px->grad_buf();
                        for (std::size_t i = 0; i < px->value.size(); ++i)
                          g[i] += go * (px->value[i] - m) / (n * sigma);
                      });
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> mean_std(const Tensor<S>& x) {
  return {mean(x), std_pop(x)};
}

// Sum of squared differences.
template <typename S>
Tensor<S> l2_sq_distance(const Tensor<S>& a, const Tensor<S>& b) {
  detail::check_same_shape("l2_sq_distance", a, b);
  S acc(0);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const S d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  auto pa = a.impl(), pb = b.impl();
  return make_node<S>(Shape{1}, std::vector<S>{acc}, {pa, pb},
                      [pa, pb](detail::TensorImpl<S>& out) {
                        const S go = out.grad[0];
                        const std::size_t n = pa->value.size();
                        S* ga = pa->requires_grad ? pa->grad_buf() : nullptr;
                        S* gb = pb->requires_grad ? pb->grad_buf() : nullptr;
                        for (std::size_t i = 0; i < n; ++i) {
                          const S d = S(2) * (pa->value[i] - pb->value[i]) * go;
                          if (ga) ga[i] += d;
                          if (gb) gb[i] -= d;
                        }
                      });
}

// Adds bias[c] across dimension `dim` of x.
template <typename S>
Tensor<S> channel_bias_add(const Tensor<S>& x, const Tensor<S>& bias,
                           std::size_t dim) {
  if (bias.rank() != 1 || dim >= x.rank() || bias.numel() != x.shape()[dim])
    throw ShapeError("channel_bias_add: bias " + shape_str(bias.shape()) +
                     " does not fit dim " + std::to_string(dim) + " of " +
                     shape_str(x.shape()));
  std::size_t inner = 1;
  for (std::size_t d = dim + 1; d < x.rank(); ++d) inner *= x.shape()[d];
  const std::size_t c = x.shape()[dim];
  const std::size_t outer = x.numel() / (inner * c);
  std::vector<S> v(x.data().begin(), x.data().end());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < c; ++j) {
      const S bj = bias.data()[j];
      S* row = v.data() + (o * c + j) * inner;
      for (std::size_t i = 0; i < inner; ++i) row[i] += bj;
    }
  auto px = x.impl(), pbias = bias.impl();
  return make_node<S>(x.shape(), std::move(v), {px, pbias},
                      [px, pbias, inner, c, outer](detail::TensorImpl<S>& out) {
                        detail::add_into_grad(px, out.grad.data(), out.grad.size());
                        if (!pbias->requires_grad) return;
                        S* gb = pbias->grad_buf();
                        for (std::size_t o = 0; o < outer; ++o)
                          for (std::size_t j = 0; j < c; ++j) {
                            const S* row = out.grad.data() + (o * c + j) * inner;
                            S acc(0);
                            for (std::size_t i = 0; i < inner; ++i) acc += row[i];
                            gb[j] += acc;
                          }
                      });
}

// ---------------------------------------------------------------------------
// Linear layer: W [M x N] * x [N] + b [M].

template <typename S>
Tensor<S> dense(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1 ||
      w.shape()[1] != x.numel() || w.shape()[0] != b.numel())
    throw ShapeError("dense: incompatible shapes x " + shape_str(x.shape()) +
                     ", W " + shape_str(w.shape()) + ", b " +
                     shape_str(b.shape()));
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  const std::size_t m = w.shape()[0], n = w.shape()[1];
  Eigen::Map<const Mat> wm(w.data().data(), m, n);
  Eigen::Map<const Vec> xv(x.data().data(), n);
  Eigen::Map<const Vec> bv(b.data().data(), m);
  Vec y = wm * xv + bv;
  std::vector<S> v(y.data(), y.data() + m);
  auto px = x.impl(), pw = w.impl(), pb = b.impl();
  return make_node<S>(
      Shape{m}, std::move(v), {px, pw, pb},
      [px, pw, pb, m, n](detail::TensorImpl<S>& out) {
        Eigen::Map<const Vec> g(out.grad.data(), m);
        Eigen::Map<const Mat> wm(pw->value.data(), m, n);
        if (px->requires_grad) {
          Eigen::Map<Vec> gx(px->grad_buf(), n);
          gx.noalias() += wm.transpose() * g;
        }
        if (pw->requires_grad) {
          Eigen::Map<const Vec> xv(px->value.data(), n);
          Eigen::Map<Mat> gw(pw->grad_buf(), m, n);
          gw.noalias() += g * xv.transpose();
        }
        if (pb->requires_grad) {
          Eigen::Map<Vec> gb(pb->grad_buf(), m);
          gb += g;
        }
      });
}

// ---------------------------------------------------------------------------
// Valid (unpadded) cross-correlation convolutions, im2col + GEMM.

// input [T x C], kernel [O x C x K], output [T' x O] with
// T' = (T - K) / stride + 1.
template <typename S>
Tensor<S> conv1d(const Tensor<S>& input, const Tensor<S>& kernel,
                 std::size_t stride) {
  if (input.rank() != 2 || kernel.rank() != 3)
    throw ShapeError("conv1d: expected input [T x C] and kernel [O x C x K], got " +
                     shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
  const std::size_t t = input.shape()[0], c = input.shape()[1];
  const std::size_t o = kernel.shape()[0], kc = kernel.shape()[1],
                    k = kernel.shape()[2];
  if (c != kc || t < k || stride < 1)
    throw ShapeError("conv1d: input " + shape_str(input.shape()) +
                     " incompatible with kernel " + shape_str(kernel.shape()) +
                     " at stride " + std::to_string(stride));
  const std::size_t tout = (t - k) / stride + 1;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  auto im2col = [=](const S* x) {
    Mat patches(tout, c * k);
    for (std::size_t ti = 0; ti < tout; ++ti) {
      const std::size_t t0 = ti * stride;
      S* row = patches.data() + ti * c * k;
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t ki = 0; ki < k; ++ki)
          row[ci * k + ki] = x[(t0 + ki) * c + ci];
    }
    return patches;
  };

  Mat patches = im2col(input.data().data());
  Eigen::Map<const Mat> km(kernel.data().data(), o, c * k);
  Mat out = patches * km.transpose();  // [T' x O]
  std::vector<S> v(out.data(), out.data() + tout * o);

  auto pin = input.impl(), pker = kernel.impl();
  return make_node<S>(
      Shape{tout, o}, std::move(v), {pin, pker},
      [pin, pker, im2col, tout, o, c, k, stride](detail::TensorImpl<S>& out) {
        Eigen::Map<const Mat> g(out.grad.data(), tout, o);
        Eigen::Map<const Mat> km(pker->value.data(), o, c * k);
        if (pker->requires_grad) {
          Mat patches = im2col(pin->value.data());
          Eigen::Map<Mat> gk(pker->grad_buf(), o, c * k);
          gk.noalias() += g.transpose() * patches;
        }
        if (pin->requires_grad) {
          Mat gp = g * km;  // [T' x CK]
          S* gx = pin->grad_buf();
          for (std::size_t ti = 0; ti < tout; ++ti) {
            const std::size_t t0 = ti * stride;
            const S* row = gp.data() + ti * c * k;
            for (std::size_t ci = 0; ci < c; ++ci)
              for (std::size_t ki = 0; ki < k; ++ki)
                gx[(t0 + ki) * c + ci] += row[ci * k + ki];
          }
        }
      });
}

// input [T x C x H x W], kernel [O x C x Kt x Kh x Kw], stride (st, sh, sw),
// output [T' x O x H' x W'].
template <typename S>
Tensor<S> conv3d(const Tensor<S>& input, const Tensor<S>& kernel,
                 std::array<std::size_t, 3> stride) {
  if (input.rank() != 4 || kernel.rank() != 5)
    throw ShapeError(
        "conv3d: expected input [T x C x H x W] and kernel "
        "[O x C x Kt x Kh x Kw], got " +
        shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
  const std::size_t t = input.shape()[0], c = input.shape()[1],
                    h = input.shape()[2], w = input.shape()[3];
  const std::size_t o = kernel.shape()[0], kc = kernel.shape()[1],
                    kt = kernel.shape()[2], kh = kernel.shape()[3],
                    kw = kernel.shape()[4];
  const auto [st, sh, sw] = stride;
  if (c != kc || t < kt || h < kh || w < kw || st < 1 || sh < 1 || sw < 1)
    throw ShapeError("conv3d: input " + shape_str(input.shape()) +
                     " incompatible with kernel " + shape_str(kernel.shape()));
  const std::size_t tout = (t - kt) / st + 1;
  const std::size_t hout = (h - kh) / sh + 1;
  const std::size_t wout = (w - kw) / sw + 1;
  const std::size_t rows = tout * hout * wout;
  const std::size_t cols = c * kt * kh * kw;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  auto im2col = [=](const S* x) {
    Mat patches(rows, cols);
    std::size_t r = 0;
    for (std::size_t ti = 0; ti < tout; ++ti)
      for (std::size_t hi = 0; hi < hout; ++hi)
        for (std::size_t wi = 0; wi < wout; ++wi, ++r) {
          S* row = patches.data() + r * cols;
          const std::size_t t0 = ti * st, h0 = hi * sh, w0 = wi * sw;
          std::size_t col = 0;
          for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t a = 0; a < kt; ++a)
              for (std::size_t b = 0; b < kh; ++b) {
                const S* src = x + (((t0 + a) * c + ci) * h + (h0 + b)) * w + w0;
                for (std::size_t d = 0; d < kw; ++d) row[col++] = src[d];
              }
        }
    return patches;
  };

  Mat patches = im2col(input.data().data());
  Eigen::Map<const Mat> km(kernel.data().data(), o, cols);
  Mat prod = patches * km.transpose();  // [rows x O]

  // permute rows x O -> [T' x O x H' x W']
  std::vector<S> v(rows * o);
  {
    std::size_t r = 0;
    for (std::size_t ti = 0; ti < tout; ++ti)
      for (std::size_t hi = 0; hi < hout; ++hi)
        for (std::size_t wi = 0; wi < wout; ++wi, ++r) {
          const S* src = prod.data() + r * o;
          for (std::size_t oi = 0; oi < o; ++oi)
            v[((ti * o + oi) * hout + hi) * wout + wi] = src[oi];
        }
  }

  auto pin = input.impl(), pker = kernel.impl();
  return make_node<S>(
      Shape{tout, o, hout, wout}, std::move(v), {pin, pker},
      [pin, pker, im2col, tout, hout, wout, o, c, h, w, kt, kh, kw, st, sh, sw,
       rows, cols](detail::TensorImpl<S>& out) {
        Mat g(rows, o);
        {
          std::size_t r = 0;
          for (std::size_t ti = 0; ti < tout; ++ti)
            for (std::size_t hi = 0; hi < hout; ++hi)
              for (std::size_t wi = 0; wi < wout; ++wi, ++r) {
                S* dst = g.data() + r * o;
                for (std::size_t oi = 0; oi < o; ++oi)
                  dst[oi] = out.grad[((ti * o + oi) * hout + hi) * wout + wi];
              }
        }
        Eigen::Map<const Mat> km(pker->value.data(), o, cols);
        if (pker->requires_grad) {
          Mat patches = im2col(pin->value.data());
          Eigen::Map<Mat> gk(pker->grad_buf(), o, cols);
          gk.noalias() += g.transpose() * patches;
        }
        if (pin->requires_grad) {
          Mat gp = g * km;  // [rows x cols]
          S* gx = pin->grad_buf();
          std::size_t r = 0;
          for (std::size_t ti = 0; ti < tout; ++ti)
            for (std::size_t hi = 0; hi < hout; ++hi)
              for (std::size_t wi = 0; wi < wout; ++wi, ++r) {
                const S* row = gp.data() + r * cols;
                const std::size_t t0 = ti * st, h0 = hi * sh, w0 = wi * sw;
                std::size_t col = 0;
                for (std::size_t ci = 0; ci < c; ++ci)
                  for (std::size_t a = 0; a < kt; ++a)
                    for (std::size_t b = 0; b < kh; ++b) {
                      S* dst = gx + (((t0 + a) * c + ci) * h + (h0 + b)) * w + w0;
                      for (std::size_t d = 0; d < kw; ++d) dst[d] += row[col++];
                    }
              }
        }
      });
}

// ---------------------------------------------------------------------------
// N-dimensional valid max pooling. window/stride give one extent per input
// dimension. Backward routes each output's gradient to the first occurrence
// of the window maximum (row-major scan order).

template <typename S>
Tensor<S> maxpool(const Tensor<S>& input, const Shape& window,
                  const Shape& stride) {
  const std::size_t r = input.rank();
  if (window.size() != r || stride.size() != r)
    throw ShapeError("maxpool: window/stride rank must match input rank " +
                     std::to_string(r));
  Shape out_shape(r);
  for (std::size_t d = 0; d < r; ++d) {
    if (window[d] < 1 || stride[d] < 1 || window[d] > input.shape()[d])
      throw ShapeError("maxpool: window " + shape_str(window) +
                       " does not fit input " + shape_str(input.shape()));
    out_shape[d] = (input.shape()[d] - window[d]) / stride[d] + 1;
  }
  const std::size_t n_out = shape_numel(out_shape);

  // row-major strides of the input
  std::vector<std::size_t> istr(r, 1);
  for (std::size_t d = r; d-- > 1;) istr[d - 1] = istr[d] * input.shape()[d];

  const std::size_t wn = shape_numel(window);
  std::vector<S> v(n_out);
  std::vector<std::size_t> argmax(n_out);
  std::vector<std::size_t> oidx(r, 0), widx(r, 0);
  for (std::size_t i = 0; i < n_out; ++i) {
    std::size_t base = 0;
    for (std::size_t d = 0; d < r; ++d) base += oidx[d] * stride[d] * istr[d];
    std::fill(widx.begin(), widx.end(), 0);
    S best = input.data()[base];
    std::size_t best_at = base;
    std::size_t off = 0;
    for (std::size_t j = 0; j < wn; ++j) {
      const std::size_t at = base + off;
      if (input.data()[at] > best) {
        best = input.data()[at];
        best_at = at;
      }
      // advance window odometer
      for (std::size_t d = r; d-- > 0;) {
        ++widx[d];
        off += istr[d];
        if (widx[d] < window[d]) break;
        off -= widx[d] * istr[d];
        widx[d] = 0;
      }
    }
    v[i] = best;
    argmax[i] = best_at;
    for (std::size_t d = r; d-- > 0;) {
      if (++oidx[d] < out_shape[d]) break;
      oidx[d] = 0;
    }
  }

  auto pin = input.impl();
  return make_node<S>(std::move(out_shape), std::move(v), {pin},
                      [pin, argmax = std::move(argmax)](detail::TensorImpl<S>& out) {
                        if (!pin->requires_grad) return;
                        S* g = pin->grad_buf();
                        for (std::size_t i = 0; i < out.grad.size(); ++i)
                          g[argmax[i]] += out.grad[i];
                      });
}

}  // namespace sadd
