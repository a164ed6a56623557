#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lkad {

using real = double;
using Shape = std::vector<int>;

inline long shape_numel(const Shape& s) {
  long n = 1;
  for (int e : s) {
    if (e < 0) throw std::invalid_argument("negative extent in shape");
    n *= e;
  }
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Row-major flat index of a multi-index, and its inverse.
inline long flat_index(const Shape& shape, const std::vector<int>& idx) {
  long k = 0;
  for (size_t d = 0; d < shape.size(); ++d) k = k * shape[d] + idx[d];
  return k;
}

inline std::vector<int> unflat_index(const Shape& shape, long k) {
  std::vector<int> idx(shape.size());
  for (size_t d = shape.size(); d-- > 0;) {
    idx[d] = static_cast<int>(k % shape[d]);
    k /= shape[d];
  }
  return idx;
}

/// Dense row-major N-D array with an optional gradient buffer.
/// Copying a Tensor copies the handle; both copies see the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t;
    t.n_ = std::make_shared<Node>();
    t.n_->shape = std::move(shape);
    t.n_->data.assign(shape_numel(t.n_->shape), 0.0);
    t.n_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(Shape shape, real value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.n_->data.begin(), t.n_->data.end(), value);
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<real> data,
                          bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<long>(data.size()))
      throw std::invalid_argument("tensor data length does not match shape " +
                                  shape_str(shape));
    Tensor t;
    t.n_ = std::make_shared<Node>();
    t.n_->shape = std::move(shape);
    t.n_->data = std::move(data);
    t.n_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(real v) { return from_data({1}, {v}); }

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  int extent(int d) const { return n_->shape[d]; }
  long numel() const { return static_cast<long>(n_->data.size()); }

  real* data() { return n_->data.data(); }
  const real* data() const { return n_->data.data(); }
  std::vector<real>& vec() { return n_->data; }
  const std::vector<real>& vec() const { return n_->data; }

  real value() const {
    if (numel() != 1) throw std::invalid_argument("value() on non-scalar tensor");
    return n_->data[0];
  }

  real& at(std::initializer_list<int> idx) {
    return n_->data[flat_index(n_->shape, std::vector<int>(idx))];
  }
  real at(std::initializer_list<int> idx) const {
    return n_->data[flat_index(n_->shape, std::vector<int>(idx))];
  }

  bool requires_grad() const { return n_ && n_->requires_grad; }
  void set_requires_grad(bool b) { n_->requires_grad = b; }

  bool has_grad() const { return n_ && !n_->grad.empty(); }

  /// Gradient buffer, allocated zero-filled on first use.
  std::vector<real>& grad() {
    if (n_->grad.empty()) n_->grad.assign(n_->data.size(), 0.0);
    return n_->grad;
  }
  const std::vector<real>& grad() const { return n_->grad; }

  void zero_grad() {
    if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0);
  }

  /// Identity of the underlying storage (aliasing test helper).
  const void* node_id() const { return n_.get(); }

  /// Value copy with no grad tracking.
  Tensor detach_copy() const { return from_data(n_->shape, n_->data); }

 private:
  struct Node {
    Shape shape;
    std::vector<real> data;
    bool requires_grad = false;
    std::vector<real> grad;  // empty until touched
  };
  std::shared_ptr<Node> n_;
};

#ifndef NDEBUG
inline void debug_check_finite(const Tensor& t, const char* op) {
  for (real v : t.vec())
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite value produced by ") + op);
}
#else
inline void debug_check_finite(const Tensor&, const char*) {}
#endif

/// Reverse-mode tape. Constructing a Tape makes it the active recorder for
/// the current thread; ops append vector-Jacobian callbacks while one is
/// active. A tape and the tensors it references are confined to one thread.
class Tape {
 public:
  Tape() : prev_(active_ref()) { active_ref() = this; }
  ~Tape() { active_ref() = prev_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() { return active_ref(); }

  void record(Tensor output, std::function<void()> backward_fn) {
    ops_.emplace_back(std::move(output), std::move(backward_fn));
  }

  size_t size() const { return ops_.size(); }

  /// Accumulates d(loss)/d(leaf) into every requires_grad tensor recorded
  /// on this tape; repeated calls without reset accumulate. Each interior
  /// output's gradient is consumed and cleared once its producer has run
  /// (in reverse order every consumer has already contributed by then), so
  /// a replay always starts from clean interior state.
  void backward(Tensor loss) {
    if (loss.numel() != 1)
      throw std::invalid_argument("backward requires a scalar loss");
    loss.grad()[0] += 1.0;
    for (size_t i = ops_.size(); i-- > 0;) {
      ops_[i].second();
      ops_[i].first.zero_grad();
    }
  }

 private:
  static Tape*& active_ref() {
    thread_local Tape* t = nullptr;
    return t;
  }
  Tape* prev_;
  std::vector<std::pair<Tensor, std::function<void()>>> ops_;
};

/// Free-function form matching the recorder-as-argument contract.
inline void backward(Tape& tape, Tensor loss) { tape.backward(std::move(loss)); }

inline bool grad_enabled_for(const Tensor& a) {
  return Tape::active() != nullptr && a.requires_grad();
}

// ---------------------------------------------------------------------------
// Elementwise binary ops. b must have the same shape as a, or a shape equal
// to a trailing suffix of a's shape (broadcast over the leading dimensions);
// a scalar b broadcasts everywhere.

enum class EwKind { add, sub, mul, div };

inline bool suffix_broadcastable(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return false;
  for (size_t i = 0; i < b.size(); ++i)
    if (b[b.size() - 1 - i] != a[a.size() - 1 - i]) return false;
  return true;
}

inline Tensor elementwise(const Tensor& a, const Tensor& b, EwKind kind) {
  const bool bcast = !(a.shape() == b.shape());
  if (bcast && b.numel() != 1 && !suffix_broadcastable(a.shape(), b.shape()))
    throw std::invalid_argument("elementwise: shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  const long n = a.numel(), bn = b.numel();
  Tensor out = Tensor::zeros(a.shape());
  const real* pa = a.data();
  const real* pb = b.data();
  real* po = out.data();
  switch (kind) {
    case EwKind::add:
      for (long i = 0; i < n; ++i) po[i] = pa[i] + pb[i % bn];
      break;
    case EwKind::sub:
      for (long i = 0; i < n; ++i) po[i] = pa[i] - pb[i % bn];
      break;
    case EwKind::mul:
      for (long i = 0; i < n; ++i) po[i] = pa[i] * pb[i % bn];
      break;
    case EwKind::div:
      for (long i = 0; i < n; ++i) po[i] = pa[i] / pb[i % bn];
      break;
  }
  debug_check_finite(out, "elementwise");
  if (Tape* t = Tape::active();
      t && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    t->record(oc, [ac, bc, oc, kind, n, bn]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      const real* pa = ac.data();
      const real* pb = bc.data();
      if (ac.requires_grad()) {
        real* ga = ac.grad().data();
        switch (kind) {
          case EwKind::add:
          case EwKind::sub:
            for (long i = 0; i < n; ++i) ga[i] += g[i];
            break;
          case EwKind::mul:
            for (long i = 0; i < n; ++i) ga[i] += g[i] * pb[i % bn];
            break;
          case EwKind::div:
            for (long i = 0; i < n; ++i) ga[i] += g[i] / pb[i % bn];
            break;
        }
      }
      if (bc.requires_grad()) {
        real* gb = bc.grad().data();
        switch (kind) {
          case EwKind::add:
            for (long i = 0; i < n; ++i) gb[i % bn] += g[i];
            break;
          case EwKind::sub:
            for (long i = 0; i < n; ++i) gb[i % bn] -= g[i];
            break;
          case EwKind::mul:
            for (long i = 0; i < n; ++i) gb[i % bn] += g[i] * pa[i];
            break;
          case EwKind::div:
            for (long i = 0; i < n; ++i) {
              real bi = pb[i % bn];
              gb[i % bn] -= g[i] * pa[i] / (bi * bi);
            }
            break;
        }
      }
    });
  }
  return out;
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwKind::add);
}
inline Tensor operator-(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwKind::sub);
}
inline Tensor operator*(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwKind::mul);
}
inline Tensor operator/(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwKind::div);
}

// ---------------------------------------------------------------------------
// Generic unary op: out[i] = f(x[i]), backward uses df(x[i], out[i]).

template <class F, class DF>
Tensor map_unary(const Tensor& x, F f, DF df, const char* name) {
  Tensor out = Tensor::zeros(x.shape());
  const long n = x.numel();
  const real* px = x.data();
  real* po = out.data();
  for (long i = 0; i < n; ++i) po[i] = f(px[i]);
  debug_check_finite(out, name);
  if (Tape* t = Tape::active(); t && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    t->record(oc, [xc, oc, df, n]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      const real* px = xc.data();
      const real* py = oc.data();
      real* gx = xc.grad().data();
      for (long i = 0; i < n; ++i) gx[i] += g[i] * df(px[i], py[i]);
    });
  }
  return out;
}

/// out = scale * x + shift (elementwise, scalar coefficients).
inline Tensor affine(const Tensor& x, real scale, real shift) {
  return map_unary(
      x, [scale, shift](real v) { return scale * v + shift; },
      [scale](real, real) { return scale; }, "affine");
}

inline Tensor exp_t(const Tensor& x) {
  return map_unary(x, [](real v) { return std::exp(v); },
                   [](real, real y) { return y; }, "exp");
}

inline Tensor log_t(const Tensor& x) {
  return map_unary(x, [](real v) { return std::log(v); },
                   [](real v, real) { return 1.0 / v; }, "log");
}

inline Tensor sqrt_t(const Tensor& x) {
  return map_unary(x, [](real v) { return std::sqrt(v); },
                   [](real, real y) { return 0.5 / y; }, "sqrt");
}

inline Tensor abs_t(const Tensor& x) {
  return map_unary(x, [](real v) { return std::abs(v); },
                   [](real v, real) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); },
                   "abs");
}

inline Tensor reciprocal(const Tensor& x) {
  return map_unary(x, [](real v) { return 1.0 / v; },
                   [](real, real y) { return -y * y; }, "reciprocal");
}

inline Tensor sin_t(const Tensor& x) {
  return map_unary(x, [](real v) { return std::sin(v); },
                   [](real v, real) { return std::cos(v); }, "sin");
}

inline Tensor cos_t(const Tensor& x) {
  return map_unary(x, [](real v) { return std::cos(v); },
                   [](real v, real) { return -std::sin(v); }, "cos");
}

/// Clamp with pass-through gradient inside [lo, hi], zero outside.
inline Tensor clamp(const Tensor& x, real lo, real hi) {
  return map_unary(
      x, [lo, hi](real v) { return std::min(hi, std::max(lo, v)); },
      [lo, hi](real v, real) { return (v >= lo && v <= hi) ? 1.0 : 0.0; },
      "clamp");
}

inline Tensor clamp_min(const Tensor& x, real lo) {
  return map_unary(x, [lo](real v) { return std::max(lo, v); },
                   [lo](real v, real) { return v >= lo ? 1.0 : 0.0; },
                   "clamp_min");
}

// ---------------------------------------------------------------------------
// Reductions.

enum class ReduceKind { sum, mean, min_over_axis };

inline Tensor sum(const Tensor& a) {
  if (a.numel() == 0) throw std::domain_error("reduce on empty tensor");
  real s = 0;
  const real* p = a.data();
  for (long i = 0; i < a.numel(); ++i) s += p[i];
  Tensor out = Tensor::scalar(s);
  if (Tape* t = Tape::active(); t && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    t->record(oc, [ac, oc]() mutable {
      if (!oc.has_grad()) return;
      real g = oc.grad()[0];
      real* ga = ac.grad().data();
      for (long i = 0; i < ac.numel(); ++i) ga[i] += g;
    });
  }
  return out;
}

inline Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::domain_error("reduce on empty tensor");
  return affine(sum(a), 1.0 / static_cast<real>(a.numel()), 0.0);
}

/// Minimum along one axis; gradient routes to the argmin element, ties
/// broken toward the lowest index. Output drops the reduced axis.
inline Tensor min_over_axis(const Tensor& a, int axis) {
  if (a.numel() == 0) throw std::domain_error("reduce on empty tensor");
  if (axis < 0 || axis >= a.rank())
    throw std::invalid_argument("min_over_axis: bad axis");
  const Shape& s = a.shape();
  long outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s[d];
  for (int d = axis + 1; d < a.rank(); ++d) inner *= s[d];
  const long k = s[axis];
  Shape oshape;
  for (int d = 0; d < a.rank(); ++d)
    if (d != axis) oshape.push_back(s[d]);
  if (oshape.empty()) oshape = {1};
  Tensor out = Tensor::zeros(oshape);
  std::vector<int32_t> argmin(outer * inner);
  const real* pa = a.data();
  real* po = out.data();
  for (long o = 0; o < outer; ++o)
    for (long i = 0; i < inner; ++i) {
      real best = pa[o * k * inner + i];
      int32_t bj = 0;
      for (long j = 1; j < k; ++j) {
        real v = pa[(o * k + j) * inner + i];
        if (v < best) {
          best = v;
          bj = static_cast<int32_t>(j);
        }
      }
      po[o * inner + i] = best;
      argmin[o * inner + i] = bj;
    }
  if (Tape* t = Tape::active(); t && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    auto am = std::make_shared<std::vector<int32_t>>(std::move(argmin));
    t->record(oc, [ac, oc, am, outer, inner, k]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* ga = ac.grad().data();
      for (long o = 0; o < outer; ++o)
        for (long i = 0; i < inner; ++i)
          ga[(o * k + (*am)[o * inner + i]) * inner + i] += g[o * inner + i];
    });
  }
  return out;
}

inline Tensor reduce(const Tensor& a, ReduceKind kind, int axis = 0) {
  switch (kind) {
    case ReduceKind::sum: return sum(a);
    case ReduceKind::mean: return mean(a);
    case ReduceKind::min_over_axis: return min_over_axis(a, axis);
  }
  throw std::invalid_argument("reduce: bad kind");
}

/// Mean along axis 0 (used for channel averaging).
inline Tensor mean_over_axis0(const Tensor& a) {
  if (a.numel() == 0) throw std::domain_error("reduce on empty tensor");
  const long k = a.extent(0);
  const long inner = a.numel() / k;
  Shape oshape(a.shape().begin() + 1, a.shape().end());
  if (oshape.empty()) oshape = {1};
  Tensor out = Tensor::zeros(oshape);
  const real* pa = a.data();
  real* po = out.data();
  for (long j = 0; j < k; ++j)
    for (long i = 0; i < inner; ++i) po[i] += pa[j * inner + i];
  const real inv = 1.0 / static_cast<real>(k);
  for (long i = 0; i < inner; ++i) po[i] *= inv;
  if (Tape* t = Tape::active(); t && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    t->record(oc, [ac, oc, k, inner, inv]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* ga = ac.grad().data();
      for (long j = 0; j < k; ++j)
        for (long i = 0; i < inner; ++i) ga[j * inner + i] += g[i] * inv;
    });
  }
  return out;
}

/// Mean over the spatial extents of a [C,H,W] tensor -> [C].
inline Tensor mean_spatial(const Tensor& a) {
  if (a.rank() != 3) throw std::invalid_argument("mean_spatial expects [C,H,W]");
  const long c = a.extent(0), hw = static_cast<long>(a.extent(1)) * a.extent(2);
  Tensor out = Tensor::zeros({static_cast<int>(c)});
  const real* pa = a.data();
  real* po = out.data();
  const real inv = 1.0 / static_cast<real>(hw);
  for (long j = 0; j < c; ++j) {
    real s = 0;
    for (long i = 0; i < hw; ++i) s += pa[j * hw + i];
    po[j] = s * inv;
  }
  if (Tape* t = Tape::active(); t && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    t->record(oc, [ac, oc, c, hw, inv]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* ga = ac.grad().data();
      for (long j = 0; j < c; ++j)
        for (long i = 0; i < hw; ++i) ga[j * hw + i] += g[j] * inv;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural ops.

/// Copying reshape; gradient passes through unchanged.
inline Tensor reshape(const Tensor& a, Shape new_shape) {
  if (shape_numel(new_shape) != a.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out = Tensor::from_data(std::move(new_shape), a.vec());
  if (Tape* t = Tape::active(); t && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    t->record(oc, [ac, oc]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* ga = ac.grad().data();
      for (long i = 0; i < ac.numel(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

/// Concatenation along axis 0; trailing extents must match.
inline Tensor concat_axis0(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank())
    throw std::invalid_argument("concat: rank mismatch");
  for (int d = 1; d < a.rank(); ++d)
    if (a.extent(d) != b.extent(d))
      throw std::invalid_argument("concat: trailing extent mismatch " +
                                  shape_str(a.shape()) + " vs " +
                                  shape_str(b.shape()));
  Shape oshape = a.shape();
  oshape[0] += b.extent(0);
  Tensor out = Tensor::zeros(oshape);
  std::copy(a.data(), a.data() + a.numel(), out.data());
  std::copy(b.data(), b.data() + b.numel(), out.data() + a.numel());
  if (Tape* t = Tape::active();
      t && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    t->record(oc, [ac, bc, oc]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      if (ac.requires_grad()) {
        real* ga = ac.grad().data();
        for (long i = 0; i < ac.numel(); ++i) ga[i] += g[i];
      }
      if (bc.requires_grad()) {
        real* gb = bc.grad().data();
        const real* g2 = g + ac.numel();
        for (long i = 0; i < bc.numel(); ++i) gb[i] += g2[i];
      }
    });
  }
  return out;
}

/// Rows [r0, r1) of a 2-D tensor.
inline Tensor slice_rows(const Tensor& a, int r0, int r1) {
  if (a.rank() != 2) throw std::invalid_argument("slice_rows expects rank 2");
  if (r0 < 0 || r1 > a.extent(0) || r0 >= r1)
    throw std::invalid_argument("slice_rows: bad range");
  const long cols = a.extent(1);
  Tensor out = Tensor::zeros({r1 - r0, static_cast<int>(cols)});
  std::copy(a.data() + r0 * cols, a.data() + r1 * cols, out.data());
  if (Tape* t = Tape::active(); t && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    t->record(oc, [ac, oc, r0, cols]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* ga = ac.grad().data() + r0 * cols;
      for (long i = 0; i < oc.numel(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

/// Dense matrix product A[m,k] * B[k,n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  const long m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out = Tensor::zeros({static_cast<int>(m), static_cast<int>(n)});
  const real* pa = a.data();
  const real* pb = b.data();
  real* po = out.data();
  for (long i = 0; i < m; ++i)
    for (long l = 0; l < k; ++l) {
      const real av = pa[i * k + l];
      const real* br = pb + l * n;
      real* orow = po + i * n;
      for (long j = 0; j < n; ++j) orow[j] += av * br[j];
    }
  if (Tape* t = Tape::active();
      t && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    t->record(oc, [ac, bc, oc, m, k, n]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      if (ac.requires_grad()) {  // gA = g * B^T
        real* ga = ac.grad().data();
        const real* pb = bc.data();
        for (long i = 0; i < m; ++i)
          for (long l = 0; l < k; ++l) {
            real s = 0;
            const real* grow = g + i * n;
            const real* brow = pb + l * n;
            for (long j = 0; j < n; ++j) s += grow[j] * brow[j];
            ga[i * k + l] += s;
          }
      }
      if (bc.requires_grad()) {  // gB = A^T * g
        real* gb = bc.grad().data();
        const real* pa = ac.data();
        for (long l = 0; l < k; ++l)
          for (long i = 0; i < m; ++i) {
            const real av = pa[i * k + l];
            const real* grow = g + i * n;
            real* brow = gb + l * n;
            for (long j = 0; j < n; ++j) brow[j] += av * grow[j];
          }
      }
    });
  }
  return out;
}

/// M[r,c] + v[r] broadcast across columns.
inline Tensor add_colvec(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || v.extent(0) != m.extent(0))
    throw std::invalid_argument("add_colvec: shape mismatch");
  const long r = m.extent(0), c = m.extent(1);
  Tensor out = Tensor::zeros(m.shape());
  const real* pm = m.data();
  const real* pv = v.data();
  real* po = out.data();
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) po[i * c + j] = pm[i * c + j] + pv[i];
  if (Tape* t = Tape::active();
      t && (m.requires_grad() || v.requires_grad())) {
    out.set_requires_grad(true);
    Tensor mc = m, vc = v, oc = out;
    t->record(oc, [mc, vc, oc, r, c]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      if (mc.requires_grad()) {
        real* gm = mc.grad().data();
        for (long i = 0; i < r * c; ++i) gm[i] += g[i];
      }
      if (vc.requires_grad()) {
        real* gv = vc.grad().data();
        for (long i = 0; i < r; ++i) {
          real s = 0;
          for (long j = 0; j < c; ++j) s += g[i * c + j];
          gv[i] += s;
        }
      }
    });
  }
  return out;
}

/// Skew-symmetric matrix of a 3-vector: skew(w) x = w cross x.
inline Tensor skew(const Tensor& w) {
  if (w.numel() != 3) throw std::invalid_argument("skew expects a 3-vector");
  const real* p = w.data();
  Tensor out = Tensor::from_data(
      {3, 3}, {0, -p[2], p[1], p[2], 0, -p[0], -p[1], p[0], 0});
  if (Tape* t = Tape::active(); t && w.requires_grad()) {
    out.set_requires_grad(true);
    Tensor wc = w, oc = out;
    t->record(oc, [wc, oc]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* gw = wc.grad().data();
      gw[0] += g[7] - g[5];
      gw[1] += g[2] - g[6];
      gw[2] += g[3] - g[1];
    });
  }
  return out;
}

}  // namespace lkad
