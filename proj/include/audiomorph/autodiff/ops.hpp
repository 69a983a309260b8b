#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "audiomorph/autodiff/tensor.hpp"

namespace audiomorph::ad {

namespace detail {

template <typename T>
void check_finite(const char* op, const std::vector<T>& v) {
  if (!nan_guard_enabled) return;
  for (T x : v)
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by op '") + op + "'");
}

/// Registers `out` on the active graph when any input requires grad.
template <typename T, typename Backward>
Tensor<T> finish(const char* op, Tensor<T> out, std::initializer_list<const Tensor<T>*> inputs, Backward&& backward) {
  check_finite(op, out.node()->value);
  Graph<T>* g = Graph<T>::active();
  if (!g) return out;
  bool needs = false;
  for (const auto* in : inputs) needs = needs || in->requires_grad();
  if (!needs) return out;
  std::vector<std::shared_ptr<Node<T>>> ins;
  ins.reserve(inputs.size());
  for (const auto* in : inputs) ins.push_back(in->ptr());
  out.node()->requires_grad = true;
  out.node()->leaf = false;
  out.node()->op = op;
  g->push(out, std::move(ins), std::forward<Backward>(backward));
  return out;
}

template <typename T>
Tensor<T> finish_n(const char* op, Tensor<T> out, const std::vector<Tensor<T>>& inputs, std::function<void()> backward) {
  check_finite(op, out.node()->value);
  Graph<T>* g = Graph<T>::active();
  if (!g) return out;
  bool needs = std::any_of(inputs.begin(), inputs.end(), [](const auto& t) { return t.requires_grad(); });
  if (!needs) return out;
  std::vector<std::shared_ptr<Node<T>>> ins;
  for (const auto& in : inputs) ins.push_back(in.ptr());
  out.node()->requires_grad = true;
  out.node()->leaf = false;
  out.node()->op = op;
  g->push(out, std::move(ins), std::move(backward));
  return out;
}

/// Numpy-style broadcasting of two operands; dims are right-aligned and
/// must match or be 1.
struct Broadcast {
  enum class Kind { same, b_repeats, a_repeats, general };
  Kind kind = Kind::same;
  Shape out;
  std::size_t na = 0, nb = 0;
  std::vector<std::size_t> ia, ib;  // only for Kind::general

  std::size_t a_at(std::size_t i) const {
    switch (kind) {
      case Kind::same: case Kind::b_repeats: return i;
      case Kind::a_repeats: return i % na;
      default: return ia[i];
    }
  }
  std::size_t b_at(std::size_t i) const {
    switch (kind) {
      case Kind::same: case Kind::a_repeats: return i;
      case Kind::b_repeats: return i % nb;
      default: return ib[i];
    }
  }
};

inline bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

inline Broadcast broadcast(const char* op, const Shape& a, const Shape& b) {
  Broadcast bc;
  bc.na = numel(a);
  bc.nb = numel(b);
  if (a == b) {
    bc.out = a;
    return bc;
  }
  if (is_suffix(b, a)) {
    bc.kind = Broadcast::Kind::b_repeats;
    bc.out = a;
    return bc;
  }
  if (is_suffix(a, b)) {
    bc.kind = Broadcast::Kind::a_repeats;
    bc.out = b;
    return bc;
  }
  const std::size_t r = std::max(a.size(), b.size());
  Shape pa(r - a.size(), 1), pb(r - b.size(), 1);
  pa.insert(pa.end(), a.begin(), a.end());
  pb.insert(pb.end(), b.begin(), b.end());
  bc.out.resize(r);
  for (std::size_t d = 0; d < r; ++d) {
    if (pa[d] != pb[d] && pa[d] != 1 && pb[d] != 1)
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    bc.out[d] = std::max(pa[d], pb[d]);
  }
  bc.kind = Broadcast::Kind::general;
  const std::size_t n = numel(bc.out);
  bc.ia.resize(n);
  bc.ib.resize(n);
  std::vector<std::size_t> sa(r), sb(r), idx(r, 0);
  for (std::size_t d = r, stride_a = 1, stride_b = 1; d-- > 0;) {
    sa[d] = pa[d] == 1 ? 0 : stride_a;
    sb[d] = pb[d] == 1 ? 0 : stride_b;
    stride_a *= pa[d];
    stride_b *= pb[d];
  }
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bc.ia[i] = oa;
    bc.ib[i] = ob;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < bc.out[d]) break;
      oa -= sa[d] * idx[d];
      ob -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return bc;
}

inline std::size_t resolve_axis(std::ptrdiff_t axis, std::size_t rank, const char* op) {
  const auto r = static_cast<std::ptrdiff_t>(rank);
  const auto a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw ShapeError(std::string(op) + ": axis out of range");
  return static_cast<std::size_t>(a);
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T, typename F, typename DF>
Tensor<T> unary(const char* op, const Tensor<T>& x, F f, DF df_from_y) {
  std::vector<T> y(x.size());
  const T* xv = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  Tensor<T> out(x.shape(), std::move(y));
  auto* o = out.node();
  auto* xn = x.node();
  return finish(op, out, {&x}, [o, xn, df_from_y] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < o->value.size(); ++i) xn->grad[i] += o->grad[i] * df_from_y(xn->value[i], o->value[i]);
  });
}

}  // namespace detail

/// [m,k] x [k,n] -> [m,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  using M = detail::RowMatrix<T>;
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<T> c(static_cast<std::size_t>(m * n));
  Eigen::Map<M>(c.data(), m, n).noalias() = Eigen::Map<const M>(a.data(), m, k) * Eigen::Map<const M>(b.data(), k, n);
  Tensor<T> out({a.dim(0), b.dim(1)}, std::move(c));
  auto *o = out.node(), *an = a.node(), *bn = b.node();
  return detail::finish("matmul", out, {&a, &b}, [o, an, bn, m, k, n] {
    Eigen::Map<const M> g(o->grad.data(), m, n);
    if (an->requires_grad) {
      an->ensure_grad();
      Eigen::Map<M>(an->grad.data(), m, k).noalias() += g * Eigen::Map<const M>(bn->value.data(), k, n).transpose();
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      Eigen::Map<M>(bn->grad.data(), k, n).noalias() += Eigen::Map<const M>(an->value.data(), m, k).transpose() * g;
    }
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  auto bc = detail::broadcast("add", a.shape(), b.shape());
  const std::size_t n = numel(bc.out);
  std::vector<T> y(n);
  const T *av = a.data(), *bv = b.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = av[bc.a_at(i)] + bv[bc.b_at(i)];
  Tensor<T> out(bc.out, std::move(y));
  auto *o = out.node(), *an = a.node(), *bn = b.node();
  return detail::finish("add", out, {&a, &b}, [o, an, bn, bc = std::move(bc)] {
    const std::size_t n = o->value.size();
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[bc.a_at(i)] += o->grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) bn->grad[bc.b_at(i)] += o->grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  auto bc = detail::broadcast("sub", a.shape(), b.shape());
  const std::size_t n = numel(bc.out);
  std::vector<T> y(n);
  const T *av = a.data(), *bv = b.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = av[bc.a_at(i)] - bv[bc.b_at(i)];
  Tensor<T> out(bc.out, std::move(y));
  auto *o = out.node(), *an = a.node(), *bn = b.node();
  return detail::finish("sub", out, {&a, &b}, [o, an, bn, bc = std::move(bc)] {
    const std::size_t n = o->value.size();
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[bc.a_at(i)] += o->grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) bn->grad[bc.b_at(i)] -= o->grad[i];
    }
  });
}

/// Elementwise product with broadcasting.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  auto bc = detail::broadcast("mul", a.shape(), b.shape());
  const std::size_t n = numel(bc.out);
  std::vector<T> y(n);
  const T *av = a.data(), *bv = b.data();
  for (std::size_t i = 0; i < n; ++i) y[i] = av[bc.a_at(i)] * bv[bc.b_at(i)];
  Tensor<T> out(bc.out, std::move(y));
  auto *o = out.node(), *an = a.node(), *bn = b.node();
  return detail::finish("mul", out, {&a, &b}, [o, an, bn, bc = std::move(bc)] {
    const std::size_t n = o->value.size();
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[bc.a_at(i)] += o->grad[i] * bn->value[bc.b_at(i)];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) bn->grad[bc.b_at(i)] += o->grad[i] * an->value[bc.a_at(i)];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  return detail::unary("scale", x, [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary("tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary(
      "sigmoid", x,
      [](T v) { return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return detail::unary("relu", x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

/// Concatenation along `axis` (default: last). All other dims must agree.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::ptrdiff_t axis = -1) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rank = parts[0].rank();
  const std::size_t ax = detail::resolve_axis(axis, rank, "concat");
  Shape out_shape = parts[0].shape();
  out_shape[ax] = 0;
  for (const auto& p : parts) {
    bool ok = p.rank() == rank;
    for (std::size_t d = 0; ok && d < rank; ++d) ok = d == ax || p.dim(static_cast<std::ptrdiff_t>(d)) == parts[0].dim(static_cast<std::ptrdiff_t>(d));
    if (!ok) throw ShapeError("concat: incompatible shapes " + shape_str(parts[0].shape()) + " and " + shape_str(p.shape()));
    out_shape[ax] += p.dim(static_cast<std::ptrdiff_t>(ax));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= out_shape[d];
  for (std::size_t d = ax + 1; d < rank; ++d) inner *= out_shape[d];
  const std::size_t row = out_shape[ax] * inner;
  std::vector<T> y(numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t w = p.dim(static_cast<std::ptrdiff_t>(ax)) * inner;
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(p.data() + o * w, w, y.data() + o * row + off);
    off += w;
  }
  Tensor<T> out(out_shape, std::move(y));
  auto* on = out.node();
  std::vector<Node<T>*> ins;
  for (const auto& p : parts) ins.push_back(p.node());
  return detail::finish_n<T>("concat", out, parts, [on, ins, offsets, outer, row] {
    for (std::size_t j = 0; j < ins.size(); ++j) {
      Node<T>* in = ins[j];
      if (!in->requires_grad) continue;
      in->ensure_grad();
      const std::size_t w = in->value.size() / outer;
      for (std::size_t o = 0; o < outer; ++o) {
        const T* src = on->grad.data() + o * row + offsets[j];
        T* dst = in->grad.data() + o * w;
        for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
      }
    }
  });
}

template <typename T>
Tensor<T> concat(std::initializer_list<Tensor<T>> parts, std::ptrdiff_t axis = -1) {
  return concat(std::vector<Tensor<T>>(parts), axis);
}

/// x[..., begin:end] along `axis` (default: last).
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t begin, std::size_t end, std::ptrdiff_t axis = -1) {
  const std::size_t ax = detail::resolve_axis(axis, x.rank(), "slice");
  const std::size_t len = x.dim(static_cast<std::ptrdiff_t>(ax));
  if (begin >= end || end > len)
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for shape " +
                     shape_str(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= x.dim(static_cast<std::ptrdiff_t>(d));
  for (std::size_t d = ax + 1; d < x.rank(); ++d) inner *= x.dim(static_cast<std::ptrdiff_t>(d));
  Shape s = x.shape();
  s[ax] = end - begin;
  const std::size_t w = (end - begin) * inner, row = len * inner, off = begin * inner;
  std::vector<T> y(outer * w);
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(x.data() + o * row + off, w, y.data() + o * w);
  Tensor<T> out(std::move(s), std::move(y));
  auto *on = out.node(), *xn = x.node();
  return detail::finish("slice", out, {&x}, [on, xn, outer, w, row, off] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < w; ++i) xn->grad[o * row + off + i] += on->grad[o * w + i];
  });
}

/// Softmax over the last axis. Entries whose mask value is 0 get
/// probability 0; each row needs at least one unmasked entry.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, const std::vector<std::uint8_t>& mask = {}) {
  const std::size_t n = x.dim(-1), rows = x.size() / n;
  if (!mask.empty() && mask.size() != x.size())
    throw ShapeError("softmax: mask has " + std::to_string(mask.size()) + " entries for shape " + shape_str(x.shape()));
  std::vector<T> y(x.size(), T(0));
  const T* xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j)
      if (mask.empty() || mask[r * n + j]) {
        mx = std::max(mx, xv[r * n + j]);
        any = true;
      }
    if (!any) throw InvalidInput("softmax: row " + std::to_string(r) + " is fully masked");
    T z = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask.empty() || mask[r * n + j]) {
        y[r * n + j] = std::exp(xv[r * n + j] - mx);
        z += y[r * n + j];
      }
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] /= z;
  }
  Tensor<T> out(x.shape(), std::move(y));
  auto *on = out.node(), *xn = x.node();
  return detail::finish("softmax", out, {&x}, [on, xn, n, rows] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* p = on->value.data() + r * n;
      const T* g = on->grad.data() + r * n;
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * p[j];
      for (std::size_t j = 0; j < n; ++j) xn->grad[r * n + j] += p[j] * (g[j] - dot);
    }
  });
}

/// Sum of all entries -> shape [1].
template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.values()) acc += v;
  Tensor<T> out({1}, {acc});
  auto *on = out.node(), *xn = x.node();
  return detail::finish("sum", out, {&x}, [on, xn] {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (auto& g : xn->grad) g += on->grad[0];
  });
}

/// Mean squared error. With `row_weights`, rows (all axes but the last
/// flattened) are weighted and the sum is normalized by
/// sum(weights) * row_length; a zero weight drops a row entirely.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target, const std::vector<T>& row_weights = {}) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  const std::size_t width = pred.dim(-1), rows = pred.size() / width;
  if (!row_weights.empty() && row_weights.size() != rows)
    throw ShapeError("mse_loss: " + std::to_string(row_weights.size()) + " row weights for " + std::to_string(rows) + " rows");
  T wsum = row_weights.empty() ? static_cast<T>(rows) : T(0);
  for (T w : row_weights) wsum += w;
  if (!(wsum > T(0))) throw InvalidInput("mse_loss: all rows masked");
  const T norm = T(1) / (wsum * static_cast<T>(width));
  T acc = 0;
  const T *p = pred.data(), *t = target.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T w = row_weights.empty() ? T(1) : row_weights[r];
    if (w == T(0)) continue;
    T row = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const T d = p[r * width + c] - t[r * width + c];
      row += d * d;
    }
    acc += w * row;
  }
  Tensor<T> out({1}, {acc * norm});
  auto *on = out.node(), *pn = pred.node(), *tn = target.node();
  return detail::finish("mse_loss", out, {&pred, &target}, [on, pn, tn, row_weights, width, rows, norm] {
    const T g = on->grad[0] * T(2) * norm;
    if (pn->requires_grad) pn->ensure_grad();
    if (tn->requires_grad) tn->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const T w = row_weights.empty() ? T(1) : row_weights[r];
      if (w == T(0)) continue;
      for (std::size_t c = 0; c < width; ++c) {
        const std::size_t i = r * width + c;
        const T d = g * w * (pn->value[i] - tn->value[i]);
        if (pn->requires_grad) pn->grad[i] += d;
        if (tn->requires_grad) tn->grad[i] -= d;
      }
    }
  });
}

}  // namespace audiomorph::ad
