#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "audiomorph/error.hpp"

namespace audiomorph::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

/// Shared handle to a dense row-major array. Copies alias the same storage,
/// so a parameter handed to an optimizer and to the model is one tensor.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    for (auto d : shape)
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    if (shape.empty()) shape = {1};
    if (values.size() != numel(shape))
      throw ShapeError("tensor of shape " + shape_str(shape) + " given " + std::to_string(values.size()) + " values");
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> v(numel(shape), T(0));
    return Tensor(std::move(shape), std::move(v), requires_grad);
  }
  static Tensor full(Shape shape, T value) {
    std::vector<T> v(numel(shape), value);
    return Tensor(std::move(shape), std::move(v));
  }
  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::ptrdiff_t i) const {
    const auto r = static_cast<std::ptrdiff_t>(rank());
    return node_->shape.at(static_cast<std::size_t>(i < 0 ? r + i : i));
  }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  const T* data() const { return node_->value.data(); }
  T item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }
  void clear_grad() { node_->grad.clear(); }

  const char* op() const { return node_->op; }
  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

  /// Deep copy into another precision; the copy is a fresh leaf.
  template <typename U>
  Tensor<U> cast(bool requires_grad) const {
    std::vector<U> v(node_->value.begin(), node_->value.end());
    return Tensor<U>(node_->shape, std::move(v), requires_grad);
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

inline thread_local bool nan_guard_enabled = true;

/// Enables the per-op finite check for the lifetime of the scope.
class NanGuardScope {
 public:
  explicit NanGuardScope(bool on) : saved_(nan_guard_enabled) { nan_guard_enabled = on; }
  ~NanGuardScope() { nan_guard_enabled = saved_; }
  NanGuardScope(const NanGuardScope&) = delete;
  NanGuardScope& operator=(const NanGuardScope&) = delete;

 private:
  bool saved_;
};

/// Define-by-run tape. Ops executed while a graph is active and touching a
/// requires_grad operand append a record; records are therefore in
/// topological order and backward walks them in reverse, once each.
template <typename T>
class Graph {
 public:
  struct Record {
    std::shared_ptr<Node<T>> output;
    std::vector<std::shared_ptr<Node<T>>> inputs;
    std::function<void()> backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  static Graph* active() { return active_; }

  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

  void push(const Tensor<T>& out, std::vector<std::shared_ptr<Node<T>>> inputs, std::function<void()> backward) {
    records_.push_back(Record{out.ptr(), std::move(inputs), std::move(backward)});
  }

  /// Populates d(loss)/d(leaf) for every requires_grad leaf reached from
  /// `loss`. Leaf gradients accumulate across calls; intermediate gradients
  /// are reset each call.
  void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.size() != 1)
      throw ShapeError("backward: loss must be a scalar, got shape " +
                       (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    std::ptrdiff_t end = -1;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(records_.size()) - 1; i >= 0; --i)
      if (records_[static_cast<std::size_t>(i)].output.get() == loss.node()) {
        end = i;
        break;
      }
    if (end < 0) throw Error("backward: loss was not produced on this graph");
    for (std::ptrdiff_t i = 0; i <= end; ++i) {
      auto& out = *records_[static_cast<std::size_t>(i)].output;
      out.grad.assign(out.value.size(), T(0));
    }
    loss.node()->grad[0] = T(1);
    for (std::ptrdiff_t i = end; i >= 0; --i) records_[static_cast<std::size_t>(i)].backward();
    if (!nan_guard_enabled) return;
    std::unordered_set<const Node<T>*> seen;
    for (std::ptrdiff_t i = 0; i <= end; ++i) {
      const auto& rec = records_[static_cast<std::size_t>(i)];
      for (const auto& in : rec.inputs) {
        if (!in->leaf || !in->requires_grad || !seen.insert(in.get()).second) continue;
        for (T g : in->grad)
          if (!std::isfinite(g))
            throw NumericError(std::string("non-finite gradient on a leaf consumed by op '") + rec.output->op + "'");
      }
    }
  }

 private:
  template <typename>
  friend class GraphScope;
  static inline thread_local Graph* active_ = nullptr;
  std::vector<Record> records_;
};

/// Makes `g` the active graph on this thread until the scope ends.
template <typename T>
class GraphScope {
 public:
  explicit GraphScope(Graph<T>& g) : saved_(Graph<T>::active_) { Graph<T>::active_ = &g; }
  ~GraphScope() { Graph<T>::active_ = saved_; }
  GraphScope(const GraphScope&) = delete;
  GraphScope& operator=(const GraphScope&) = delete;

 private:
  Graph<T>* saved_;
};

template <typename T>
void zero_grads(std::span<Tensor<T>> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace audiomorph::ad
