#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "audiomorph/autodiff/tensor.hpp"

namespace audiomorph::ad {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;
  double decay_per_epoch = 0.99;
  std::uint64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

/// Bias-corrected Adam. Moment buffers are created on the first step.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState& s) {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i].has_grad())
      throw Error("adam_step: parameter " + std::to_string(i) + " of shape " + shape_str(params[i].shape()) +
                  " has no gradient");
  if (s.m.empty()) {
    for (const auto& p : params) {
      s.m.emplace_back(p.size(), 0.0f);
      s.v.emplace_back(p.size(), 0.0f);
    }
  }
  if (s.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameter list");
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_values();
    auto grad = params[i].grad();
    auto& m = s.m[i];
    auto& v = s.v[i];
    if (m.size() != values.size()) throw ShapeError("adam_step: moment size mismatch");
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      const double mj = s.beta1 * m[j] + (1.0 - s.beta1) * g;
      const double vj = s.beta2 * v[j] + (1.0 - s.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = s.learning_rate * (mj / c1) / (std::sqrt(vj / c2) + s.epsilon);
      values[j] = static_cast<T>(values[j] - update);
    }
  }
}

inline void decay_learning_rate(AdamState& s) { s.learning_rate *= s.decay_per_epoch; }

}  // namespace audiomorph::ad
