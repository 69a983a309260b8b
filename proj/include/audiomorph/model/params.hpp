#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "audiomorph/autodiff/tensor.hpp"
#include "audiomorph/model/config.hpp"

namespace audiomorph::model {

/// y = x W + b, with W of shape [in, out].
template <typename T>
struct DenseParams {
  ad::Tensor<T> weight;
  ad::Tensor<T> bias;
};

/// Gate blocks along the last axis are ordered input, forget, cell, output.
template <typename T>
struct LstmParams {
  ad::Tensor<T> w_input;   // [in, 4H]
  ad::Tensor<T> w_hidden;  // [H, 4H]
  ad::Tensor<T> bias;      // [4H]
};

template <typename T>
struct AttentionParams {
  ad::Tensor<T> W;         // [H, A], applied to the decoder state
  ad::Tensor<T> V;         // [H, A], applied to encoder hiddens
  ad::Tensor<T> b;         // [A]
  ad::Tensor<T> w;         // [A, 1]; additive form only
  ad::Tensor<T> key_bias;  // [A]; mlp_dot form only
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<DenseParams<T>> conv;       // weight [kernel * in, channels]
  std::vector<LstmParams<T>> encoder;     // base layer, then pyramid layers
  std::vector<DenseParams<T>> bridge;     // encoder final state -> decoder h, per layer
  std::vector<LstmParams<T>> decoder;
  AttentionParams<T> attention;
  DenseParams<T> output;                  // [2H, n_mels]

  /// Visits every parameter in a fixed order with a stable name.
  template <typename F>
  void visit(F&& f);
  template <typename F>
  void visit(F&& f) const;

  std::vector<ad::Tensor<T>> tensors() const;
  std::size_t parameter_count() const;

  /// Deep copy into another precision; every copy requires grad.
  template <typename U>
  ModelParams<U> cast() const;
};

/// Seeded initialization: orthogonal recurrent blocks, Glorot-uniform
/// dense and conv weights, zero biases, forget-gate bias 1.
ModelParams<float> init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Input width of the base encoder layer.
std::size_t encoder_input_size(const ModelConfig& cfg);

template <typename T>
template <typename F>
void ModelParams<T>::visit(F&& f) {
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto p = "conv" + std::to_string(i);
    f(p + ".weight", conv[i].weight);
    f(p + ".bias", conv[i].bias);
  }
  auto lstm = [&f](const std::string& p, LstmParams<T>& l) {
    f(p + ".w_input", l.w_input);
    f(p + ".w_hidden", l.w_hidden);
    f(p + ".bias", l.bias);
  };
  for (std::size_t i = 0; i < encoder.size(); ++i) lstm("encoder" + std::to_string(i), encoder[i]);
  for (std::size_t i = 0; i < bridge.size(); ++i) {
    const auto p = "bridge" + std::to_string(i);
    f(p + ".weight", bridge[i].weight);
    f(p + ".bias", bridge[i].bias);
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) lstm("decoder" + std::to_string(i), decoder[i]);
  f(std::string("attention.W"), attention.W);
  f(std::string("attention.V"), attention.V);
  f(std::string("attention.b"), attention.b);
  if (config.attention == AttentionKind::additive)
    f(std::string("attention.w"), attention.w);
  else
    f(std::string("attention.key_bias"), attention.key_bias);
  f(std::string("output.weight"), output.weight);
  f(std::string("output.bias"), output.bias);
}

template <typename T>
template <typename F>
void ModelParams<T>::visit(F&& f) const {
  const_cast<ModelParams<T>*>(this)->visit([&f](const std::string& name, ad::Tensor<T>& t) {
    f(name, static_cast<const ad::Tensor<T>&>(t));
  });
}

template <typename T>
std::vector<ad::Tensor<T>> ModelParams<T>::tensors() const {
  std::vector<ad::Tensor<T>> out;
  visit([&out](const std::string&, const ad::Tensor<T>& t) { out.push_back(t); });
  return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  visit([&n](const std::string&, const ad::Tensor<T>& t) { n += t.size(); });
  return n;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out;
  out.config = config;
  auto d = [](const DenseParams<T>& p) { return DenseParams<U>{p.weight.template cast<U>(true), p.bias.template cast<U>(true)}; };
  auto l = [](const LstmParams<T>& p) {
    return LstmParams<U>{p.w_input.template cast<U>(true), p.w_hidden.template cast<U>(true),
                         p.bias.template cast<U>(true)};
  };
  for (const auto& p : conv) out.conv.push_back(d(p));
  for (const auto& p : encoder) out.encoder.push_back(l(p));
  for (const auto& p : bridge) out.bridge.push_back(d(p));
  for (const auto& p : decoder) out.decoder.push_back(l(p));
  auto opt = [](const ad::Tensor<T>& t) { return t.defined() ? t.template cast<U>(true) : ad::Tensor<U>(); };
  out.attention = {opt(attention.W), opt(attention.V), opt(attention.b), opt(attention.w), opt(attention.key_bias)};
  out.output = d(output);
  return out;
}

}  // namespace audiomorph::model
