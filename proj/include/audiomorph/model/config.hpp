#pragma once

#include <cstddef>
#include <vector>

namespace audiomorph::model {

struct ConvLayer {
  std::size_t channels = 32;
  std::size_t kernel = 3;
  std::size_t stride = 2;

  bool operator==(const ConvLayer&) const = default;
};

enum class AttentionKind {
  additive,  // e = w^T tanh(W s + V h + b)
  mlp_dot,   // e = <tanh(W s + b), tanh(V h + b_key)>
};

struct ModelConfig {
  std::size_t n_mels = 80;
  std::size_t n_styles = 4;
  std::vector<ConvLayer> conv_layers{ConvLayer{}, ConvLayer{}};
  std::size_t pyramid_layers = 2;
  std::size_t hidden_size = 128;
  std::size_t decoder_layers = 2;
  std::size_t attention_size = 128;
  std::size_t max_decode_frames = 0;  // 0: 1.2 x source frames
  double context_ms = 200.0;
  double hop_ms = 12.5;
  AttentionKind attention = AttentionKind::additive;
  double log_floor = 1e-5;

  std::size_t stride_product() const;
  std::size_t reduction_factor() const;
  /// Closed-form encoder length for a T-frame input.
  std::size_t encoder_length(std::size_t frames) const;
  /// Decode budget for a source of `frames` frames.
  std::size_t decode_budget(std::size_t frames) const;
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Context sizes supported by the ablation protocol.
inline constexpr double kContextSizesMs[] = {12.5, 25.0, 50.0, 100.0, 200.0};

/// Copy of `base` with conv strides and pyramid depth set for `context_ms`.
ModelConfig for_context(double context_ms, ModelConfig base = {});

}  // namespace audiomorph::model
