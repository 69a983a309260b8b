#include "audiomorph/model/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "audiomorph/error.hpp"

namespace audiomorph::model {

std::size_t ModelConfig::stride_product() const {
  std::size_t p = 1;
  for (const auto& c : conv_layers) p *= c.stride;
  return p;
}

std::size_t ModelConfig::reduction_factor() const { return stride_product() << pyramid_layers; }

std::size_t ModelConfig::encoder_length(std::size_t frames) const {
  std::size_t len = frames;
  for (const auto& c : conv_layers) len = (len + c.stride - 1) / c.stride;
  for (std::size_t i = 0; i < pyramid_layers; ++i) len = (len + 1) / 2;
  return len;
}

std::size_t ModelConfig::decode_budget(std::size_t frames) const {
  if (max_decode_frames > 0) return max_decode_frames;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(1.2 * static_cast<double>(frames))));
}

void ModelConfig::validate() const {
  if (n_mels == 0) throw InvalidInput("n_mels must be positive");
  if (n_styles == 0) throw InvalidInput("n_styles must be positive");
  if (hidden_size == 0 || attention_size == 0) throw InvalidInput("hidden_size and attention_size must be positive");
  if (decoder_layers == 0) throw InvalidInput("decoder_layers must be positive");
  if (pyramid_layers > 16) throw InvalidInput("pyramid_layers too large");
  for (const auto& c : conv_layers) {
    if (c.channels == 0 || c.stride == 0) throw InvalidInput("conv channels and stride must be positive");
    if (c.kernel == 0 || c.kernel % 2 == 0) throw InvalidInput("conv kernel width must be odd");
  }
  if (!(hop_ms > 0)) throw InvalidInput("hop_ms must be positive");
  if (!(log_floor > 0)) throw InvalidInput("log_floor must be positive");
  const double expected = static_cast<double>(reduction_factor()) * hop_ms;
  if (std::abs(expected - context_ms) > 1e-9 * expected)
    throw InvalidInput("context_ms " + std::to_string(context_ms) + " does not match reduction factor " +
                       std::to_string(reduction_factor()) + " at hop " + std::to_string(hop_ms) + " ms");
}

ModelConfig for_context(double context_ms, ModelConfig base) {
  std::size_t strides[2];
  std::size_t layers;
  if (context_ms == 12.5) {
    strides[0] = 1, strides[1] = 1, layers = 0;
  } else if (context_ms == 25.0) {
    strides[0] = 2, strides[1] = 1, layers = 0;
  } else if (context_ms == 50.0) {
    strides[0] = 2, strides[1] = 1, layers = 1;
  } else if (context_ms == 100.0) {
    strides[0] = 2, strides[1] = 1, layers = 2;
  } else if (context_ms == 200.0) {
    strides[0] = 2, strides[1] = 2, layers = 2;
  } else {
    throw InvalidInput("unsupported context size " + std::to_string(context_ms) + " ms");
  }
  if (base.conv_layers.size() != 2) base.conv_layers.assign(2, ConvLayer{});
  base.conv_layers[0].stride = strides[0];
  base.conv_layers[1].stride = strides[1];
  base.pyramid_layers = layers;
  base.hop_ms = 12.5;
  base.context_ms = context_ms;
  return base;
}

}  // namespace audiomorph::model
