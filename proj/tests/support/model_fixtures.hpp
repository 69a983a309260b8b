#pragma once

#include <random>
#include <vector>

#include "audiomorph/data/batch.hpp"
#include "audiomorph/model/config.hpp"
#include "audiomorph/model/params.hpp"

namespace audiomorph::testing {

/// Small enough that a 64-bit finite-difference sweep takes well under a second.
inline model::ModelConfig tiny_config(std::size_t n_mels = 4, std::size_t hidden = 3) {
  model::ModelConfig c;
  c.n_mels = n_mels;
  c.n_styles = 3;
  c.conv_layers = {{3, 3, 2}, {3, 3, 1}};
  c.pyramid_layers = 1;
  c.hidden_size = hidden;
  c.attention_size = 3;
  c.decoder_layers = 2;
  c.context_ms = 4 * 12.5;
  return c;
}

inline dsp::Spectrogram random_log_mel(std::mt19937_64& rng, std::size_t frames, std::size_t mels) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  dsp::Spectrogram s(frames, mels, dsp::Scale::log_mel);
  for (auto& v : s.values) v = static_cast<float>(u(rng));
  return s;
}

inline data::TransformExample random_example(std::mt19937_64& rng, const model::ModelConfig& cfg,
                                             std::size_t source_frames, std::size_t target_frames) {
  std::uniform_int_distribution<int> style(0, static_cast<int>(cfg.n_styles) - 1);
  data::TransformExample ex;
  ex.source = random_log_mel(rng, source_frames, cfg.n_mels);
  ex.target = random_log_mel(rng, target_frames, cfg.n_mels);
  ex.source_style = style(rng);
  ex.target_style = style(rng);
  ex.content_id = 60;
  return ex;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace audiomorph::testing
