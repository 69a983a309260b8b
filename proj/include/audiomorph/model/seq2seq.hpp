#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "audiomorph/autodiff/tensor.hpp"
#include "audiomorph/data/batch.hpp"
#include "audiomorph/data/example.hpp"
#include "audiomorph/dsp/types.hpp"
#include "audiomorph/model/params.hpp"

namespace audiomorph::model {

/// Time-major view of a padded source batch: frames[t] is [B, n_mels].
template <typename T>
struct SourceBatch {
  std::vector<ad::Tensor<T>> frames;
  std::vector<std::size_t> lengths;
  std::vector<int> styles;

  std::size_t batch() const { return lengths.size(); }
};

template <typename T>
SourceBatch<T> source_batch(const dsp::Spectrogram& x, int style);
template <typename T>
SourceBatch<T> source_batch(const data::PaddedBatch& batch);

template <typename T>
struct EncoderState {
  std::vector<ad::Tensor<T>> hidden;  // hidden[j] is [B, H]; zero beyond each length
  std::vector<std::size_t> lengths;
  std::vector<std::uint8_t> mask;  // [B, L]
  ad::Tensor<T> final_state;       // [B, H], top layer at each last valid step

  std::size_t batch() const { return lengths.size(); }
  std::size_t length() const { return hidden.size(); }
};

/// Encoder hiddens with the step-independent half of the score precomputed.
template <typename T>
struct AttentionMemory {
  const EncoderState<T>* encoder = nullptr;
  std::vector<ad::Tensor<T>> keys;  // keys[j] is [B, A]
};

template <typename T>
struct Attention {
  ad::Tensor<T> alpha;    // [B, L]
  ad::Tensor<T> context;  // [B, H]
};

template <typename T>
struct DecoderState {
  std::vector<ad::Tensor<T>> h;  // per layer [B, H]; h.back() is s
  std::vector<ad::Tensor<T>> c;
  ad::Tensor<T> context;  // [B, H]
};

template <typename T>
struct DecoderStep {
  DecoderState<T> state;
  ad::Tensor<T> alpha;  // [B, L]
  ad::Tensor<T> frame;  // [B, n_mels]
};

/// Throws InvalidInput if `style` is outside the style vocabulary.
void check_style(const ModelConfig& cfg, int style);

template <typename T>
EncoderState<T> encode(const ModelParams<T>& p, const SourceBatch<T>& x);
template <typename T>
EncoderState<T> encode(const ModelParams<T>& p, const dsp::Spectrogram& x, int source_style);

template <typename T>
AttentionMemory<T> attention_memory(const ModelParams<T>& p, const EncoderState<T>& enc);

template <typename T>
Attention<T> attend(const ad::Tensor<T>& s_prev, const AttentionMemory<T>& memory, const AttentionParams<T>& ap,
                    AttentionKind kind = AttentionKind::additive);

/// Decoder layers start from the bridged encoder final state, zero cells
/// and a zero context.
template <typename T>
DecoderState<T> initial_decoder_state(const ModelParams<T>& p, const EncoderState<T>& enc);

template <typename T>
DecoderStep<T> decode_step(const ModelParams<T>& p, const ad::Tensor<T>& y_prev, const DecoderState<T>& prev,
                           const std::vector<int>& target_styles, const AttentionMemory<T>& memory);

/// Teacher-forced masked MSE over the valid target frames of a batch.
template <typename T>
ad::Tensor<T> loss(const ModelParams<T>& p, const data::PaddedBatch& batch);

/// Same objective for one example, without padding or masks.
template <typename T>
ad::Tensor<T> example_loss(const ModelParams<T>& p, const data::TransformExample& ex);

struct TransformResult {
  dsp::Spectrogram output;     // log-mel, after trimming
  dsp::Spectrogram attention;  // output frames x encoder length
  std::size_t decoded_frames = 0;
};

/// Free-running decode. `max_frames` of 0 uses the configured budget.
TransformResult transform(const ModelParams<float>& p, const dsp::Spectrogram& x, int source_style, int target_style,
                          std::size_t max_frames = 0);

/// Encoder final state for one clip.
std::vector<float> embed(const ModelParams<float>& p, const dsp::Spectrogram& x, int source_style);

}  // namespace audiomorph::model
