#include "audiomorph/model/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "audiomorph/autodiff/ops.hpp"

namespace audiomorph::model {

using ad::Tensor;

namespace {

template <typename T>
Tensor<T> one_hot(const ModelConfig& cfg, const std::vector<int>& styles) {
  std::vector<T> v(styles.size() * cfg.n_styles, T(0));
  for (std::size_t b = 0; b < styles.size(); ++b) {
    check_style(cfg, styles[b]);
    v[b * cfg.n_styles + static_cast<std::size_t>(styles[b])] = T(1);
  }
  return Tensor<T>({styles.size(), cfg.n_styles}, std::move(v));
}

template <typename T>
Tensor<T> dense(const DenseParams<T>& d, const Tensor<T>& x) {
  return ad::add(ad::matmul(x, d.weight), d.bias);
}

// Zeroes rows b with t >= lengths[b]; returns x untouched when all are valid.
template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, std::size_t t, const std::vector<std::size_t>& lengths) {
  bool all = true;
  std::vector<T> m(lengths.size());
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    m[b] = t < lengths[b] ? T(1) : T(0);
    all = all && t < lengths[b];
  }
  if (all) return x;
  return ad::mul(x, Tensor<T>({lengths.size(), 1}, std::move(m)));
}

template <typename T>
struct Cell {
  Tensor<T> h;
  Tensor<T> c;
};

template <typename T>
Cell<T> lstm_step(const LstmParams<T>& p, const Tensor<T>& x, const Tensor<T>& h, const Tensor<T>& c) {
  const std::size_t n = p.w_hidden.dim(0);
  const auto gates = ad::add(ad::add(ad::matmul(x, p.w_input), ad::matmul(h, p.w_hidden)), p.bias);
  const auto i = ad::sigmoid(ad::slice(gates, 0, n));
  const auto f = ad::sigmoid(ad::slice(gates, n, 2 * n));
  const auto g = ad::tanh(ad::slice(gates, 2 * n, 3 * n));
  const auto o = ad::sigmoid(ad::slice(gates, 3 * n, 4 * n));
  auto c_next = ad::add(ad::mul(f, c), ad::mul(i, g));
  auto h_next = ad::mul(o, ad::tanh(c_next));
  return {std::move(h_next), std::move(c_next)};
}

template <typename T>
std::vector<Tensor<T>> run_lstm(const LstmParams<T>& p, const std::vector<Tensor<T>>& xs,
                                const std::vector<std::size_t>& lengths) {
  const std::size_t n = p.w_hidden.dim(0);
  Tensor<T> h = Tensor<T>::zeros({lengths.size(), n});
  Tensor<T> c = h;
  std::vector<Tensor<T>> out;
  out.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    auto cell = lstm_step(p, xs[t], h, c);
    h = cell.h;
    c = cell.c;
    out.push_back(mask_rows(cell.h, t, lengths));
  }
  return out;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

template <typename T>
Tensor<T> rows_at(const std::vector<float>& values, std::size_t batch, std::size_t frames, std::size_t width,
                  std::size_t t) {
  std::vector<T> v(batch * width);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t m = 0; m < width; ++m) v[b * width + m] = static_cast<T>(values[(b * frames + t) * width + m]);
  return Tensor<T>({batch, width}, std::move(v));
}

template <typename T>
Tensor<T> frame_tensor(const dsp::Spectrogram& s, std::size_t t) {
  const auto f = s.frame(t);
  return Tensor<T>({1, s.bins}, std::vector<T>(f.begin(), f.end()));
}

void check_log_mel(const ModelConfig& cfg, const dsp::Spectrogram& s, const char* what) {
  if (s.scale != dsp::Scale::log_mel) throw InvalidInput(std::string(what) + " must be a log-mel spectrogram");
  if (s.bins != cfg.n_mels)
    throw ShapeError(std::string(what) + " has " + std::to_string(s.bins) + " mel bins, model expects " +
                     std::to_string(cfg.n_mels));
  if (s.frames == 0) throw InvalidInput(std::string(what) + " has no frames");
}

}  // namespace

void check_style(const ModelConfig& cfg, int style) {
  if (style < 0 || static_cast<std::size_t>(style) >= cfg.n_styles)
    throw InvalidInput("style id " + std::to_string(style) + " outside [0, " + std::to_string(cfg.n_styles) + ")");
}

template <typename T>
SourceBatch<T> source_batch(const dsp::Spectrogram& x, int style) {
  SourceBatch<T> out;
  for (std::size_t t = 0; t < x.frames; ++t) out.frames.push_back(frame_tensor<T>(x, t));
  out.lengths = {x.frames};
  out.styles = {style};
  return out;
}

template <typename T>
SourceBatch<T> source_batch(const data::PaddedBatch& batch) {
  SourceBatch<T> out;
  for (std::size_t t = 0; t < batch.source_frames; ++t)
    out.frames.push_back(rows_at<T>(batch.source, batch.size, batch.source_frames, batch.n_mels, t));
  out.lengths = batch.source_lengths;
  out.styles = batch.source_styles;
  return out;
}

template <typename T>
EncoderState<T> encode(const ModelParams<T>& p, const SourceBatch<T>& x) {
  const auto& cfg = p.config;
  const std::size_t batch = x.batch();
  if (batch == 0) throw InvalidInput("encode: empty batch");
  const std::size_t r = cfg.reduction_factor();
  for (auto len : x.lengths) {
    if (len < r || len > x.frames.size())
      throw InvalidInput("input too short: " + std::to_string(len) + " frames, reduction factor needs at least " +
                         std::to_string(r));
  }
  const auto style = one_hot<T>(cfg, x.styles);

  std::vector<Tensor<T>> frames = x.frames;
  std::vector<std::size_t> lengths = x.lengths;
  std::size_t width = cfg.n_mels;
  for (std::size_t l = 0; l < cfg.conv_layers.size(); ++l) {
    const auto& layer = cfg.conv_layers[l];
    const std::size_t out_len = ceil_div(frames.size(), layer.stride);
    for (auto& len : lengths) len = ceil_div(len, layer.stride);
    const auto zero = Tensor<T>::zeros({batch, width});
    const auto half = static_cast<std::ptrdiff_t>(layer.kernel / 2);
    std::vector<Tensor<T>> next;
    next.reserve(out_len);
    for (std::size_t t = 0; t < out_len; ++t) {
      std::vector<Tensor<T>> taps;
      for (std::size_t k = 0; k < layer.kernel; ++k) {
        const auto idx = static_cast<std::ptrdiff_t>(t * layer.stride + k) - half;
        const bool inside = idx >= 0 && idx < static_cast<std::ptrdiff_t>(frames.size());
        taps.push_back(inside ? frames[static_cast<std::size_t>(idx)] : zero);
      }
      const auto window = taps.size() == 1 ? taps[0] : ad::concat(taps);
      next.push_back(mask_rows(ad::relu(dense(p.conv[l], window)), t, lengths));
    }
    frames = std::move(next);
    width = layer.channels;
  }
  for (auto& f : frames) f = ad::concat({f, style});

  auto h = run_lstm(p.encoder[0], frames, lengths);
  for (std::size_t l = 1; l < p.encoder.size(); ++l) {
    const auto zero = Tensor<T>::zeros(h[0].shape());
    std::vector<Tensor<T>> pairs;
    for (std::size_t i = 0; 2 * i < h.size(); ++i)
      pairs.push_back(ad::concat({h[2 * i], 2 * i + 1 < h.size() ? h[2 * i + 1] : zero}));
    for (auto& len : lengths) len = ceil_div(len, 2);
    h = run_lstm(p.encoder[l], pairs, lengths);
  }

  EncoderState<T> enc;
  enc.lengths = lengths;
  enc.mask.assign(batch * h.size(), 0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < lengths[b]; ++j) enc.mask[b * h.size() + j] = 1;

  const std::set<std::size_t> last(lengths.begin(), lengths.end());
  if (last.size() == 1) {
    enc.final_state = h[*last.begin() - 1];
  } else {
    for (auto len : last) {
      std::vector<T> sel(batch);
      for (std::size_t b = 0; b < batch; ++b) sel[b] = lengths[b] == len ? T(1) : T(0);
      auto term = ad::mul(h[len - 1], Tensor<T>({batch, 1}, std::move(sel)));
      enc.final_state = enc.final_state.defined() ? ad::add(enc.final_state, term) : term;
    }
  }
  enc.hidden = std::move(h);
  return enc;
}

template <typename T>
EncoderState<T> encode(const ModelParams<T>& p, const dsp::Spectrogram& x, int source_style) {
  check_log_mel(p.config, x, "encoder input");
  return encode(p, source_batch<T>(x, source_style));
}

template <typename T>
AttentionMemory<T> attention_memory(const ModelParams<T>& p, const EncoderState<T>& enc) {
  AttentionMemory<T> m;
  m.encoder = &enc;
  const auto& ap = p.attention;
  for (const auto& h : enc.hidden) {
    if (p.config.attention == AttentionKind::additive)
      m.keys.push_back(ad::add(ad::matmul(h, ap.V), ap.b));
    else
      m.keys.push_back(ad::tanh(ad::add(ad::matmul(h, ap.V), ap.key_bias)));
  }
  return m;
}

template <typename T>
Attention<T> attend(const Tensor<T>& s_prev, const AttentionMemory<T>& memory, const AttentionParams<T>& ap,
                    AttentionKind kind) {
  if (!memory.encoder || memory.encoder->length() == 0) throw InvalidInput("attend: empty encoder sequence");
  const auto& enc = *memory.encoder;
  if (memory.keys.size() != enc.length()) throw ShapeError("attend: memory keys do not match encoder length");
  if (s_prev.rank() != 2 || s_prev.dim(0) != enc.batch() || s_prev.dim(1) != ap.W.dim(0))
    throw ShapeError("attend: decoder state " + ad::shape_str(s_prev.shape()) + " incompatible with W " +
                     ad::shape_str(ap.W.shape()));
  std::vector<Tensor<T>> scores;
  scores.reserve(enc.length());
  if (kind == AttentionKind::additive) {
    const auto query = ad::matmul(s_prev, ap.W);
    for (const auto& key : memory.keys) scores.push_back(ad::matmul(ad::tanh(ad::add(query, key)), ap.w));
  } else {
    const auto query = ad::tanh(ad::add(ad::matmul(s_prev, ap.W), ap.b));
    const auto ones = Tensor<T>::full({ap.W.dim(1), 1}, T(1));
    for (const auto& key : memory.keys) scores.push_back(ad::matmul(ad::mul(query, key), ones));
  }
  Attention<T> out;
  out.alpha = ad::softmax(scores.size() == 1 ? scores[0] : ad::concat(scores), enc.mask);
  for (std::size_t j = 0; j < enc.length(); ++j) {
    auto term = ad::mul(enc.hidden[j], enc.length() == 1 ? out.alpha : ad::slice(out.alpha, j, j + 1));
    out.context = out.context.defined() ? ad::add(out.context, term) : term;
  }
  return out;
}

template <typename T>
DecoderState<T> initial_decoder_state(const ModelParams<T>& p, const EncoderState<T>& enc) {
  DecoderState<T> s;
  const auto zero = Tensor<T>::zeros({enc.batch(), p.config.hidden_size});
  for (const auto& bridge : p.bridge) {
    s.h.push_back(ad::tanh(dense(bridge, enc.final_state)));
    s.c.push_back(zero);
  }
  s.context = zero;
  return s;
}

template <typename T>
DecoderStep<T> decode_step(const ModelParams<T>& p, const Tensor<T>& y_prev, const DecoderState<T>& prev,
                           const std::vector<int>& target_styles, const AttentionMemory<T>& memory) {
  const auto& cfg = p.config;
  if (y_prev.rank() != 2 || y_prev.dim(1) != cfg.n_mels)
    throw ShapeError("decode_step: previous frame has shape " + ad::shape_str(y_prev.shape()) + ", expected [B," +
                     std::to_string(cfg.n_mels) + "]");
  if (target_styles.size() != y_prev.dim(0)) throw ShapeError("decode_step: one target style per batch row required");
  const auto style = one_hot<T>(cfg, target_styles);
  const auto att = attend(prev.h.back(), memory, p.attention, cfg.attention);

  DecoderStep<T> step;
  Tensor<T> x = ad::concat({y_prev, prev.context, style});
  for (std::size_t l = 0; l < p.decoder.size(); ++l) {
    auto cell = lstm_step(p.decoder[l], x, prev.h[l], prev.c[l]);
    step.state.h.push_back(cell.h);
    step.state.c.push_back(cell.c);
    x = cell.h;
  }
  step.state.context = att.context;
  step.alpha = att.alpha;
  step.frame = dense(p.output, ad::concat({x, att.context}));
  return step;
}

template <typename T>
Tensor<T> loss(const ModelParams<T>& p, const data::PaddedBatch& batch) {
  if (batch.size == 0 || batch.target_frames == 0) throw InvalidInput("loss: empty batch");
  if (batch.n_mels != p.config.n_mels) throw ShapeError("loss: batch mel width does not match the model");
  const auto enc = encode(p, source_batch<T>(batch));
  const auto memory = attention_memory(p, enc);
  auto state = initial_decoder_state(p, enc);
  const std::size_t b = batch.size;
  const std::size_t m = batch.n_mels;
  const std::size_t frames = batch.target_frames;

  std::vector<Tensor<T>> outputs;
  outputs.reserve(frames);
  Tensor<T> y_prev = Tensor<T>::zeros({b, m});
  for (std::size_t i = 0; i < frames; ++i) {
    auto step = decode_step(p, y_prev, state, batch.target_styles, memory);
    outputs.push_back(step.frame);
    state = std::move(step.state);
    y_prev = rows_at<T>(batch.target, b, frames, m, i);
  }

  std::vector<T> target(frames * b * m);
  std::vector<T> weights(frames * b);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t e = 0; e < b; ++e) {
      weights[i * b + e] = batch.target_mask[e * frames + i] ? T(1) : T(0);
      for (std::size_t k = 0; k < m; ++k) target[(i * b + e) * m + k] = static_cast<T>(batch.target[(e * frames + i) * m + k]);
    }
  const auto pred = outputs.size() == 1 ? outputs[0] : ad::concat(outputs, 0);
  return ad::mse_loss(pred, Tensor<T>({frames * b, m}, std::move(target)), weights);
}

template <typename T>
Tensor<T> example_loss(const ModelParams<T>& p, const data::TransformExample& ex) {
  check_log_mel(p.config, ex.target, "target");
  const auto enc = encode(p, ex.source, ex.source_style);
  const auto memory = attention_memory(p, enc);
  auto state = initial_decoder_state(p, enc);
  const std::vector<int> style{ex.target_style};
  Tensor<T> total;
  Tensor<T> y_prev = Tensor<T>::zeros({1, p.config.n_mels});
  for (std::size_t i = 0; i < ex.target.frames; ++i) {
    auto step = decode_step(p, y_prev, state, style, memory);
    y_prev = frame_tensor<T>(ex.target, i);
    auto term = ad::mse_loss(step.frame, y_prev);
    total = total.defined() ? ad::add(total, term) : term;
    state = std::move(step.state);
  }
  return ad::scale(total, T(1) / static_cast<T>(ex.target.frames));
}

TransformResult transform(const ModelParams<float>& p, const dsp::Spectrogram& x, int source_style, int target_style,
                          std::size_t max_frames) {
  const auto& cfg = p.config;
  check_style(cfg, target_style);
  const auto enc = encode(p, x, source_style);
  const auto memory = attention_memory(p, enc);
  auto state = initial_decoder_state(p, enc);
  const std::size_t budget = max_frames > 0 ? max_frames : cfg.decode_budget(x.frames);
  const std::vector<int> style{target_style};
  const std::size_t l = enc.length();

  std::vector<float> frames;
  std::vector<float> alphas;
  Tensor<float> y_prev = Tensor<float>::zeros({1, cfg.n_mels});
  for (std::size_t i = 0; i < budget; ++i) {
    auto step = decode_step(p, y_prev, state, style, memory);
    frames.insert(frames.end(), step.frame.values().begin(), step.frame.values().end());
    alphas.insert(alphas.end(), step.alpha.values().begin(), step.alpha.values().end());
    y_prev = step.frame;
    state = std::move(step.state);
  }

  const double threshold = std::log(2.0 * cfg.log_floor);
  std::size_t keep = budget;
  while (keep > 1) {
    double mean = 0;
    for (std::size_t k = 0; k < cfg.n_mels; ++k) mean += frames[(keep - 1) * cfg.n_mels + k];
    if (mean / static_cast<double>(cfg.n_mels) >= threshold) break;
    --keep;
  }
  frames.resize(keep * cfg.n_mels);
  alphas.resize(keep * l);

  TransformResult r;
  r.decoded_frames = budget;
  r.output.frames = keep;
  r.output.bins = cfg.n_mels;
  r.output.scale = dsp::Scale::log_mel;
  r.output.config = x.config;
  r.output.values = std::move(frames);
  r.attention.frames = keep;
  r.attention.bins = l;
  r.attention.scale = dsp::Scale::attention;
  r.attention.config = x.config;
  r.attention.values = std::move(alphas);
  return r;
}

std::vector<float> embed(const ModelParams<float>& p, const dsp::Spectrogram& x, int source_style) {
  const auto enc = encode(p, x, source_style);
  const auto v = enc.final_state.values();
  return {v.begin(), v.end()};
}

#define AUDIOMORPH_INSTANTIATE(T)                                                                                 \
  template SourceBatch<T> source_batch<T>(const dsp::Spectrogram&, int);                                        \
  template SourceBatch<T> source_batch<T>(const data::PaddedBatch&);                                            \
  template EncoderState<T> encode<T>(const ModelParams<T>&, const SourceBatch<T>&);                             \
  template EncoderState<T> encode<T>(const ModelParams<T>&, const dsp::Spectrogram&, int);                      \
  template AttentionMemory<T> attention_memory<T>(const ModelParams<T>&, const EncoderState<T>&);               \
  template Attention<T> attend<T>(const Tensor<T>&, const AttentionMemory<T>&, const AttentionParams<T>&,       \
                                  AttentionKind);                                                               \
  template DecoderState<T> initial_decoder_state<T>(const ModelParams<T>&, const EncoderState<T>&);             \
  template DecoderStep<T> decode_step<T>(const ModelParams<T>&, const Tensor<T>&, const DecoderState<T>&,       \
                                         const std::vector<int>&, const AttentionMemory<T>&);                   \
  template Tensor<T> loss<T>(const ModelParams<T>&, const data::PaddedBatch&);                                  \
  template Tensor<T> example_loss<T>(const ModelParams<T>&, const data::TransformExample&);

AUDIOMORPH_INSTANTIATE(float)
AUDIOMORPH_INSTANTIATE(double)

#undef AUDIOMORPH_INSTANTIATE

}  // namespace audiomorph::model
