#include "audiomorph/dsp/stft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "audiomorph/dsp/fft.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

std::size_t StftConfig::window_length() const {
  return static_cast<std::size_t>(std::lround(window_ms * sample_rate_hz / 1000.0));
}

std::size_t StftConfig::hop_length() const {
  return static_cast<std::size_t>(std::lround(hop_ms * sample_rate_hz / 1000.0));
}

void StftConfig::validate() const {
  if (sample_rate_hz <= 0) throw InvalidInput("stft: sample rate must be positive");
  if (!(window_ms > 0.0) || !(hop_ms > 0.0)) throw InvalidInput("stft: window and hop must be positive");
  if (hop_ms > window_ms) throw InvalidInput("stft: hop must not exceed the window");
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw InvalidInput("stft: fft_size must be a power of two");
  if (window_length() > fft_size) throw InvalidInput("stft: window longer than fft_size");
  if (hop_length() == 0) throw InvalidInput("stft: hop rounds to zero samples");
  if (!(preemphasis >= 0.0 && preemphasis < 1.0)) throw InvalidInput("stft: preemphasis must be in [0, 1)");
}

namespace {
void check_finite(const Waveform& w, const char* what) {
  for (double s : w.samples)
    if (!std::isfinite(s)) throw InvalidInput(std::string(what) + ": non-finite input sample");
}
void check_coeff(double coeff) {
  if (!(coeff >= 0.0 && coeff < 1.0)) throw InvalidInput("pre-emphasis coefficient must be in [0, 1)");
}
}  // namespace

Waveform preemphasize(const Waveform& w, double coeff) {
  check_coeff(coeff);
  check_finite(w, "preemphasize");
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate_hz};
  for (std::size_t n = 0; n < w.samples.size(); ++n)
    out.samples[n] = n == 0 ? w.samples[0] : w.samples[n] - coeff * w.samples[n - 1];
  return out;
}

Waveform deemphasize(const Waveform& w, double coeff) {
  check_coeff(coeff);
  check_finite(w, "deemphasize");
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate_hz};
  double prev = 0.0;
  for (std::size_t n = 0; n < w.samples.size(); ++n) {
    prev = w.samples[n] + coeff * prev;
    out.samples[n] = prev;
  }
  return out;
}

Waveform normalize_peak(const Waveform& w) {
  check_finite(w, "normalize_peak");
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  Waveform out = w;
  if (peak > 0.0)
    for (double& s : out.samples) s /= peak;
  return out;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

std::size_t frame_count(std::size_t length, std::size_t window, std::size_t hop) {
  if (length < window || hop == 0) return 0;
  return 1 + (length - window) / hop;
}

Spectrogram stft_magnitude(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  check_finite(w, "stft");
  if (w.sample_rate_hz != cfg.sample_rate_hz)
    throw InvalidInput("stft: waveform rate " + std::to_string(w.sample_rate_hz) +
                       " Hz does not match config rate " + std::to_string(cfg.sample_rate_hz) + " Hz");
  const std::size_t win = cfg.window_length();
  const std::size_t hop = cfg.hop_length();
  const std::size_t frames = frame_count(w.samples.size(), win, hop);
  if (frames == 0)
    throw InvalidInput("stft: waveform of " + std::to_string(w.samples.size()) +
                       " samples is shorter than one window (" + std::to_string(win) + ")");

  const auto window = hann_window(win);
  RealFft fft(cfg.fft_size);
  Spectrogram out(frames, cfg.bins(), Scale::linear_magnitude, cfg);
  std::vector<double> buf(win);
  std::vector<std::complex<double>> spec(cfg.bins());
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = w.samples.data() + t * hop;
    for (std::size_t n = 0; n < win; ++n) buf[n] = x[n] * window[n];
    fft.forward(buf, spec);
    auto row = out.frame(t);
    for (std::size_t k = 0; k < spec.size(); ++k) row[k] = static_cast<float>(std::abs(spec[k]));
  }
  return out;
}

}  // namespace audiomorph::dsp
