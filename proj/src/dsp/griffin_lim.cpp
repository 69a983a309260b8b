#include "audiomorph/dsp/griffin_lim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "audiomorph/dsp/fft.hpp"
#include "audiomorph/dsp/stft.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

namespace {

using Complex = std::complex<double>;

struct Frames {
  std::size_t count;
  std::size_t bins;
  std::vector<Complex> data;  // count x bins
};

Frames analyse(const std::vector<double>& x, std::size_t frames, const std::vector<double>& window,
               std::size_t hop, RealFft& fft) {
  Frames f{frames, fft.bins(), std::vector<Complex>(frames * fft.bins())};
  std::vector<double> buf(window.size());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < window.size(); ++n) buf[n] = x[t * hop + n] * window[n];
    fft.forward(buf, std::span<Complex>(f.data.data() + t * f.bins, f.bins));
  }
  return f;
}

// Bins 1..n/2-1 stand for two conjugate bins of the full spectrum.
double bin_weight(std::size_t k, std::size_t bins) { return (k == 0 || k + 1 == bins) ? 1.0 : 2.0; }

double objective(const Frames& est, const Spectrogram& target) {
  double acc = 0.0;
  for (std::size_t t = 0; t < est.count; ++t)
    for (std::size_t k = 0; k < est.bins; ++k) {
      const double d = std::abs(est.data[t * est.bins + k]) - static_cast<double>(target.at(t, k));
      acc += bin_weight(k, est.bins) * d * d;
    }
  return std::sqrt(acc);
}

}  // namespace

std::vector<double> istft_least_squares(const std::vector<Complex>& spectra, std::size_t frames,
                                        const StftConfig& cfg) {
  cfg.validate();
  const std::size_t win = cfg.window_length();
  const std::size_t hop = cfg.hop_length();
  const std::size_t bins = cfg.bins();
  if (spectra.size() != frames * bins) throw ShapeError("istft: spectra size mismatch");
  if (frames == 0) return {};
  const auto window = hann_window(win);
  RealFft fft(cfg.fft_size);
  const std::size_t length = (frames - 1) * hop + win;
  std::vector<double> out(length, 0.0), norm(length, 0.0), buf(cfg.fft_size);
  const double scale = 1.0 / static_cast<double>(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    fft.inverse(std::span<const Complex>(spectra.data() + t * bins, bins), buf);
    for (std::size_t n = 0; n < win; ++n) {
      out[t * hop + n] += window[n] * buf[n] * scale;
      norm[t * hop + n] += window[n] * window[n];
    }
  }
  for (std::size_t n = 0; n < length; ++n) out[n] = norm[n] > 1e-12 ? out[n] / norm[n] : 0.0;
  return out;
}

GriffinLimResult griffin_lim_trace(const Spectrogram& target_mag, int n_iters, std::uint64_t seed) {
  if (n_iters < 1) throw InvalidInput("griffin_lim: n_iters must be >= 1");
  if (target_mag.scale != Scale::linear_magnitude)
    throw InvalidInput("griffin_lim: expected a linear-magnitude spectrogram");
  const StftConfig& cfg = target_mag.config;
  cfg.validate();
  if (target_mag.bins != cfg.bins()) throw ShapeError("griffin_lim: bin count does not match fft_size");
  if (target_mag.frames == 0) throw InvalidInput("griffin_lim: empty spectrogram");

  const std::size_t frames = target_mag.frames, bins = target_mag.bins;
  const std::size_t hop = cfg.hop_length();
  const auto window = hann_window(cfg.window_length());
  RealFft fft(cfg.fft_size);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  std::vector<Complex> y(frames * bins);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = std::polar(static_cast<double>(target_mag.values[i]), phase(rng));
  GriffinLimResult result;
  std::vector<double> x = istft_least_squares(y, frames, cfg);
  for (int k = 0;; ++k) {
    Frames est = analyse(x, frames, window, hop, fft);
    result.objective.push_back(objective(est, target_mag));
    if (k == n_iters) break;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double mag = std::abs(est.data[i]);
      const Complex unit = mag > 0.0 ? est.data[i] / mag : Complex(1.0, 0.0);
      y[i] = static_cast<double>(target_mag.values[i]) * unit;
    }
    x = istft_least_squares(y, frames, cfg);
  }
  result.waveform = deemphasize(Waveform{std::move(x), cfg.sample_rate_hz}, cfg.preemphasis);
  return result;
}

Waveform griffin_lim(const Spectrogram& target_mag, int n_iters, std::uint64_t seed) {
  return griffin_lim_trace(target_mag, n_iters, seed).waveform;
}

}  // namespace audiomorph::dsp
