#include "audiomorph/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "audiomorph/detail/bytes.hpp"
#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::data {

namespace {

const char* shape_name(Waveshape s) {
  switch (s) {
    case Waveshape::sine: return "sine";
    case Waveshape::sawtooth: return "sawtooth";
    case Waveshape::square: return "square";
    case Waveshape::triangle: return "triangle";
  }
  return "?";
}

// Fourier-series weight of harmonic k (1-based).
double harmonic_weight(Waveshape s, std::size_t k) {
  const double kd = static_cast<double>(k);
  switch (s) {
    case Waveshape::sine: return k == 1 ? 1.0 : 0.0;
    case Waveshape::sawtooth: return (k % 2 ? 1.0 : -1.0) / kd;
    case Waveshape::square: return k % 2 ? 1.0 / kd : 0.0;
    case Waveshape::triangle: return k % 2 ? ((k / 2) % 2 ? -1.0 : 1.0) / (kd * kd) : 0.0;
  }
  return 0.0;
}

double formant_gain(const Timbre& t, double hz) {
  if (!t.formants) return 1.0;
  double g = 1.0;
  for (const auto& f : *t.formants) {
    const double z = (hz - f.center_hz) / f.bandwidth_hz;
    g += f.gain * std::exp(-0.5 * z * z);
  }
  return g;
}

}  // namespace

std::string Timbre::name() const {
  std::string n = shape_name(shape);
  if (formants) n += "+formants" + std::to_string(static_cast<int>((*formants)[0].center_hz));
  return n;
}

double midi_to_hz(int pitch) { return 440.0 * std::pow(2.0, (pitch - 69) / 12.0); }

void SynthConfig::validate() const {
  if (styles.size() < 2) throw InvalidInput("synth: at least 2 styles required");
  if (pitches.size() < 2) throw InvalidInput("synth: at least 2 pitches required");
  const std::set<int> unique(pitches.begin(), pitches.end());
  if (unique.size() != pitches.size()) throw InvalidInput("synth: duplicate pitch");
  for (int p : pitches) {
    if (p < 0 || p > 127) throw InvalidInput("synth: MIDI pitch " + std::to_string(p) + " outside [0, 127]");
    if (midi_to_hz(p) >= sample_rate_hz / 2.0) throw InvalidInput("synth: pitch above Nyquist");
  }
  for (int p : holdout_pitches)
    if (!unique.count(p)) throw InvalidInput("synth: held-out pitch " + std::to_string(p) + " not in pitch list");
  if (std::set<int>(holdout_pitches.begin(), holdout_pitches.end()).size() >= unique.size())
    throw InvalidInput("synth: holding out every pitch leaves no training data");
  if (!(duration_ms > 0) || attack_ms < 0 || decay_ms < 0 || attack_ms + decay_ms > duration_ms)
    throw InvalidInput("synth: envelope does not fit the clip duration");
  if (!(amplitude > 0 && amplitude <= 1)) throw InvalidInput("synth: amplitude must be in (0, 1]");
  if (noise_floor < 0) throw InvalidInput("synth: noise_floor must be non-negative");
  if (sample_rate_hz <= 0) throw InvalidInput("synth: sample rate must be positive");
  for (const auto& t : styles)
    if (t.formants)
      for (const auto& f : *t.formants)
        if (!(f.bandwidth_hz > 0)) throw InvalidInput("synth: formant bandwidth must be positive");
}

std::vector<int> spread_holdout(const std::vector<int>& pitches, std::size_t count) {
  if (count > pitches.size()) throw InvalidInput("cannot hold out more pitches than exist");
  std::vector<int> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(pitches[(2 * k + 1) * pitches.size() / (2 * count)]);
  return out;
}

SynthConfig SynthConfig::standard(std::size_t n_styles, std::size_t n_pitches, std::size_t n_holdout,
                                  std::uint64_t seed) {
  SynthConfig c;
  constexpr Waveshape shapes[] = {Waveshape::sine, Waveshape::sawtooth, Waveshape::square, Waveshape::triangle};
  for (std::size_t i = 0; i < n_styles; ++i) {
    Timbre t{shapes[i % 4], std::nullopt};
    if (i >= 4) {
      const double shift = static_cast<double>(i / 4);
      t.formants = std::array<Formant, 2>{Formant{500.0 * shift, 150.0, 4.0}, Formant{1800.0 * shift, 300.0, 2.5}};
    }
    c.styles.push_back(t);
  }
  for (std::size_t i = 0; i < n_pitches; ++i) c.pitches.push_back(48 + static_cast<int>(i));
  c.holdout_pitches = spread_holdout(c.pitches, n_holdout);
  c.seed = seed;
  return c;
}

dsp::Waveform render_clip(const SynthConfig& cfg, std::size_t style, int pitch) {
  if (style >= cfg.styles.size()) throw InvalidInput("synth: style index out of range");
  const auto& timbre = cfg.styles[style];
  const double sr = cfg.sample_rate_hz;
  const double f0 = midi_to_hz(pitch);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_ms * sr / 1000.0));

  dsp::Waveform w;
  w.sample_rate_hz = cfg.sample_rate_hz;
  w.samples.assign(n, 0.0);
  for (std::size_t k = 1; static_cast<double>(k) * f0 < sr / 2.0; ++k) {
    const double a = harmonic_weight(timbre.shape, k) * formant_gain(timbre, static_cast<double>(k) * f0);
    if (a == 0.0) continue;
    const double step = 2.0 * std::numbers::pi * static_cast<double>(k) * f0 / sr;
    for (std::size_t i = 0; i < n; ++i) w.samples[i] += a * std::sin(step * static_cast<double>(i));
  }
  double peak = 0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  const double attack = cfg.attack_ms * sr / 1000.0;
  const double decay = cfg.decay_ms * sr / 1000.0;
  std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64((static_cast<std::uint64_t>(style) << 32) |
                                                                       static_cast<std::uint32_t>(pitch))));
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    double env = 1.0;
    if (attack > 0 && t < attack) env = t / attack;
    const double left = static_cast<double>(n - 1) - t;
    if (decay > 0 && left < decay) env = std::min(env, left / decay);
    const double tone = peak > 0 ? w.samples[i] / peak : 0.0;
    w.samples[i] = cfg.amplitude * env * tone + cfg.noise_floor * noise(rng);
  }
  return w;
}

std::vector<ManifestEntry> synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string() + (ec ? ": " + ec.message() : ""));
  const std::set<int> held(cfg.holdout_pitches.begin(), cfg.holdout_pitches.end());
  std::vector<ManifestEntry> entries;
  for (std::size_t s = 0; s < cfg.styles.size(); ++s)
    for (int p : cfg.pitches) {
      ManifestEntry e;
      e.audio_path = "style" + std::to_string(s) + "_midi" + std::to_string(p) + ".wav";
      e.style_id = static_cast<int>(s);
      e.content_id = p;
      e.split = held.count(p) ? Split::test : Split::train;
      dsp::write_wav(out_dir / e.audio_path, render_clip(cfg, s, p));
      entries.push_back(std::move(e));
    }
  write_manifest(out_dir / "manifest.jsonl", entries);
  return entries;
}

}  // namespace audiomorph::data
