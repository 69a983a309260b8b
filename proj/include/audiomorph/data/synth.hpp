#pragma once

#include <cstdint>
#include <filesystem>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "audiomorph/data/manifest.hpp"
#include "audiomorph/dsp/types.hpp"

namespace audiomorph::data {

enum class Waveshape { sine, sawtooth, square, triangle };

struct Formant {
  double center_hz = 0;
  double bandwidth_hz = 0;
  double gain = 0;  // linear boost at the center

  bool operator==(const Formant&) const = default;
};

struct Timbre {
  Waveshape shape = Waveshape::sine;
  std::optional<std::array<Formant, 2>> formants;

  std::string name() const;
  bool operator==(const Timbre&) const = default;
};

struct SynthConfig {
  std::vector<Timbre> styles;
  std::vector<int> pitches;
  std::vector<int> holdout_pitches;
  double duration_ms = 250.0;
  double attack_ms = 20.0;
  double decay_ms = 80.0;
  double amplitude = 0.5;
  double noise_floor = 1e-3;
  int sample_rate_hz = dsp::kDefaultSampleRate;
  std::uint64_t seed = 7;

  void validate() const;

  /// `n_styles` timbres (the four waveshapes, then formant variants),
  /// contiguous MIDI pitches from 48, and `n_holdout` evenly spread
  /// held-out pitches.
  static SynthConfig standard(std::size_t n_styles, std::size_t n_pitches, std::size_t n_holdout, std::uint64_t seed);
};

double midi_to_hz(int pitch);

/// `count` of `pitches` spread evenly across the range.
std::vector<int> spread_holdout(const std::vector<int>& pitches, std::size_t count);

/// Band-limited additive rendering of one (style, pitch) clip.
dsp::Waveform render_clip(const SynthConfig& cfg, std::size_t style, int pitch);

/// Writes `style<s>_midi<p>.wav` per pair plus manifest.jsonl and returns
/// the manifest entries.
std::vector<ManifestEntry> synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace audiomorph::data
