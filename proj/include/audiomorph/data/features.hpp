#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "audiomorph/data/manifest.hpp"
#include "audiomorph/dsp/mel.hpp"

namespace audiomorph::data {

/// Content-addressed AMSPEC1 store for log-mel features.
struct FeatureCache {
  std::filesystem::path dir;

  /// AUDIOMORPH_CACHE if set, else `fallback`.
  static FeatureCache locate(const std::filesystem::path& fallback);
  std::filesystem::path entry_path(std::uint64_t key) const;
};

std::uint64_t feature_key(std::span<const std::uint8_t> wav_bytes, const dsp::FeatureConfig& cfg);

/// Log-mel features for one entry. WAV entries go through the cache when
/// one is given; spec entries are read as stored.
dsp::Spectrogram load_features(const Manifest& m, const ManifestEntry& e, const dsp::FeatureConfig& cfg,
                               const FeatureCache* cache);

/// Features for `entries` in order, extracted on up to `jobs` threads.
std::vector<dsp::Spectrogram> load_features(const Manifest& m, std::span<const ManifestEntry> entries,
                                            const dsp::FeatureConfig& cfg, const FeatureCache* cache,
                                            std::size_t jobs = 1);

}  // namespace audiomorph::data
