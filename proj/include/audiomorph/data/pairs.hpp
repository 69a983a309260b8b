#pragma once

#include <string>
#include <vector>

#include "audiomorph/data/example.hpp"
#include "audiomorph/data/features.hpp"
#include "audiomorph/data/manifest.hpp"

namespace audiomorph::data {

struct Clip {
  ManifestEntry entry;
  dsp::Spectrogram features;
};

/// All ordered style pairs per content id, in manifest order. Content seen
/// in only one style is skipped and reported through `warnings`.
std::vector<TransformExample> build_pairs(const std::vector<Clip>& clips, bool identity_pairs,
                                          std::vector<std::string>* warnings = nullptr);

/// Loads the features of one split and pairs them.
std::vector<Clip> load_clips(const Manifest& m, Split split, const dsp::FeatureConfig& cfg,
                             const FeatureCache* cache, std::size_t jobs = 1);

}  // namespace audiomorph::data
