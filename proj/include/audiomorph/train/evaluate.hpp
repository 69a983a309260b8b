#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "audiomorph/data/example.hpp"
#include "audiomorph/data/features.hpp"
#include "audiomorph/data/manifest.hpp"
#include "audiomorph/model/checkpoint.hpp"
#include "json.hpp"

namespace audiomorph::train {

struct McdPair {
  double per_frame = 0;
  double paper = 0;
};

struct ExampleScore {
  int content_id = 0;
  int source_style = 0;
  int target_style = 0;
  std::size_t predicted_frames = 0;
  std::size_t target_frames = 0;
  std::size_t compared_frames = 0;  // min of the two
  McdPair model;
  McdPair identity;    // prediction = source
  McdPair mean_frame;  // prediction = training mean target frame, tiled
};

struct EvalReport {
  std::string split;
  std::vector<ExampleScore> examples;
  McdPair mean_model;
  McdPair mean_identity;
  McdPair mean_mean_frame;
  double mean_truncated_frames = 0;
  std::vector<double> loss_curve;
  double wall_seconds = 0;

  nlohmann::json to_json() const;
};

/// MCD in both modes over the first min(T_pred, T_target) frames.
McdPair aligned_mcd(const dsp::Spectrogram& target, const dsp::Spectrogram& prediction);

/// Mean of every target frame across `pairs`.
std::vector<float> mean_target_frame(const std::vector<data::TransformExample>& pairs);

/// Identity and mean-frame baselines; depends only on the data.
void score_baselines(const data::TransformExample& pair, const std::vector<float>& mean_frame, ExampleScore& out);

/// Free-running transform of every pair plus baselines. Examples keep the
/// order of `pairs` regardless of `jobs`; styles the checkpoint was not
/// trained on throw UnseenStyleError.
EvalReport evaluate(const model::Checkpoint& ckpt, const std::vector<data::TransformExample>& pairs,
                    const std::vector<float>& mean_frame, std::size_t jobs = 1);

/// Loads features for the train split (mean frame) and `split` (scored pairs).
EvalReport evaluate(const std::filesystem::path& checkpoint, const data::Manifest& manifest, data::Split split,
                    const data::FeatureCache* cache, std::size_t jobs = 1);

}  // namespace audiomorph::train
