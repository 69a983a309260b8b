#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "audiomorph/autodiff/adam.hpp"
#include "audiomorph/dsp/mel.hpp"
#include "audiomorph/model/params.hpp"
#include "json.hpp"

namespace audiomorph::model {

inline constexpr char kCheckpointMagic[] = "AMCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;
  ad::AdamState optimizer;
  std::uint64_t epoch = 0;  // completed epochs
  std::vector<double> epoch_losses;
  dsp::FeatureConfig features;
  std::vector<int> trained_styles;
  nlohmann::json train_config = nlohmann::json::object();
};

/// Layout: magic, u32 version, u32 header length, JSON header, f32
/// parameters in manifest order, then Adam m and v blobs in the same order.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file so an interrupted save keeps the old one.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const dsp::FeatureConfig& cfg);
dsp::FeatureConfig feature_config_from_json(const nlohmann::json& j);

}  // namespace audiomorph::model
