#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "audiomorph/data/example.hpp"
#include "audiomorph/data/manifest.hpp"
#include "audiomorph/dsp/mel.hpp"
#include "audiomorph/model/checkpoint.hpp"
#include "audiomorph/model/config.hpp"
#include "json.hpp"

namespace audiomorph::train {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double decay = 0.99;
  std::uint64_t seed = 7;
  std::size_t checkpoint_every_n_epochs = 1;
  data::Split eval_split = data::Split::test;
  /// Epochs of identity-pair (autoencoder) training before the main phase.
  std::size_t pretrain_epochs = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct StepLog {
  std::uint64_t step = 0;  // 1-based global optimizer step
  std::size_t epoch = 0;   // 0-based epoch containing the step
  double loss = 0;
  double learning_rate = 0;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume_from;
  /// Stop cleanly after this many global steps (0: run all epochs).
  std::uint64_t stop_after_steps = 0;
  dsp::FeatureConfig features;
  std::function<void(const StepLog&)> on_step;
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  std::vector<StepLog> steps;  // steps run by this call
  std::vector<double> epoch_losses;  // all completed epochs, including resumed ones
  double wall_seconds = 0;
};

inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kLossCsvFile = "loss.csv";

/// Teacher-forced Adam training on `pairs`. Writes model.ckpt at every
/// checkpoint epoch and loss.csv (header step,epoch,loss,learning_rate)
/// into `out_dir`. A non-finite loss throws DivergenceError and leaves the
/// last good checkpoint in place.
TrainResult train(const model::ModelConfig& mc, const TrainConfig& tc, const std::vector<data::TransformExample>& pairs,
                  const std::filesystem::path& out_dir, const TrainOptions& opts = {});

/// Identity (A to A) pairs derived from the clips in `pairs`.
std::vector<data::TransformExample> identity_pairs(const std::vector<data::TransformExample>& pairs);

}  // namespace audiomorph::train
