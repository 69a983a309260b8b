#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "audiomorph/data/example.hpp"
#include "audiomorph/model/config.hpp"
#include "audiomorph/train/trainer.hpp"

namespace audiomorph::train {

struct AblationRow {
  double context_ms = 0;
  std::size_t reduction = 0;
  double mean_mcd_per_frame = 0;
  double ci95_per_frame = 0;
  double mean_mcd_paper = 0;
  double ci95_paper = 0;
  std::string status = "ok";  // "failed: <reason>" when the run did not finish
};

/// 1.96 times the standard error (sample standard deviation over sqrt(n)).
double ci95(const std::vector<double>& values);

struct AblationData {
  std::vector<data::TransformExample> train_pairs;
  std::vector<data::TransformExample> eval_pairs;
  dsp::FeatureConfig features;
};

/// Trains and evaluates one model per context size, each in
/// `out_dir/context_<ms>`. A failing run yields a failed row.
std::vector<AblationRow> ablate_context(const model::ModelConfig& base, const TrainConfig& tc, const AblationData& data,
                                        const std::vector<double>& contexts_ms, const std::filesystem::path& out_dir,
                                        std::size_t jobs = 1);

/// Header: context_ms,reduction,mean_mcd_per_frame,ci95_per_frame,mean_mcd_paper,ci95_paper,status
std::string ablation_csv(const std::vector<AblationRow>& rows);
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace audiomorph::train
