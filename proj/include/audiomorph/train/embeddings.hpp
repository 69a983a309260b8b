#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "audiomorph/data/pairs.hpp"
#include "audiomorph/model/params.hpp"

namespace audiomorph::train {

struct EmbeddingRow {
  int content_id = 0;
  int style_id = 0;
  std::vector<float> values;
};

/// Encoder final state of every clip, in clip order.
std::vector<EmbeddingRow> export_embeddings(const model::ModelParams<float>& params, const std::vector<data::Clip>& clips);

/// Tab-separated with header content_id, style_id, e0 .. e{H-1}.
std::string embeddings_tsv(const std::vector<EmbeddingRow>& rows);
void write_embeddings_tsv(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows);
std::vector<EmbeddingRow> read_embeddings_tsv(const std::filesystem::path& path);

double cosine_distance(const std::vector<float>& a, const std::vector<float>& b);

struct ClusterDistances {
  double intra = 0;
  double inter = 0;
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
};

/// Mean cosine distance over distinct row pairs, split by whether the two
/// rows share a pitch class (content id modulo 12).
ClusterDistances pitch_class_distances(const std::vector<EmbeddingRow>& rows);

}  // namespace audiomorph::train
