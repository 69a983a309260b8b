#include "audiomorph/train/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"
#include "audiomorph/model/seq2seq.hpp"

namespace audiomorph::train {

std::vector<EmbeddingRow> export_embeddings(const model::ModelParams<float>& params, const std::vector<data::Clip>& clips) {
  std::vector<EmbeddingRow> rows;
  rows.reserve(clips.size());
  for (const auto& c : clips)
    rows.push_back({c.entry.content_id, c.entry.style_id, model::embed(params, c.features, c.entry.style_id)});
  return rows;
}

std::string embeddings_tsv(const std::vector<EmbeddingRow>& rows) {
  std::ostringstream o;
  o << "content_id\tstyle_id";
  const std::size_t width = rows.empty() ? 0 : rows[0].values.size();
  for (std::size_t k = 0; k < width; ++k) o << "\te" << k;
  o << '\n';
  o.precision(9);
  for (const auto& r : rows) {
    if (r.values.size() != width) throw ShapeError("embedding rows differ in width");
    o << r.content_id << '\t' << r.style_id;
    for (float v : r.values) o << '\t' << v;
    o << '\n';
  }
  return o.str();
}

void write_embeddings_tsv(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows) {
  const auto text = embeddings_tsv(rows);
  dsp::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<EmbeddingRow> read_embeddings_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("content_id\tstyle_id", 0) != 0)
    throw FormatError(path.string() + ": missing embedding header");
  std::vector<EmbeddingRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    EmbeddingRow r;
    if (!(fields >> r.content_id >> r.style_id)) throw FormatError(path.string() + ": malformed row");
    float v;
    while (fields >> v) r.values.push_back(v);
    rows.push_back(std::move(r));
  }
  return rows;
}

double cosine_distance(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine distance of vectors with different lengths");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

ClusterDistances pitch_class_distances(const std::vector<EmbeddingRow>& rows) {
  ClusterDistances d;
  auto pitch_class = [](int c) { return ((c % 12) + 12) % 12; };
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double dist = cosine_distance(rows[i].values, rows[j].values);
      if (pitch_class(rows[i].content_id) == pitch_class(rows[j].content_id)) {
        d.intra += dist;
        ++d.intra_pairs;
      } else {
        d.inter += dist;
        ++d.inter_pairs;
      }
    }
  if (d.intra_pairs) d.intra /= static_cast<double>(d.intra_pairs);
  if (d.inter_pairs) d.inter /= static_cast<double>(d.inter_pairs);
  return d;
}

}  // namespace audiomorph::train
