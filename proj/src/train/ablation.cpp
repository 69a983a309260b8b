#include "audiomorph/train/ablation.hpp"

#include <cmath>
#include <sstream>

#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"
#include "audiomorph/train/evaluate.hpp"

namespace audiomorph::train {

double ci95(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(n));
}

std::vector<AblationRow> ablate_context(const model::ModelConfig& base, const TrainConfig& tc, const AblationData& data,
                                        const std::vector<double>& contexts_ms, const std::filesystem::path& out_dir,
                                        std::size_t jobs) {
  for (double c : contexts_ms) model::for_context(c);  // rejects unsupported sizes up front
  std::vector<AblationRow> rows;
  for (double c : contexts_ms) {
    AblationRow row;
    row.context_ms = c;
    const auto cfg = model::for_context(c, base);
    row.reduction = cfg.reduction_factor();
    try {
      std::ostringstream name;
      name << "context_" << c;
      TrainOptions opts;
      opts.features = data.features;
      const auto run = train(cfg, tc, data.train_pairs, out_dir / name.str(), opts);
      const auto report = evaluate(model::load_checkpoint(run.checkpoint), data.eval_pairs,
                                   mean_target_frame(data.train_pairs), jobs);
      std::vector<double> per_frame, paper;
      for (const auto& e : report.examples) {
        per_frame.push_back(e.model.per_frame);
        paper.push_back(e.model.paper);
      }
      row.mean_mcd_per_frame = report.mean_model.per_frame;
      row.mean_mcd_paper = report.mean_model.paper;
      row.ci95_per_frame = ci95(per_frame);
      row.ci95_paper = ci95(paper);
    } catch (const std::exception& e) {
      row.mean_mcd_per_frame = row.ci95_per_frame = row.mean_mcd_paper = row.ci95_paper = std::nan("");
      row.status = std::string("failed: ") + e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream o;
  o << "context_ms,reduction,mean_mcd_per_frame,ci95_per_frame,mean_mcd_paper,ci95_paper,status\n";
  o.precision(10);
  for (const auto& r : rows) {
    std::string status = r.status;
    for (auto& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    o << r.context_ms << ',' << r.reduction << ',' << r.mean_mcd_per_frame << ',' << r.ci95_per_frame << ','
      << r.mean_mcd_paper << ',' << r.ci95_paper << ',' << status << '\n';
  }
  return o.str();
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  const auto text = ablation_csv(rows);
  dsp::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace audiomorph::train
