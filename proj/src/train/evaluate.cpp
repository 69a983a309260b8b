#include "audiomorph/train/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "audiomorph/data/pairs.hpp"
#include "audiomorph/dsp/mcd.hpp"
#include "audiomorph/error.hpp"
#include "audiomorph/model/seq2seq.hpp"

namespace audiomorph::train {

using nlohmann::json;

namespace {

dsp::Spectrogram leading(const dsp::Spectrogram& s, std::size_t frames) {
  dsp::Spectrogram out(frames, s.bins, s.scale, s.config);
  std::copy_n(s.values.begin(), frames * s.bins, out.values.begin());
  return out;
}

json mcd_json(const McdPair& m) { return {{"per_frame", m.per_frame}, {"paper", m.paper}}; }

McdPair mean_of(const std::vector<ExampleScore>& ex, McdPair ExampleScore::*field) {
  McdPair out;
  if (ex.empty()) return out;
  for (const auto& e : ex) {
    out.per_frame += (e.*field).per_frame;
    out.paper += (e.*field).paper;
  }
  out.per_frame /= static_cast<double>(ex.size());
  out.paper /= static_cast<double>(ex.size());
  return out;
}

}  // namespace

json EvalReport::to_json() const {
  json ex = json::array();
  for (const auto& e : examples)
    ex.push_back({{"content_id", e.content_id},
                  {"source_style", e.source_style},
                  {"target_style", e.target_style},
                  {"predicted_frames", e.predicted_frames},
                  {"target_frames", e.target_frames},
                  {"compared_frames", e.compared_frames},
                  {"mcd", mcd_json(e.model)},
                  {"identity_baseline", mcd_json(e.identity)},
                  {"mean_frame_baseline", mcd_json(e.mean_frame)}});
  return {{"split", split},
          {"examples", ex},
          {"mean_mcd", mcd_json(mean_model)},
          {"mean_identity_baseline", mcd_json(mean_identity)},
          {"mean_mean_frame_baseline", mcd_json(mean_mean_frame)},
          {"mean_truncated_frames", mean_truncated_frames},
          {"loss_curve", loss_curve},
          {"wall_seconds", wall_seconds}};
}

McdPair aligned_mcd(const dsp::Spectrogram& target, const dsp::Spectrogram& prediction) {
  const std::size_t n = std::min(target.frames, prediction.frames);
  const auto a = leading(target, n);
  const auto b = leading(prediction, n);
  return {dsp::mcd(a, b, dsp::McdMode::per_frame), dsp::mcd(a, b, dsp::McdMode::paper)};
}

std::vector<float> mean_target_frame(const std::vector<data::TransformExample>& pairs) {
  if (pairs.empty()) throw InvalidInput("mean frame of an empty pair set");
  const std::size_t bins = pairs[0].target.bins;
  std::vector<double> acc(bins, 0.0);
  std::size_t frames = 0;
  for (const auto& p : pairs) {
    if (p.target.bins != bins) throw ShapeError("pairs disagree on mel width");
    for (std::size_t t = 0; t < p.target.frames; ++t)
      for (std::size_t k = 0; k < bins; ++k) acc[k] += p.target.at(t, k);
    frames += p.target.frames;
  }
  std::vector<float> out(bins);
  for (std::size_t k = 0; k < bins; ++k) out[k] = static_cast<float>(acc[k] / static_cast<double>(frames));
  return out;
}

void score_baselines(const data::TransformExample& pair, const std::vector<float>& mean_frame, ExampleScore& out) {
  if (mean_frame.size() != pair.target.bins) throw ShapeError("mean frame width does not match targets");
  out.identity = aligned_mcd(pair.target, pair.source);
  dsp::Spectrogram tiled(pair.target.frames, pair.target.bins, pair.target.scale, pair.target.config);
  for (std::size_t t = 0; t < tiled.frames; ++t) std::copy(mean_frame.begin(), mean_frame.end(), tiled.frame(t).begin());
  out.mean_frame = aligned_mcd(pair.target, tiled);
}

EvalReport evaluate(const model::Checkpoint& ckpt, const std::vector<data::TransformExample>& pairs,
                    const std::vector<float>& mean_frame, std::size_t jobs) {
  const auto started = std::chrono::steady_clock::now();
  if (pairs.empty()) throw InvalidInput("evaluation split has no pairs");
  const std::set<int> trained(ckpt.trained_styles.begin(), ckpt.trained_styles.end());
  for (const auto& p : pairs)
    for (int s : {p.source_style, p.target_style})
      if (!trained.count(s)) throw UnseenStyleError("style " + std::to_string(s) + " was not seen during training");

  EvalReport report;
  report.examples.resize(pairs.size());
  auto score = [&](std::size_t i) {
    const auto& p = pairs[i];
    auto& e = report.examples[i];
    const auto out = model::transform(ckpt.params, p.source, p.source_style, p.target_style);
    e.content_id = p.content_id;
    e.source_style = p.source_style;
    e.target_style = p.target_style;
    e.predicted_frames = out.output.frames;
    e.target_frames = p.target.frames;
    e.compared_frames = std::min(e.predicted_frames, e.target_frames);
    e.model = aligned_mcd(p.target, out.output);
    score_baselines(p, mean_frame, e);
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, pairs.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) score(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) {
          try {
            score(i);
          } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  report.mean_model = mean_of(report.examples, &ExampleScore::model);
  report.mean_identity = mean_of(report.examples, &ExampleScore::identity);
  report.mean_mean_frame = mean_of(report.examples, &ExampleScore::mean_frame);
  double truncated = 0;
  for (const auto& e : report.examples)
    truncated += static_cast<double>(std::max(e.predicted_frames, e.target_frames) - e.compared_frames);
  report.mean_truncated_frames = truncated / static_cast<double>(report.examples.size());
  report.loss_curve = ckpt.epoch_losses;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

EvalReport evaluate(const std::filesystem::path& checkpoint, const data::Manifest& manifest, data::Split split,
                    const data::FeatureCache* cache, std::size_t jobs) {
  const auto ckpt = model::load_checkpoint(checkpoint);
  const auto train_pairs = data::build_pairs(data::load_clips(manifest, data::Split::train, ckpt.features, cache, jobs), false);
  const auto pairs = data::build_pairs(data::load_clips(manifest, split, ckpt.features, cache, jobs), false);
  auto report = evaluate(ckpt, pairs, mean_target_frame(train_pairs), jobs);
  report.split = data::to_string(split);
  return report;
}

}  // namespace audiomorph::train
