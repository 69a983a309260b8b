#include "audiomorph/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "audiomorph/autodiff/adam.hpp"
#include "audiomorph/data/batch.hpp"
#include "audiomorph/error.hpp"
#include "audiomorph/model/seq2seq.hpp"

namespace audiomorph::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidInput("epochs must be at least 1");
  if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
  if (!(learning_rate > 0)) throw InvalidInput("learning rate must be positive");
  if (!(decay > 0 && decay <= 1)) throw InvalidInput("decay must be in (0, 1]");
  if (checkpoint_every_n_epochs < 1) throw InvalidInput("checkpoint_every_n_epochs must be at least 1");
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"decay", c.decay},
          {"seed", c.seed},
          {"checkpoint_every_n_epochs", c.checkpoint_every_n_epochs},
          {"eval_split", data::to_string(c.eval_split)},
          {"pretrain_epochs", c.pretrain_epochs}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.decay = j.value("decay", c.decay);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every_n_epochs = j.value("checkpoint_every_n_epochs", c.checkpoint_every_n_epochs);
    c.eval_split = data::parse_split(j.value("eval_split", std::string("test")));
    c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  } catch (const json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
  return c;
}

std::vector<data::TransformExample> identity_pairs(const std::vector<data::TransformExample>& pairs) {
  std::vector<data::TransformExample> out;
  std::set<std::pair<int, int>> seen;
  auto add = [&](const dsp::Spectrogram& s, int style, int content) {
    if (seen.insert({style, content}).second) out.push_back({s, style, style, s, content});
  };
  for (const auto& p : pairs) {
    add(p.source, p.source_style, p.content_id);
    add(p.target, p.target_style, p.content_id);
  }
  return out;
}

namespace {

std::string format_row(const StepLog& s) {
  std::ostringstream o;
  o << s.step << ',' << s.epoch << ',' << std::setprecision(9) << s.loss << ',' << std::setprecision(9)
    << s.learning_rate << '\n';
  return o.str();
}

// Keeps the header and rows with step <= last_step.
void truncate_csv(const std::filesystem::path& path, std::uint64_t last_step) {
  std::ifstream in(path);
  std::string kept = "step,epoch,loss,learning_rate\n";
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    if (std::stoull(line.substr(0, line.find(','))) <= last_step) kept += line + '\n';
  }
  std::ofstream(path, std::ios::trunc | std::ios::binary) << kept;
}

}  // namespace

TrainResult train(const model::ModelConfig& mc, const TrainConfig& tc, const std::vector<data::TransformExample>& pairs,
                  const std::filesystem::path& out_dir, const TrainOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  tc.validate();
  if (pairs.empty()) throw InvalidInput("training split has no pairs");
  std::filesystem::create_directories(out_dir);

  TrainResult result;
  result.checkpoint = out_dir / kCheckpointFile;
  result.loss_csv = out_dir / kLossCsvFile;

  model::Checkpoint ck;
  if (opts.resume_from) {
    ck = model::load_checkpoint(*opts.resume_from);
    if (!(ck.params.config == mc)) throw InvalidInput("resumed checkpoint has a different model configuration");
    truncate_csv(result.loss_csv, ck.optimizer.step);
  } else {
    ck.params = model::init_params(mc, tc.seed);
    ck.optimizer.learning_rate = tc.learning_rate;
    ck.optimizer.decay_per_epoch = tc.decay;
    std::ofstream(result.loss_csv, std::ios::trunc | std::ios::binary) << "step,epoch,loss,learning_rate\n";
  }
  ck.features = opts.features;
  ck.train_config = to_json(tc);
  std::set<int> styles;
  for (const auto& p : pairs) {
    model::check_style(mc, p.source_style);
    model::check_style(mc, p.target_style);
    styles.insert(p.source_style);
    styles.insert(p.target_style);
  }
  ck.trained_styles.assign(styles.begin(), styles.end());
  if (!opts.resume_from) model::save_checkpoint(result.checkpoint, ck);

  const auto autoencode = tc.pretrain_epochs > 0 ? identity_pairs(pairs) : std::vector<data::TransformExample>{};
  data::BatchIterator main_batches(pairs, tc.batch_size, tc.seed);
  std::optional<data::BatchIterator> pre_batches;
  if (!autoencode.empty()) pre_batches.emplace(autoencode, tc.batch_size, tc.seed ^ 0x5bd1e995ULL);

  auto params = ck.params.tensors();
  std::ofstream csv(result.loss_csv, std::ios::app | std::ios::binary);
  const std::size_t total_epochs = tc.pretrain_epochs + tc.epochs;
  bool stopped = false;
  for (std::size_t epoch = ck.epoch; epoch < total_epochs && !stopped; ++epoch) {
    auto& batches = epoch < tc.pretrain_epochs ? *pre_batches : main_batches;
    batches.start_epoch(epoch);
    double sum = 0;
    std::size_t count = 0;
    data::PaddedBatch batch;
    while (batches.next(batch)) {
      ad::zero_grads(std::span(params));
      double value = 0;
      try {
        ad::Graph<float> graph;
        ad::GraphScope<float> scope(graph);
        const auto l = model::loss(ck.params, batch);
        value = l.item();
        if (!std::isfinite(value)) throw NumericError("loss is not finite");
        graph.backward(l);
      } catch (const NumericError& e) {
        csv.flush();
        throw DivergenceError("training diverged at step " + std::to_string(ck.optimizer.step + 1) + " (" + e.what() +
                              "); last good checkpoint kept at " + result.checkpoint.string());
      }
      const double lr = ck.optimizer.learning_rate;
      ad::adam_step(std::span(params), ck.optimizer);
      const StepLog log{ck.optimizer.step, epoch, value, lr};
      csv << format_row(log);
      result.steps.push_back(log);
      if (opts.on_step) opts.on_step(log);
      sum += value;
      ++count;
      if (opts.stop_after_steps && ck.optimizer.step >= opts.stop_after_steps) {
        stopped = true;
        break;
      }
    }
    if (stopped && count < batches.batches_per_epoch()) break;
    ad::decay_learning_rate(ck.optimizer);
    ck.epoch = epoch + 1;
    ck.epoch_losses.push_back(sum / static_cast<double>(count));
    if (opts.on_epoch) opts.on_epoch(epoch, ck.epoch_losses.back());
    if (ck.epoch % tc.checkpoint_every_n_epochs == 0 || ck.epoch == total_epochs || stopped) {
      csv.flush();
      model::save_checkpoint(result.checkpoint, ck);
    }
  }
  csv.flush();
  result.epoch_losses = ck.epoch_losses;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace audiomorph::train
