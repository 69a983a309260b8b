#include "audiomorph/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "audiomorph/data/features.hpp"
#include "audiomorph/data/pairs.hpp"
#include "audiomorph/data/synth.hpp"
#include "audiomorph/dsp/griffin_lim.hpp"
#include "audiomorph/dsp/spectrogram_io.hpp"
#include "audiomorph/dsp/stft.hpp"
#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"
#include "audiomorph/model/seq2seq.hpp"
#include "audiomorph/train/ablation.hpp"
#include "audiomorph/train/embeddings.hpp"
#include "audiomorph/train/evaluate.hpp"
#include "audiomorph/train/trainer.hpp"

namespace audiomorph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

struct ModelFlags {
  double context_ms = 200.0;
  std::size_t hidden = 128;
  std::size_t attention_size = 128;
  std::size_t decoder_layers = 2;
  std::size_t conv_channels = 32;
  std::size_t n_styles = 0;
  std::size_t max_decode_frames = 0;
  std::string attention = "additive";
};

struct TrainFlags {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double decay = 0.99;
  std::size_t checkpoint_every = 1;
  std::size_t pretrain_epochs = 0;
  bool identity_pairs = false;
  std::string eval_split = "test";
};

struct Options {
  std::uint64_t seed = 7;
  std::size_t jobs = 1;
  std::string out;
  std::string in;
  std::string manifest;
  std::string ckpt;
  std::string cache;
  std::string split = "test";
  // synth-data
  std::size_t styles = 4;
  std::size_t pitches = 24;
  std::size_t holdout = 4;
  int first_pitch = 48;
  double duration_ms = 250.0;
  double noise_floor = 1e-3;
  // model / training
  ModelFlags model;
  TrainFlags train;
  std::string resume;
  std::vector<double> contexts{std::begin(model::kContextSizesMs), std::end(model::kContextSizesMs)};
  // transform / griffin-lim
  int source_style = 0;
  int target_style = 0;
  int iterations = 60;
  std::size_t max_frames = 0;
  std::size_t fft_size = 2048;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const UnseenStyleError*>(&e)) return "unseen-style";
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const InvalidInput*>(&e)) return "invalid-input";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "runtime";
}

void write_text(const fs::path& path, const std::string& text) {
  dsp::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void persist_config(const CLI::App& app, const CLI::App& sub, const fs::path& path) {
  std::ostringstream o;
  o << "# audiomorph " << sub.get_name() << "\n";
  o << "[" << sub.get_name() << "]\n" << sub.config_to_str(true, false);
  (void)app;
  write_text(path, o.str());
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  auto p = file;
  p.replace_filename(file.stem().string() + suffix);
  return p;
}

data::FeatureCache resolve_cache(const Options& o, const fs::path& manifest) {
  if (!o.cache.empty()) return {o.cache};
  return data::FeatureCache::locate(manifest.parent_path() / ".feature_cache");
}

std::size_t infer_styles(const data::Manifest& m) {
  int top = -1;
  for (const auto& e : m.entries) {
    if (e.style_id < 0) throw InvalidInput("negative style id in manifest");
    top = std::max(top, e.style_id);
  }
  return static_cast<std::size_t>(top + 1);
}

model::ModelConfig model_config(const ModelFlags& f, std::size_t n_styles, std::size_t n_mels) {
  model::ModelConfig base;
  base.n_mels = n_mels;
  base.n_styles = f.n_styles ? f.n_styles : n_styles;
  base.hidden_size = f.hidden;
  base.attention_size = f.attention_size;
  base.decoder_layers = f.decoder_layers;
  base.max_decode_frames = f.max_decode_frames;
  for (auto& c : base.conv_layers) c.channels = f.conv_channels;
  base.attention = f.attention == "mlp_dot" ? model::AttentionKind::mlp_dot : model::AttentionKind::additive;
  auto cfg = model::for_context(f.context_ms, base);
  cfg.validate();
  return cfg;
}

train::TrainConfig train_config(const TrainFlags& f, std::uint64_t seed) {
  train::TrainConfig c;
  c.epochs = f.epochs;
  c.batch_size = f.batch_size;
  c.learning_rate = f.lr;
  c.decay = f.decay;
  c.seed = seed;
  c.checkpoint_every_n_epochs = f.checkpoint_every;
  c.pretrain_epochs = f.pretrain_epochs;
  c.eval_split = data::parse_split(f.eval_split);
  c.validate();
  return c;
}

std::vector<data::TransformExample> pairs_for(const data::Manifest& m, data::Split split, const dsp::FeatureConfig& fc,
                                              const data::FeatureCache& cache, bool identity, std::size_t jobs,
                                              std::ostream& err) {
  std::vector<std::string> warnings;
  auto pairs = data::build_pairs(data::load_clips(m, split, fc, &cache, jobs), identity, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return pairs;
}

void add_model_flags(CLI::App* sub, ModelFlags& f, bool with_context) {
  if (with_context)
    sub->add_option("--context-ms", f.context_ms, "Per-step encoder context: 12.5, 25, 50, 100 or 200 ms")
        ->capture_default_str();
  sub->add_option("--hidden", f.hidden, "LSTM hidden size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--attention-size", f.attention_size, "Attention projection size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--decoder-layers", f.decoder_layers, "Decoder LSTM layers")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--conv-channels", f.conv_channels, "Channels per conv layer")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--num-styles", f.n_styles, "Style vocabulary size (0: infer from the manifest)")
      ->capture_default_str();
  sub->add_option("--max-decode-frames", f.max_decode_frames, "Inference frame budget (0: 1.2 x source length)")
      ->capture_default_str();
  sub->add_option("--attention", f.attention, "Attention score form")
      ->capture_default_str()
      ->check(CLI::IsMember({"additive", "mlp_dot"}));
}

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--batch-size", f.batch_size, "Examples per batch")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--lr", f.lr, "Initial Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--decay", f.decay, "Learning-rate decay per epoch")->capture_default_str();
  sub->add_option("--checkpoint-every", f.checkpoint_every, "Save a checkpoint every N epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--pretrain-epochs", f.pretrain_epochs, "Identity-pair (autoencoder) epochs before the main phase")
      ->capture_default_str();
  sub->add_flag("--identity-pairs", f.identity_pairs, "Also train on A-to-A pairs");
  sub->add_option("--eval-split", f.eval_split, "Split used for evaluation")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "test"}));
}

void add_seed(CLI::App* sub, Options& o, std::uint64_t fallback, const std::string& what) {
  o.seed = fallback;
  sub->add_option("--seed", o.seed, what)->capture_default_str();
}

void add_jobs(CLI::App* sub, Options& o) {
  sub->add_option("--jobs", o.jobs, "Worker threads for feature extraction and evaluation")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_cache(CLI::App* sub, Options& o) {
  sub->add_option("--cache", o.cache,
                  "Feature cache directory (default: $AUDIOMORPH_CACHE, else .feature_cache next to the manifest)");
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& o, std::ostream& out) {
  auto cfg = data::SynthConfig::standard(o.styles, o.pitches, o.holdout, o.seed);
  for (auto& p : cfg.pitches) p += o.first_pitch - 48;
  cfg.holdout_pitches = data::spread_holdout(cfg.pitches, o.holdout);
  cfg.duration_ms = o.duration_ms;
  cfg.noise_floor = o.noise_floor;
  const auto entries = data::synth_dataset(cfg, o.out);
  std::size_t test = 0;
  for (const auto& e : entries) test += e.split == data::Split::test;
  out << json{{"manifest", (fs::path(o.out) / "manifest.jsonl").string()},
              {"clips", entries.size()},
              {"train", entries.size() - test},
              {"test", test}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_features(const Options& o, std::ostream& out) {
  const auto m = data::read_manifest(o.manifest);
  data::validate_manifest(m);
  const dsp::FeatureConfig fc;
  const auto cache = resolve_cache(o, o.manifest);
  const auto features = data::load_features(m, m.entries, fc, &cache, o.jobs);
  std::vector<data::ManifestEntry> written;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    fs::path rel(e.audio_path.empty() ? e.spec_path : e.audio_path);
    if (rel.is_absolute()) rel = rel.filename();
    rel.replace_extension(".amspec");
    dsp::write_amspec(fs::path(o.out) / rel, features[i]);
    written.push_back({"", rel.generic_string(), e.style_id, e.content_id, e.split});
  }
  data::write_manifest(fs::path(o.out) / "manifest.jsonl", written);
  out << json{{"manifest", (fs::path(o.out) / "manifest.jsonl").string()}, {"clips", written.size()}}.dump() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const auto m = data::read_manifest(o.manifest);
  data::validate_manifest(m);
  const dsp::FeatureConfig fc;
  const auto mc = model_config(o.model, infer_styles(m), fc.n_mels);
  const auto tc = train_config(o.train, o.seed);
  const auto cache = resolve_cache(o, o.manifest);
  const auto pairs = pairs_for(m, data::Split::train, fc, cache, o.train.identity_pairs, o.jobs, err);
  train::TrainOptions opts;
  opts.features = fc;
  if (!o.resume.empty()) opts.resume_from = fs::path(o.resume);
  const std::size_t total = tc.epochs + tc.pretrain_epochs;
  opts.on_epoch = [&err, total](std::size_t epoch, double loss) {
    err << "epoch " << epoch + 1 << "/" << total << " loss " << loss << "\n";
  };
  const auto r = train::train(mc, tc, pairs, o.out, opts);
  out << json{{"checkpoint", r.checkpoint.string()},
              {"loss_csv", r.loss_csv.string()},
              {"pairs", pairs.size()},
              {"epoch_losses", r.epoch_losses}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_transform(const Options& o, std::ostream& out) {
  const auto ck = model::load_checkpoint(o.ckpt);
  for (int s : {o.source_style, o.target_style}) {
    model::check_style(ck.params.config, s);
    if (std::find(ck.trained_styles.begin(), ck.trained_styles.end(), s) == ck.trained_styles.end())
      throw UnseenStyleError("style " + std::to_string(s) + " was not seen during training");
  }
  const auto x = dsp::log_mel_features(dsp::read_wav(o.in, ck.features.stft.sample_rate_hz), ck.features);
  const auto r = model::transform(ck.params, x, o.source_style, o.target_style, o.max_frames);
  auto magnitude = dsp::mel_pseudo_inverse(r.output, ck.features.filterbank());
  magnitude.config = ck.features.stft;
  auto wave = dsp::normalize_peak(dsp::griffin_lim(magnitude, o.iterations, o.seed));
  for (auto& s : wave.samples) s *= 0.9;
  const fs::path target(o.out);
  dsp::write_wav(target, wave);
  const auto attention = sibling(target, ".attention.amspec");
  const auto mel = sibling(target, ".mel.amspec");
  dsp::write_amspec(attention, r.attention);
  dsp::write_amspec(mel, r.output);
  out << json{{"wav", target.string()},
              {"attention", attention.string()},
              {"mel", mel.string()},
              {"frames", r.output.frames},
              {"decoded_frames", r.decoded_frames}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto m = data::read_manifest(o.manifest);
  data::validate_manifest(m);
  const auto cache = resolve_cache(o, o.manifest);
  const auto report = train::evaluate(o.ckpt, m, data::parse_split(o.split), &cache, o.jobs);
  const auto text = report.to_json().dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, text);
  out << text;
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto m = data::read_manifest(o.manifest);
  data::validate_manifest(m);
  const dsp::FeatureConfig fc;
  const auto tc = train_config(o.train, o.seed);
  const auto base = model_config(o.model, infer_styles(m), fc.n_mels);
  const auto cache = resolve_cache(o, o.manifest);
  train::AblationData d;
  d.features = fc;
  d.train_pairs = pairs_for(m, data::Split::train, fc, cache, o.train.identity_pairs, o.jobs, err);
  d.eval_pairs = pairs_for(m, tc.eval_split, fc, cache, false, o.jobs, err);
  const auto rows = train::ablate_context(base, tc, d, o.contexts, o.out, o.jobs);
  train::write_ablation_csv(fs::path(o.out) / "ablation.csv", rows);
  out << train::ablation_csv(rows);
  for (const auto& r : rows)
    if (r.status != "ok") err << "warning: context " << r.context_ms << " ms " << r.status << "\n";
  return kExitOk;
}

int cmd_embed(const Options& o, std::ostream& out) {
  const auto ck = model::load_checkpoint(o.ckpt);
  const auto m = data::read_manifest(o.manifest);
  data::validate_manifest(m);
  const auto cache = resolve_cache(o, o.manifest);
  std::vector<data::Clip> clips;
  for (auto split : {data::Split::train, data::Split::test}) {
    if (o.split != "all" && data::parse_split(o.split) != split) continue;
    auto part = data::load_clips(m, split, ck.features, &cache, o.jobs);
    clips.insert(clips.end(), part.begin(), part.end());
  }
  const auto rows = train::export_embeddings(ck.params, clips);
  train::write_embeddings_tsv(o.out, rows);
  out << json{{"embeddings", o.out}, {"rows", rows.size()}, {"dims", ck.params.config.hidden_size}}.dump() << "\n";
  return kExitOk;
}

int cmd_griffin_lim(const Options& o, std::ostream& out) {
  auto s = dsp::read_amspec(o.in);
  dsp::StftConfig stft;
  stft.fft_size = o.fft_size;
  stft.validate();
  dsp::Spectrogram magnitude;
  if (s.scale == dsp::Scale::log_mel) {
    dsp::FeatureConfig fc;
    fc.stft = stft;
    fc.n_mels = s.bins;
    magnitude = dsp::mel_pseudo_inverse(s, fc.filterbank());
  } else if (s.scale == dsp::Scale::linear_magnitude) {
    if (s.bins != stft.bins())
      throw ShapeError("spectrogram has " + std::to_string(s.bins) + " bins, FFT size " + std::to_string(o.fft_size) +
                       " needs " + std::to_string(stft.bins()));
    magnitude = std::move(s);
  } else {
    throw InvalidInput("griffin-lim needs a magnitude or log-mel spectrogram");
  }
  magnitude.config = stft;
  const auto r = dsp::griffin_lim_trace(magnitude, o.iterations, o.seed);
  auto wave = dsp::normalize_peak(r.waveform);
  for (auto& v : wave.samples) v *= 0.9;
  dsp::write_wav(o.out, wave);
  out << json{{"wav", o.out}, {"iterations", o.iterations}, {"objective", r.objective.back()}}.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<std::string> option_names(const CLI::App* app) {
  std::vector<std::string> names;
  for (const auto* opt : app->get_options()) {
    for (const auto& l : opt->get_lnames()) names.push_back("--" + l);
  }
  return names;
}

std::string suggest(const std::string& token, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    const auto d = edit_distance(token, c);
    if (d < best_d) best_d = d, best = c;
  }
  if (best.empty() || best_d > std::max<std::size_t>(2, token.size() / 3)) return "";
  return best;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Conditioned sequence-to-sequence audio style transfer", "audiomorph"};
  app.require_subcommand(1);
  app.fallthrough(false);

  auto* synth = app.add_subcommand("synth-data", "Render the synthetic timbre corpus and its manifest");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--styles", o.styles, "Number of timbres")->capture_default_str()->check(CLI::Range(2, 64));
  synth->add_option("--pitches", o.pitches, "Number of consecutive MIDI pitches")
      ->capture_default_str()
      ->check(CLI::Range(2, 80));
  synth->add_option("--holdout", o.holdout, "Pitches held out for the test split")->capture_default_str();
  synth->add_option("--first-pitch", o.first_pitch, "Lowest MIDI pitch")->capture_default_str()->check(CLI::Range(0, 127));
  synth->add_option("--duration-ms", o.duration_ms, "Clip duration")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--noise-floor", o.noise_floor, "Uniform noise amplitude")->capture_default_str();
  add_seed(synth, o, 7, "Noise seed");

  auto* features = app.add_subcommand("features", "Extract log-mel features into AMSPEC1 files");
  features->add_option("--manifest", o.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  features->add_option("--out", o.out, "Output directory for features and their manifest")->required();
  add_cache(features, o);
  add_jobs(features, o);
  add_seed(features, o, 0, "Unused; extraction is deterministic");

  auto* train_cmd = app.add_subcommand("train", "Train a model on the train split");
  train_cmd->add_option("--manifest", o.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", o.out, "Run directory for model.ckpt and loss.csv")->required();
  train_cmd->add_option("--resume", o.resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  add_model_flags(train_cmd, o.model, true);
  add_train_flags(train_cmd, o.train);
  add_cache(train_cmd, o);
  add_jobs(train_cmd, o);
  add_seed(train_cmd, o, 7, "Initialization and shuffling seed");

  auto* transform = app.add_subcommand("transform", "Render a clip in another style");
  transform->add_option("--in", o.in, "Input WAV")->required()->check(CLI::ExistingFile);
  transform->add_option("--out", o.out, "Output WAV; attention and log-mel AMSPEC1 files are written beside it")
      ->required();
  transform->add_option("--ckpt", o.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  transform->add_option("--source-style", o.source_style, "Style id of the input")->required();
  transform->add_option("--target-style", o.target_style, "Style id to render")->required();
  transform->add_option("--iters", o.iterations, "Griffin-Lim iterations")->capture_default_str()->check(CLI::PositiveNumber);
  transform->add_option("--max-frames", o.max_frames, "Decode budget (0: 1.2 x input frames)")->capture_default_str();
  add_seed(transform, o, 0, "Griffin-Lim phase seed");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint with MCD and baselines; report JSON on stdout");
  eval->add_option("--ckpt", o.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", o.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", o.split, "Split to score")->capture_default_str()->check(CLI::IsMember({"train", "test"}));
  eval->add_option("--out", o.out, "Also write the report to this file");
  add_cache(eval, o);
  add_jobs(eval, o);
  add_seed(eval, o, 0, "Unused; evaluation is deterministic");

  auto* ablate = app.add_subcommand("ablate", "Train and score one model per context size");
  ablate->add_option("--manifest", o.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", o.out, "Output directory for runs and ablation.csv")->required();
  ablate->add_option("--contexts", o.contexts, "Context sizes in ms")->delimiter(',')->capture_default_str();
  add_model_flags(ablate, o.model, false);
  add_train_flags(ablate, o.train);
  add_cache(ablate, o);
  add_jobs(ablate, o);
  add_seed(ablate, o, 7, "Initialization and shuffling seed shared by every run");

  auto* embed = app.add_subcommand("embed", "Export encoder final states as TSV");
  embed->add_option("--ckpt", o.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  embed->add_option("--manifest", o.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", o.out, "Output TSV")->required();
  o.split = "test";
  embed->add_option("--split", o.split, "Clips to embed: train, test or all")
      ->default_str("all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  add_cache(embed, o);
  add_jobs(embed, o);
  add_seed(embed, o, 0, "Unused; embedding export is deterministic");

  auto* gl = app.add_subcommand("griffin-lim", "Invert a magnitude or log-mel AMSPEC1 file to audio");
  gl->add_option("--in", o.in, "Input AMSPEC1 file")->required()->check(CLI::ExistingFile);
  gl->add_option("--out", o.out, "Output WAV")->required();
  gl->add_option("--iters", o.iterations, "Iterations")->capture_default_str()->check(CLI::PositiveNumber);
  gl->add_option("--fft-size", o.fft_size, "FFT size of the spectrogram")->capture_default_str();
  add_seed(gl, o, 0, "Phase seed");

  app.set_config("--config", "", "Read flags from a TOML or INI file; command-line flags take precedence");
  for (auto* sub : app.get_subcommands({})) {
    sub->usage("Usage: audiomorph " + sub->get_name() + " [OPTIONS]");
    sub->footer("--config FILE reads these flags from a [" + sub->get_name() + "] section; flags given here win.");
  }

  std::vector<std::string> args;
  std::vector<std::string> config_args;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    if (argv[i] == "--config" && i + 1 < argv.size()) {
      config_args = {argv[i], argv[i + 1]};
      ++i;
    } else if (argv[i].rfind("--config=", 0) == 0) {
      config_args = {argv[i]};
    } else {
      args.push_back(argv[i]);
    }
  }
  if (!args.empty() && !args.front().empty() && args.front()[0] != '-') {
    std::vector<std::string> names;
    for (const auto* s : app.get_subcommands({})) names.push_back(s->get_name());
    if (std::find(names.begin(), names.end(), args.front()) == names.end()) {
      std::string msg = "error: usage: unknown subcommand '" + args.front() + "'";
      if (const auto hint = suggest(args.front(), names); !hint.empty()) msg += "; did you mean '" + hint + "'?";
      err << msg << "\n";
      return kExitUsage;
    }
  }
  args.insert(args.begin(), config_args.begin(), config_args.end());
  std::reverse(args.begin(), args.end());
  const bool embed_split_given = std::find(args.begin(), args.end(), "--split") != args.end();
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* s : app.get_subcommands({})) if (s->parsed()) target = s;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ExtrasError& e) {
    const CLI::App* scope = &app;
    for (auto* s : app.get_subcommands({}))
      if (s->parsed()) scope = s;
    std::vector<std::string> remaining = scope->remaining();
    if (remaining.empty()) remaining = app.remaining();
    const std::string token = remaining.empty() ? std::string() : remaining.front();
    std::string msg = "error: usage: unknown argument '" + token + "'";
    std::vector<std::string> candidates;
    if (!token.empty() && token[0] == '-') {
      candidates = option_names(scope);
    } else {
      for (const auto* s : app.get_subcommands({})) candidates.push_back(s->get_name());
    }
    if (const auto hint = suggest(token, candidates); !hint.empty()) msg += "; did you mean '" + hint + "'?";
    err << msg << "\n";
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub == embed && !embed_split_given && !sub->count("--split")) o.split = "all";
  try {
    const std::string name = sub->get_name();
    fs::path config_path;
    if (name == "synth-data" || name == "features" || name == "train" || name == "ablate") {
      fs::create_directories(o.out);
      config_path = fs::path(o.out) / "resolved_config.toml";
    } else if (name == "eval") {
      config_path = o.out.empty() ? fs::path(o.ckpt).parent_path() / ("eval_" + o.split + ".config.toml")
                                  : sibling(o.out, ".config.toml");
    } else {
      config_path = sibling(o.out, ".config.toml");
    }
    persist_config(app, *sub, config_path);

    if (name == "synth-data") return cmd_synth(o, out);
    if (name == "features") return cmd_features(o, out);
    if (name == "train") return cmd_train(o, out, err);
    if (name == "transform") return cmd_transform(o, out);
    if (name == "eval") return cmd_eval(o, out);
    if (name == "ablate") return cmd_ablate(o, out, err);
    if (name == "embed") return cmd_embed(o, out);
    return cmd_griffin_lim(o, out);
  } catch (const std::exception& e) {
    err << "error: " << error_kind(e) << ": " << one_line(e.what()) << "\n";
    return kExitRuntime;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace audiomorph::cli
