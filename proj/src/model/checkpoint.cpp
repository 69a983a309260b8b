#include "audiomorph/model/checkpoint.hpp"

#include <string_view>
#include <string>

#include "audiomorph/detail/bytes.hpp"
#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::model {

using nlohmann::json;

json to_json(const ModelConfig& c) {
  json conv = json::array();
  for (const auto& l : c.conv_layers) conv.push_back({{"channels", l.channels}, {"kernel", l.kernel}, {"stride", l.stride}});
  return {{"n_mels", c.n_mels},
          {"n_styles", c.n_styles},
          {"conv_layers", conv},
          {"pyramid_layers", c.pyramid_layers},
          {"hidden_size", c.hidden_size},
          {"decoder_layers", c.decoder_layers},
          {"attention_size", c.attention_size},
          {"max_decode_frames", c.max_decode_frames},
          {"context_ms", c.context_ms},
          {"hop_ms", c.hop_ms},
          {"attention", c.attention == AttentionKind::additive ? "additive" : "mlp_dot"},
          {"log_floor", c.log_floor}};
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig c;
    c.n_mels = j.at("n_mels").get<std::size_t>();
    c.n_styles = j.at("n_styles").get<std::size_t>();
    c.conv_layers.clear();
    for (const auto& l : j.at("conv_layers"))
      c.conv_layers.push_back({l.at("channels").get<std::size_t>(), l.at("kernel").get<std::size_t>(),
                               l.at("stride").get<std::size_t>()});
    c.pyramid_layers = j.at("pyramid_layers").get<std::size_t>();
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
    c.attention_size = j.at("attention_size").get<std::size_t>();
    c.max_decode_frames = j.at("max_decode_frames").get<std::size_t>();
    c.context_ms = j.at("context_ms").get<double>();
    c.hop_ms = j.at("hop_ms").get<double>();
    const auto kind = j.at("attention").get<std::string>();
    if (kind == "additive")
      c.attention = AttentionKind::additive;
    else if (kind == "mlp_dot")
      c.attention = AttentionKind::mlp_dot;
    else
      throw FormatError("unknown attention kind '" + kind + "'");
    c.log_floor = j.at("log_floor").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

json to_json(const dsp::FeatureConfig& c) {
  return {{"window_ms", c.stft.window_ms},   {"hop_ms", c.stft.hop_ms},   {"fft_size", c.stft.fft_size},
          {"preemphasis", c.stft.preemphasis}, {"sample_rate_hz", c.stft.sample_rate_hz}, {"n_mels", c.n_mels},
          {"f_min_hz", c.f_min_hz},           {"f_max_hz", c.f_max_hz},   {"log_floor", c.log_floor}};
}

dsp::FeatureConfig feature_config_from_json(const json& j) {
  try {
    dsp::FeatureConfig c;
    c.stft.window_ms = j.at("window_ms").get<double>();
    c.stft.hop_ms = j.at("hop_ms").get<double>();
    c.stft.fft_size = j.at("fft_size").get<std::size_t>();
    c.stft.preemphasis = j.at("preemphasis").get<double>();
    c.stft.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    c.n_mels = j.at("n_mels").get<std::size_t>();
    c.f_min_hz = j.at("f_min_hz").get<double>();
    c.f_max_hz = j.at("f_max_hz").get<double>();
    c.log_floor = j.at("log_floor").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("feature config: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto tensors = ckpt.params.tensors();
  const auto& opt = ckpt.optimizer;
  const bool moments = !opt.m.empty();
  if (moments && (opt.m.size() != tensors.size() || opt.v.size() != tensors.size()))
    throw ShapeError("checkpoint: optimizer state does not match parameters");

  json manifest = json::array();
  ckpt.params.visit([&manifest](const std::string& name, const ad::Tensor<float>& t) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}});
  });
  json header = {{"model", to_json(ckpt.params.config)},
                 {"parameters", manifest},
                 {"optimizer",
                  {{"beta1", opt.beta1},
                   {"beta2", opt.beta2},
                   {"epsilon", opt.epsilon},
                   {"learning_rate", opt.learning_rate},
                   {"decay_per_epoch", opt.decay_per_epoch},
                   {"step", opt.step},
                   {"moments", moments}}},
                 {"epoch", ckpt.epoch},
                 {"epoch_losses", ckpt.epoch_losses},
                 {"features", to_json(ckpt.features)},
                 {"trained_styles", ckpt.trained_styles},
                 {"train_config", ckpt.train_config}};
  const std::string text = header.dump();

  detail::ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  for (const auto& t : tensors) w.f32s(t.values());
  if (moments) {
    for (const auto& m : opt.m) w.f32s(m);
    for (const auto& v : opt.v) w.f32s(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.expect(kCheckpointMagic)) throw FormatError("not an AMCKPT1 checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto len = r.get<std::uint32_t>();
  const auto raw = r.bytes(len);
  json header;
  try {
    header = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    const auto cfg = model_config_from_json(header.at("model"));
    ck.params = init_params(cfg, 0);
    const auto& manifest = header.at("parameters");
    std::size_t i = 0;
    ck.params.visit([&](const std::string& name, ad::Tensor<float>& t) {
      if (i >= manifest.size()) throw FormatError("checkpoint: parameter manifest too short");
      const auto& e = manifest[i++];
      if (e.at("name").get<std::string>() != name || e.at("shape").get<ad::Shape>() != t.shape())
        throw FormatError("checkpoint: parameter '" + e.at("name").get<std::string>() + "' does not match '" + name +
                          "' " + ad::shape_str(t.shape()));
    });
    if (i != manifest.size()) throw FormatError("checkpoint: parameter manifest too long");
    ck.params.visit([&r](const std::string&, ad::Tensor<float>& t) { r.f32s(t.mutable_values()); });

    const auto& o = header.at("optimizer");
    ck.optimizer.beta1 = o.at("beta1").get<double>();
    ck.optimizer.beta2 = o.at("beta2").get<double>();
    ck.optimizer.epsilon = o.at("epsilon").get<double>();
    ck.optimizer.learning_rate = o.at("learning_rate").get<double>();
    ck.optimizer.decay_per_epoch = o.at("decay_per_epoch").get<double>();
    ck.optimizer.step = o.at("step").get<std::uint64_t>();
    if (o.at("moments").get<bool>()) {
      const auto tensors = ck.params.tensors();
      for (auto* blobs : {&ck.optimizer.m, &ck.optimizer.v})
        for (const auto& t : tensors) {
          blobs->emplace_back(t.size());
          r.f32s(blobs->back());
        }
    }
    ck.epoch = header.at("epoch").get<std::uint64_t>();
    ck.epoch_losses = header.at("epoch_losses").get<std::vector<double>>();
    ck.features = feature_config_from_json(header.at("features"));
    ck.trained_styles = header.at("trained_styles").get<std::vector<int>>();
    ck.train_config = header.at("train_config");
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (r.remaining() != 0) throw FormatError("checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  dsp::write_file_bytes(tmp, bytes);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(dsp::read_file_bytes(path)); }

}  // namespace audiomorph::model
