#include <cmath>
#include <random>

#include "audiomorph/autodiff/adam.hpp"
#include "audiomorph/autodiff/ops.hpp"
#include "audiomorph/model/checkpoint.hpp"
#include "audiomorph/model/seq2seq.hpp"
#include "doctest.h"
#include "support/finite_difference.hpp"
#include "support/model_fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace audiomorph;
using namespace audiomorph::model;
using audiomorph::testing::random_example;
using audiomorph::testing::random_log_mel;
using audiomorph::testing::tiny_config;

namespace {

ModelConfig shaped(std::vector<std::size_t> strides, std::size_t pyramid, std::size_t mels = 4) {
  auto c = tiny_config(mels);
  c.conv_layers.clear();
  for (auto s : strides) c.conv_layers.push_back({3, 3, s});
  c.pyramid_layers = pyramid;
  c.context_ms = static_cast<double>(c.reduction_factor()) * 12.5;
  return c;
}

// Reference length law: repeated ceiling division, computed independently.
std::size_t expected_length(std::size_t t, std::size_t stride_product, std::size_t pyramid) {
  double len = std::ceil(static_cast<double>(t) / static_cast<double>(stride_product));
  len = std::ceil(len / std::pow(2.0, static_cast<double>(pyramid)));
  return static_cast<std::size_t>(len);
}

double row_sum(const dsp::Spectrogram& a, std::size_t t) {
  double s = 0;
  for (auto v : a.frame(t)) s += v;
  return s;
}

}  // namespace

TEST_CASE("context sizes map to strides and pyramid depth") {
  const std::size_t expected[] = {1, 2, 4, 8, 16};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto c = for_context(kContextSizesMs[i]);
    CHECK(c.reduction_factor() == expected[i]);
    CHECK_NOTHROW(c.validate());
  }
  CHECK(for_context(50).stride_product() == 2);
  CHECK(for_context(50).pyramid_layers == 1);
  CHECK(for_context(200).stride_product() == 4);
  CHECK_THROWS_AS(for_context(75), InvalidInput);
  ModelConfig bad;
  bad.context_ms = 100;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = ModelConfig{};
  bad.conv_layers[0].kernel = 2;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("encoder length examples") {
  std::mt19937_64 rng(1);
  auto c = shaped({2, 1}, 2);
  auto p = init_params(c, 3);
  CHECK(encode(p, random_log_mel(rng, 16, 4), 0).length() == 2);
  CHECK(c.encoder_length(16) == 2);

  auto id = shaped({1, 1}, 0);
  auto pid = init_params(id, 3);
  for (std::size_t t : {1u, 5u, 12u}) CHECK(encode(pid, random_log_mel(rng, t, 4), 1).length() == t);
}

TEST_CASE("encoder length law on random configurations") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> stride(1, 3), pyr(0, 3), layers(0, 2), extra(0, 23);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::size_t> strides(layers(rng));
    for (auto& s : strides) s = stride(rng);
    auto c = shaped(strides, pyr(rng));
    const std::size_t t = c.reduction_factor() + extra(rng);
    auto p = init_params(c, static_cast<std::uint64_t>(trial));
    const auto enc = encode(p, random_log_mel(rng, t, 4), 0);
    const auto want = expected_length(t, c.stride_product(), c.pyramid_layers);
    CHECK(enc.length() == want);
    CHECK(c.encoder_length(t) == want);
    for (const auto& h : enc.hidden)
      for (auto v : h.values()) CHECK(std::isfinite(v));
  }
  for (std::size_t t = 1; t < 200; ++t) CHECK(ModelConfig{}.encoder_length(t) == expected_length(t, 4, 2));
}

TEST_CASE("encoder rejects short input and bad styles") {
  std::mt19937_64 rng(2);
  auto p = init_params(shaped({2, 2}, 2), 1);
  CHECK_THROWS_AS(encode(p, random_log_mel(rng, 15, 4), 0), InvalidInput);
  CHECK_NOTHROW(encode(p, random_log_mel(rng, 16, 4), 0));
  CHECK_THROWS_AS(encode(p, random_log_mel(rng, 16, 4), 3), InvalidInput);
  CHECK_THROWS_AS(encode(p, random_log_mel(rng, 16, 4), -1), InvalidInput);
  CHECK_THROWS_AS(encode(p, random_log_mel(rng, 16, 5), 0), ShapeError);
}

TEST_CASE("source style changes the encoding") {
  std::mt19937_64 rng(3);
  auto p = init_params(tiny_config(4, 8), 5);
  const auto x = random_log_mel(rng, 12, 4);
  const auto a = encode(p, x, 0);
  const auto b = encode(p, x, 2);
  double gap = 0;
  for (std::size_t j = 0; j < a.length(); ++j)
    for (std::size_t k = 0; k < a.hidden[j].size(); ++k) {
      const double d = a.hidden[j].values()[k] - b.hidden[j].values()[k];
      gap += d * d;
    }
  CHECK(gap > 1e-8);
}

TEST_CASE("attention over identical hiddens is uniform") {
  std::mt19937_64 rng(4);
  auto p = init_params(tiny_config(4, 5), 7);
  EncoderState<float> enc;
  const auto h = testing::random_tensor(rng, {1, 5}, false).cast<float>(false);
  enc.hidden.assign(6, h);
  enc.lengths = {6};
  enc.mask.assign(6, 1);
  const auto mem = attention_memory(p, enc);
  const auto s = testing::random_tensor(rng, {1, 5}, false).cast<float>(false);
  const auto att = attend(s, mem, p.attention);
  for (auto a : att.alpha.values()) CHECK(a == doctest::Approx(1.0 / 6).epsilon(1e-6));
  for (std::size_t k = 0; k < 5; ++k) CHECK(att.context.values()[k] == doctest::Approx(h.values()[k]).epsilon(1e-5));
}

TEST_CASE("a dominant score takes almost all attention") {
  auto c = tiny_config(4, 2);
  c.attention_size = 1;
  auto p = init_params(c, 1).cast<double>();
  for (auto& v : p.attention.W.mutable_values()) v = 0;
  p.attention.V.mutable_values()[0] = 10;  // tanh(10 * 5) is 1 to double precision
  p.attention.V.mutable_values()[1] = 0;
  p.attention.w.mutable_values()[0] = 20;
  EncoderState<double> enc;
  const std::size_t len = 5;
  for (std::size_t j = 0; j < len; ++j) enc.hidden.push_back(ad::Tensor<double>({1, 2}, {j == 2 ? 5.0 : 0.0, 1.0}));
  enc.lengths = {len};
  enc.mask.assign(len, 1);
  const auto att = attend(ad::Tensor<double>::zeros({1, 2}), attention_memory(p, enc), p.attention);
  // e_2 = 20 tanh(50), other scores 0.
  const double oracle = 1.0 / (1.0 + (len - 1) * std::exp(-20.0 * std::tanh(50.0)));
  CHECK(att.alpha.values()[2] == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(att.alpha.values()[2] > 0.999);
}

TEST_CASE("attention rows are distributions for random states, both score forms") {
  std::mt19937_64 rng(5);
  for (auto kind : {AttentionKind::additive, AttentionKind::mlp_dot}) {
    auto c = tiny_config(4, 6);
    c.attention = kind;
    for (int trial = 0; trial < 10; ++trial) {
      auto p = init_params(c, static_cast<std::uint64_t>(trial));
      const auto enc = encode(p, random_log_mel(rng, 8 + static_cast<std::size_t>(trial), 4), trial % 3);
      const auto mem = attention_memory(p, enc);
      auto s = testing::random_tensor(rng, {1, 6}, false);
      for (auto& v : s.mutable_values()) v *= 3;
      const auto att = attend(s.cast<float>(false), mem, p.attention, kind);
      double sum = 0;
      for (auto a : att.alpha.values()) {
        CHECK(a >= 0.0f);
        sum += a;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  EncoderState<float> empty;
  AttentionMemory<float> mem;
  mem.encoder = &empty;
  auto p = init_params(tiny_config(), 1);
  CHECK_THROWS_AS(attend(ad::Tensor<float>::zeros({1, 3}), mem, p.attention), InvalidInput);
}

TEST_CASE("attention masks padded encoder steps") {
  std::mt19937_64 rng(6);
  auto c = tiny_config(4, 4);
  auto p = init_params(c, 2);
  std::vector<data::TransformExample> ex{random_example(rng, c, 8, 6), random_example(rng, c, 16, 6)};
  const std::vector<std::size_t> idx{0, 1};
  const auto batch = data::make_batch(ex, idx);
  const auto enc = encode(p, source_batch<float>(batch));
  CHECK(enc.lengths == std::vector<std::size_t>{2, 4});
  const auto mem = attention_memory(p, enc);
  const auto att = attend(initial_decoder_state(p, enc).h.back(), mem, p.attention);
  CHECK(att.alpha.values()[2] == 0.0f);
  CHECK(att.alpha.values()[3] == 0.0f);
  const auto single = encode(p, ex[0].source, ex[0].source_style);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(enc.final_state.values()[k] == doctest::Approx(single.final_state.values()[k]).epsilon(1e-6));
}

TEST_CASE("decoder start state and target conditioning") {
  std::mt19937_64 rng(7);
  auto c = tiny_config(4, 6);
  auto p = init_params(c, 9);
  const auto enc = encode(p, random_log_mel(rng, 10, 4), 1);
  const auto mem = attention_memory(p, enc);
  const auto s0 = initial_decoder_state(p, enc);
  for (auto v : s0.context.values()) CHECK(v == 0.0f);
  for (const auto& cell : s0.c)
    for (auto v : cell.values()) CHECK(v == 0.0f);
  const auto go = ad::Tensor<float>::zeros({1, 4});
  const auto a = decode_step(p, go, s0, {0}, mem);
  const auto b = decode_step(p, go, s0, {2}, mem);
  double gap = 0;
  for (std::size_t k = 0; k < 4; ++k) gap = std::max(gap, std::abs(double(a.frame.values()[k]) - b.frame.values()[k]));
  CHECK(gap > 0);
  CHECK_THROWS_AS(decode_step(p, go, s0, {3}, mem), InvalidInput);
  CHECK_THROWS_AS(decode_step(p, ad::Tensor<float>::zeros({1, 5}), s0, {0}, mem), ShapeError);
}

TEST_CASE("loss is teacher forced") {
  std::mt19937_64 rng(8);
  auto c = tiny_config(4, 5);
  auto p = init_params(c, 4).cast<double>();
  const auto ex = random_example(rng, c, 9, 7);
  const auto enc = encode(p, ex.source, ex.source_style);
  const auto mem = attention_memory(p, enc);
  auto state = initial_decoder_state(p, enc);
  auto y_prev = ad::Tensor<double>::zeros({1, 4});
  double total = 0;
  for (std::size_t i = 0; i < ex.target.frames; ++i) {
    auto step = decode_step(p, y_prev, state, {ex.target_style}, mem);
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = step.frame.values()[k] - ex.target.at(i, k);
      total += d * d;
    }
    state = step.state;
    const auto f = ex.target.frame(i);
    y_prev = ad::Tensor<double>({1, 4}, std::vector<double>(f.begin(), f.end()));
  }
  total /= static_cast<double>(ex.target.frames * 4);
  CHECK(example_loss(p, ex).item() == doctest::Approx(total).epsilon(1e-12));
  const std::vector<data::TransformExample> one{ex};
  const std::vector<std::size_t> idx{0};
  CHECK(loss(p, data::make_batch(one, idx)).item() == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("loss is zero when predictions equal targets") {
  std::mt19937_64 rng(9);
  auto c = tiny_config(4, 3);
  auto p = init_params(c, 1);
  for (auto& v : p.output.weight.mutable_values()) v = 0;
  for (auto& v : p.output.bias.mutable_values()) v = 0.25f;
  auto ex = random_example(rng, c, 8, 5);
  for (auto& v : ex.target.values) v = 0.25f;
  const std::vector<data::TransformExample> one{ex};
  const std::vector<std::size_t> idx{0};
  CHECK(loss(p, data::make_batch(one, idx)).item() == 0.0f);
}

TEST_CASE("padding does not change the loss and one-example batches match the unbatched path") {
  std::mt19937_64 rng(10);
  auto c = tiny_config(4, 6);
  auto p = init_params(c, 12);
  std::vector<data::TransformExample> ex;
  for (std::size_t i = 0; i < 4; ++i) ex.push_back(random_example(rng, c, 8 + 3 * i, 5 + 2 * i));
  const auto idx = testing::iota_indices(4);
  const auto tight = data::make_batch(ex, idx);
  const auto loose = data::make_batch(ex, idx, 2 * tight.source_frames, 2 * tight.target_frames);
  CHECK(loss(p, loose).item() == doctest::Approx(loss(p, tight).item()).epsilon(1e-6));
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const std::vector<std::size_t> one{i};
    const double batched = loss(p, data::make_batch(ex, one)).item();
    CHECK(std::abs(batched - example_loss(p, ex[i]).item()) <= 1e-6);
  }
  data::PaddedBatch empty;
  CHECK_THROWS_AS(loss(p, empty), InvalidInput);
}

TEST_CASE("gradients reach every parameter") {
  std::mt19937_64 rng(11);
  for (auto kind : {AttentionKind::additive, AttentionKind::mlp_dot}) {
    auto c = tiny_config(4, 6);
    c.attention = kind;
    auto p = init_params(c, 21);
    std::vector<data::TransformExample> ex;
    for (std::size_t i = 0; i < 3; ++i) ex.push_back(random_example(rng, c, 9 + i, 6 + i));
    const auto batch = data::make_batch(ex, testing::iota_indices(3));
    ad::Graph<float> g;
    {
      ad::GraphScope<float> scope(g);
      g.backward(loss(p, batch));
    }
    p.visit([](const std::string& name, const ad::Tensor<float>& t) {
      INFO(name);
      REQUIRE(t.has_grad());
      float biggest = 0;
      for (auto v : t.grad()) biggest = std::max(biggest, std::abs(v));
      CHECK(biggest > 0.0f);
    });
  }
}

TEST_CASE("composed training graph matches finite differences") {
  std::mt19937_64 rng(12);
  for (auto kind : {AttentionKind::additive, AttentionKind::mlp_dot}) {
    for (int trial = 0; trial < 3; ++trial) {
      auto c = tiny_config();
      c.attention = kind;
      auto p = init_params(c, static_cast<std::uint64_t>(100 + trial)).cast<double>();
      std::vector<data::TransformExample> ex{random_example(rng, c, 9, 5), random_example(rng, c, 6, 4)};
      const auto batch = data::make_batch(ex, testing::iota_indices(2));
      const auto leaves = p.tensors();
      testing::jitter(leaves, rng);
      const auto res = testing::check_gradients(
          leaves, [&](const testing::Leaves&) { return loss(p, batch); }, 1e-4, 1e-4, 1e-6, 6,
          static_cast<std::uint64_t>(trial));
      INFO(res.worst);
      CHECK(res.ok);
      CHECK(res.checked > 50);
    }
  }
}

TEST_CASE("a few Adam steps reduce the teacher-forced loss") {
  std::mt19937_64 rng(13);
  auto c = tiny_config(6, 12);
  auto p = init_params(c, 3);
  std::vector<data::TransformExample> ex;
  for (int i = 0; i < 4; ++i) ex.push_back(random_example(rng, c, 8, 8));
  const auto batch = data::make_batch(ex, testing::iota_indices(4));
  auto params = p.tensors();
  ad::AdamState opt;
  opt.learning_rate = 1e-2;
  double first = 0, last = 0;
  for (int step = 0; step < 40; ++step) {
    ad::zero_grads(std::span(params));
    ad::Graph<float> g;
    ad::GraphScope<float> scope(g);
    const auto l = loss(p, batch);
    if (step == 0) first = l.item();
    last = l.item();
    g.backward(l);
    ad::adam_step(std::span(params), opt);
  }
  CHECK(last < 0.8 * first);
}

TEST_CASE("transform decodes to the frame budget and reports attention") {
  std::mt19937_64 rng(14);
  auto c = tiny_config(4, 5);
  auto p = init_params(c, 6);
  const auto x = random_log_mel(rng, 10, 4);
  const auto one = transform(p, x, 0, 1, 1);
  CHECK(one.decoded_frames == 1);
  CHECK(one.output.frames == 1);
  const auto full = transform(p, x, 0, 1);
  CHECK(full.decoded_frames == 12);
  CHECK(full.output.scale == dsp::Scale::log_mel);
  CHECK(full.attention.scale == dsp::Scale::attention);
  CHECK(full.attention.frames == full.output.frames);
  CHECK(full.attention.bins == c.encoder_length(10));
  for (std::size_t t = 0; t < full.attention.frames; ++t) CHECK(row_sum(full.attention, t) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(transform(p, x, 0, 7), InvalidInput);
  CHECK_THROWS_AS(transform(p, random_log_mel(rng, 2, 4), 0, 1), InvalidInput);
}

TEST_CASE("transform trims trailing silence but keeps one frame") {
  std::mt19937_64 rng(15);
  auto c = tiny_config(4, 3);
  auto p = init_params(c, 6);
  for (auto& v : p.output.weight.mutable_values()) v = 0;
  for (auto& v : p.output.bias.mutable_values()) v = static_cast<float>(std::log(1e-5));
  const auto r = transform(p, random_log_mel(rng, 10, 4), 0, 1);
  CHECK(r.decoded_frames == 12);
  CHECK(r.output.frames == 1);
  CHECK(r.attention.frames == 1);
  for (auto& v : p.output.bias.mutable_values()) v = static_cast<float>(std::log(2e-5)) + 1e-3f;
  CHECK(transform(p, random_log_mel(rng, 10, 4), 0, 1).output.frames == 12);
}

TEST_CASE("initialization") {
  const auto c = ModelConfig{};
  const auto p = init_params(c, 42);
  const auto q = init_params(c, 42);
  auto a = p.tensors();
  auto b = q.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::equal(a[i].values().begin(), a[i].values().end(), b[i].values().begin()));
  CHECK(init_params(c, 43).output.weight.values()[0] != p.output.weight.values()[0]);

  const std::size_t h = c.hidden_size;
  const auto& w = p.decoder[0].w_hidden;
  for (std::size_t g = 0; g < 4; ++g) {
    double worst = 0;
    for (std::size_t i = 0; i < h; i += 17)
      for (std::size_t j = 0; j < h; j += 13) {
        double dot = 0;
        for (std::size_t r = 0; r < h; ++r) dot += double(w.values()[r * 4 * h + g * h + i]) * w.values()[r * 4 * h + g * h + j];
        worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
      }
    CHECK(worst < 1e-5);
  }
  for (std::size_t j = 0; j < 4 * h; ++j) CHECK(p.encoder[0].bias.values()[j] == (j >= h && j < 2 * h ? 1.0f : 0.0f));
  const double limit = std::sqrt(6.0 / (2 * h + c.n_mels));
  for (auto v : p.output.weight.values()) CHECK(std::abs(v) <= limit);
  CHECK(p.conv[0].weight.shape() == ad::Shape{3 * 80, 32});
  CHECK(p.encoder.size() == 3);
  CHECK(p.attention.w.shape() == ad::Shape{128, 1});
}

TEST_CASE("checkpoint round trip") {
  auto c = tiny_config(4, 5);
  Checkpoint ck;
  ck.params = init_params(c, 17);
  ck.optimizer.learning_rate = 9.9e-4;
  ck.optimizer.step = 12;
  for (const auto& t : ck.params.tensors()) {
    ck.optimizer.m.emplace_back(t.size(), 0.5f);
    ck.optimizer.v.emplace_back(t.size(), 0.25f);
  }
  ck.epoch = 3;
  ck.epoch_losses = {1.5, 1.25, 1.0};
  ck.trained_styles = {0, 1, 2};
  ck.train_config = {{"seed", 7}};
  const auto bytes = encode_checkpoint(ck);
  CHECK(std::string(bytes.begin(), bytes.begin() + 7) == "AMCKPT1");
  const auto back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(back.params.config == c);
  CHECK(back.optimizer.learning_rate == 9.9e-4);
  CHECK(back.optimizer.step == 12);
  CHECK(back.epoch_losses == ck.epoch_losses);
  CHECK(back.train_config["seed"] == 7);

  testing::TempDir dir;
  save_checkpoint(dir / "m.ckpt", ck);
  CHECK(encode_checkpoint(load_checkpoint(dir / "m.ckpt")) == bytes);

  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(cut), FormatError);
  auto junk = bytes;
  junk.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(junk), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);
}
