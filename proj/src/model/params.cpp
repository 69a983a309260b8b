#include "audiomorph/model/params.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace audiomorph::model {

namespace {

using ad::Tensor;

class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}

  Tensor<float> glorot(std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<float> v(fan_in * fan_out);
    for (auto& x : v) x = static_cast<float>(u(rng_));
    return Tensor<float>({fan_in, fan_out}, std::move(v), true);
  }

  // [H, 4H] with each H x H gate block an independent orthogonal matrix.
  Tensor<float> orthogonal_blocks(std::size_t h, std::size_t blocks) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<float> v(h * h * blocks);
    for (std::size_t g = 0; g < blocks; ++g) {
      Eigen::MatrixXd a(h, h);
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = n(rng_);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (Eigen::Index j = 0; j < q.cols(); ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < h; ++j)
          v[i * h * blocks + g * h + j] = static_cast<float>(q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    return Tensor<float>({h, h * blocks}, std::move(v), true);
  }

  static Tensor<float> zeros(std::size_t n) { return Tensor<float>::zeros({n}, true); }

  DenseParams<float> dense(std::size_t in, std::size_t out) { return {glorot(in, out), zeros(out)}; }

  LstmParams<float> lstm(std::size_t in, std::size_t h) {
    LstmParams<float> p{glorot(in, 4 * h), orthogonal_blocks(h, 4), zeros(4 * h)};
    auto b = p.bias.mutable_values();
    for (std::size_t j = h; j < 2 * h; ++j) b[j] = 1.0f;
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::size_t encoder_input_size(const ModelConfig& cfg) {
  const std::size_t frame = cfg.conv_layers.empty() ? cfg.n_mels : cfg.conv_layers.back().channels;
  return frame + cfg.n_styles;
}

ModelParams<float> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Init init(seed);
  ModelParams<float> p;
  p.config = cfg;
  const std::size_t h = cfg.hidden_size;
  const std::size_t a = cfg.attention_size;

  std::size_t in = cfg.n_mels;
  for (const auto& c : cfg.conv_layers) {
    p.conv.push_back(init.dense(c.kernel * in, c.channels));
    in = c.channels;
  }
  p.encoder.push_back(init.lstm(encoder_input_size(cfg), h));
  for (std::size_t i = 0; i < cfg.pyramid_layers; ++i) p.encoder.push_back(init.lstm(2 * h, h));
  for (std::size_t i = 0; i < cfg.decoder_layers; ++i) p.bridge.push_back(init.dense(h, h));
  for (std::size_t i = 0; i < cfg.decoder_layers; ++i)
    p.decoder.push_back(init.lstm(i == 0 ? cfg.n_mels + h + cfg.n_styles : h, h));
  p.attention.W = init.glorot(h, a);
  p.attention.V = init.glorot(h, a);
  p.attention.b = Init::zeros(a);
  if (cfg.attention == AttentionKind::additive)
    p.attention.w = init.glorot(a, 1);
  else
    p.attention.key_bias = Init::zeros(a);
  p.output = init.dense(2 * h, cfg.n_mels);
  return p;
}

}  // namespace audiomorph::model
