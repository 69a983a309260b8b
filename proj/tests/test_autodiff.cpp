#include <cmath>
#include <random>

#include "audiomorph/autodiff/adam.hpp"
#include "audiomorph/autodiff/ops.hpp"
#include "doctest.h"
#include "support/finite_difference.hpp"

using namespace audiomorph;
using namespace audiomorph::ad;
using audiomorph::testing::check_gradients;
using audiomorph::testing::Leaves;
using audiomorph::testing::random_tensor;
using audiomorph::testing::weighted_sum;

namespace {

std::size_t rand_dim(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 4) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

void require_ok(const audiomorph::testing::GradCheck& r) {
  INFO(r.worst);
  CHECK(r.ok);
  CHECK(r.checked > 0);
}

}  // namespace

TEST_CASE("softmax basics") {
  auto y = softmax(Tensor<double>({2}, {0.0, 0.0}));
  CHECK(y.values()[0] == doctest::Approx(0.5));
  CHECK(y.values()[1] == doctest::Approx(0.5));

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor(rng, {3, 7}, false);
    auto p = softmax(scale(x, 5.0));
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        const double v = p.values()[r * 7 + j];
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }

  auto masked = softmax(Tensor<double>({1, 3}, {1.0, 2.0, 3.0}), {1, 0, 1});
  CHECK(masked.values()[1] == 0.0);
  CHECK(masked.values()[0] + masked.values()[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(softmax(Tensor<double>({1, 2}, {1.0, 2.0}), {0, 0}), InvalidInput);
}

TEST_CASE("mse of identical tensors is zero with zero gradient") {
  Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Graph<double> g;
  GraphScope<double> scope(g);
  auto loss = mse_loss(x, x);
  CHECK(loss.item() == 0.0);
  g.backward(loss);
  for (double v : x.grad()) CHECK(v == 0.0);
}

TEST_CASE("backward on simple graphs") {
  Tensor<double> x({3}, {0.1, -0.2, 0.3}, true);
  {
    Graph<double> g;
    GraphScope<double> scope(g);
    g.backward(sum(x));
  }
  for (double v : x.grad()) CHECK(v == 1.0);

  Tensor<double> z({1}, {0.0}, true);
  {
    Graph<double> g;
    GraphScope<double> scope(g);
    g.backward(tanh(z));
  }
  CHECK(z.grad()[0] == doctest::Approx(1.0));

  Graph<double> g;
  GraphScope<double> scope(g);
  Tensor<double> v({2}, {1.0, 2.0}, true);
  auto doubled = scale(v, 2.0);
  CHECK_THROWS_AS(g.backward(doubled), ShapeError);
}

TEST_CASE("matmul shape and gradients") {
  std::mt19937_64 rng(7);
  auto a = random_tensor(rng, {2, 3});
  auto b = random_tensor(rng, {3, 4});
  CHECK(matmul(a, b).shape() == Shape{2, 4});
  auto r = check_gradients({a, b}, [](const Leaves& l) { return weighted_sum(matmul(l[0], l[1]), 1); });
  require_ok(r);
  CHECK_THROWS_WITH_AS(matmul(a, a), "matmul: incompatible shapes [2,3] and [2,3]", ShapeError);
}

TEST_CASE("every op matches central finite differences on random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = rand_dim(rng), k = rand_dim(rng), n = rand_dim(rng);
    const auto seed = static_cast<std::uint64_t>(trial);
    {  // matmul
      require_ok(check_gradients({random_tensor(rng, {m, k}), random_tensor(rng, {k, n})},
                                 [seed](const Leaves& l) { return weighted_sum(matmul(l[0], l[1]), seed); }));
    }
    {  // add with broadcasting
      require_ok(check_gradients({random_tensor(rng, {m, n}), random_tensor(rng, {n})},
                                 [seed](const Leaves& l) { return weighted_sum(add(l[0], l[1]), seed); }));
      require_ok(check_gradients({random_tensor(rng, {2, m, n}), random_tensor(rng, {m, 1})},
                                 [seed](const Leaves& l) { return weighted_sum(add(l[0], l[1]), seed); }));
    }
    {  // sub
      require_ok(check_gradients({random_tensor(rng, {m, n}), random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(sub(l[0], l[1]), seed); }));
    }
    {  // mul
      require_ok(check_gradients({random_tensor(rng, {m, n}), random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(mul(l[0], l[1]), seed); }));
      require_ok(check_gradients({random_tensor(rng, {m, n}), random_tensor(rng, {m, 1})},
                                 [seed](const Leaves& l) { return weighted_sum(mul(l[0], l[1]), seed); }));
    }
    {  // concat
      require_ok(check_gradients({random_tensor(rng, {m, k}), random_tensor(rng, {m, n}), random_tensor(rng, {m, 1})},
                                 [seed](const Leaves& l) { return weighted_sum(concat({l[0], l[1], l[2]}), seed); }));
      require_ok(check_gradients({random_tensor(rng, {k, n}), random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(concat({l[0], l[1]}, 0), seed); }));
    }
    {  // slice
      const std::size_t w = n + 2;
      require_ok(check_gradients({random_tensor(rng, {m, w})},
                                 [seed, n](const Leaves& l) { return weighted_sum(slice(l[0], 1, n + 1), seed); }));
    }
    {  // tanh sigmoid relu scale
      require_ok(check_gradients({random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(tanh(l[0]), seed); }));
      require_ok(check_gradients({random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(sigmoid(l[0]), seed); }));
      require_ok(check_gradients({random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(relu(l[0]), seed); }));
      require_ok(check_gradients({random_tensor(rng, {m, n})},
                                 [seed](const Leaves& l) { return weighted_sum(scale(l[0], -1.7), seed); }));
    }
    {  // softmax
      require_ok(check_gradients({random_tensor(rng, {m, n + 1})},
                                 [seed](const Leaves& l) { return weighted_sum(softmax(l[0]), seed); }));
      std::vector<std::uint8_t> mask(m * (n + 1), 1);
      mask[0] = 0;
      require_ok(check_gradients({random_tensor(rng, {m, n + 1})},
                                 [seed, mask](const Leaves& l) { return weighted_sum(softmax(l[0], mask), seed); }));
    }
    {  // sum and mse_loss
      require_ok(check_gradients({random_tensor(rng, {m, n})}, [](const Leaves& l) { return sum(l[0]); }));
      require_ok(check_gradients({random_tensor(rng, {m, n}), random_tensor(rng, {m, n})},
                                 [](const Leaves& l) { return mse_loss(l[0], l[1]); }));
      std::vector<double> weights(m, 1.0);
      weights[0] = 0.0;
      if (m == 1) weights[0] = 0.5;
      require_ok(check_gradients({random_tensor(rng, {m, n}), random_tensor(rng, {m, n})},
                                 [weights](const Leaves& l) { return mse_loss(l[0], l[1], weights); }));
    }
  }
}

TEST_CASE("random composite graphs match finite differences") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor(rng, {3, 4});
    auto w = random_tensor(rng, {4, 5});
    auto b = random_tensor(rng, {5});
    auto t = random_tensor(rng, {3, 5}, false);
    auto r = check_gradients({x, w, b}, [t](const Leaves& l) {
      auto h = tanh(add(matmul(l[0], l[1]), l[2]));
      auto gate = sigmoid(slice(concat({h, l[0]}), 2, 7));
      return mse_loss(mul(softmax(h), gate), t);
    });
    require_ok(r);
  }
}

TEST_CASE("gradients accumulate across backward passes") {
  std::mt19937_64 rng(4);
  auto a = random_tensor(rng, {2, 3});
  auto b = random_tensor(rng, {3, 2});
  auto run = [&] {
    Graph<double> g;
    GraphScope<double> scope(g);
    g.backward(weighted_sum(tanh(matmul(a, b)), 3));
  };
  run();
  std::vector<double> once(a.grad().begin(), a.grad().end());
  run();
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(a.grad()[i] == 2.0 * once[i]);

  // Same graph, backward twice.
  a.zero_grad();
  Graph<double> g;
  GraphScope<double> scope(g);
  auto loss = weighted_sum(tanh(matmul(a, b)), 3);
  g.backward(loss);
  g.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(a.grad()[i] == 2.0 * once[i]);
}

TEST_CASE("shape errors name both shapes") {
  Tensor<float> a = Tensor<float>::zeros({2, 3});
  Tensor<float> b = Tensor<float>::zeros({4, 3});
  CHECK_THROWS_WITH_AS(add(a, b), "add: cannot broadcast [2,3] with [4,3]", ShapeError);
  CHECK_THROWS_AS(concat(std::vector<Tensor<float>>{a, Tensor<float>::zeros({3, 3})}), ShapeError);
  CHECK_THROWS_AS(slice(a, 2, 5), ShapeError);
  CHECK_THROWS_AS(mse_loss(a, b), ShapeError);
}

TEST_CASE("nan guard reports the op") {
  Tensor<float> x({1}, {-1.0f}, true);
  Graph<float> g;
  GraphScope<float> scope(g);
  Tensor<float> big({1}, {1e30f}, true);
  CHECK_THROWS_WITH_AS(mul(big, big), "non-finite value produced by op 'mul'", NumericError);
  NanGuardScope off(false);
  CHECK_NOTHROW(mul(big, big));
}

TEST_CASE("no recording without an active graph") {
  Tensor<float> x({2}, {1.0f, 2.0f}, true);
  auto y = tanh(x);
  CHECK_FALSE(y.requires_grad());
  Graph<float> g;
  {
    GraphScope<float> scope(g);
    auto z = tanh(x);
    CHECK(z.requires_grad());
  }
  CHECK(g.size() == 1);
}

TEST_CASE("adam update") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor<float> p({3}, {0.5f, -1.0f, 2.0f}, true);
    p.zero_grad();
    AdamState s;
    std::vector<Tensor<float>> params{p};
    adam_step<float>(params, s);
    CHECK(s.step == 1);
    CHECK(p.values()[0] == 0.5f);
    CHECK(p.values()[1] == -1.0f);
    CHECK(p.values()[2] == 2.0f);
  }
  SUBCASE("first step with unit gradient moves by lr / (1 + eps)") {
    Tensor<double> p({1}, {0.0}, true);
    p.zero_grad();
    p.node()->grad[0] = 1.0;
    AdamState s;
    std::vector<Tensor<double>> params{p};
    adam_step<double>(params, s);
    CHECK(std::abs(p.values()[0] - (-1e-3 / (1.0 + 1e-8))) < 1e-15);
  }
  SUBCASE("identical parameters stay identical") {
    Tensor<float> a({2}, {0.3f, 0.4f}, true), b({2}, {0.3f, 0.4f}, true);
    AdamState s;
    std::vector<Tensor<float>> params{a, b};
    for (int i = 0; i < 5; ++i) {
      a.zero_grad();
      b.zero_grad();
      a.node()->grad = {0.1f * i, -0.2f};
      b.node()->grad = {0.1f * i, -0.2f};
      adam_step<float>(params, s);
    }
    CHECK(a.values()[0] == b.values()[0]);
    CHECK(a.values()[1] == b.values()[1]);
    for (float v : s.v[0]) CHECK(v >= 0.0f);
  }
  SUBCASE("missing gradient is an error") {
    Tensor<float> p({1}, {0.0f}, true);
    AdamState s;
    std::vector<Tensor<float>> params{p};
    CHECK_THROWS_AS(adam_step<float>(params, s), Error);
  }
}

TEST_CASE("learning rate decay") {
  AdamState s;
  decay_learning_rate(s);
  CHECK(s.learning_rate == doctest::Approx(9.9e-4).epsilon(1e-12));
  AdamState keep;
  keep.decay_per_epoch = 1.0;
  decay_learning_rate(keep);
  CHECK(keep.learning_rate == 1e-3);
  AdamState fifty;
  for (int i = 0; i < 50; ++i) decay_learning_rate(fifty);
  CHECK(fifty.learning_rate == doctest::Approx(0.0006050060671375364).epsilon(1e-12));
}
