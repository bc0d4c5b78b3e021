#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afrg/error.hpp"
#include "afrg/model.hpp"
#include "afrg/rng.hpp"
#include "oracles.hpp"

using namespace afrg;

namespace {

Model identity_2x2() {
  Matrix w(2, 2, {1.0, 0.0, 0.0, 1.0});
  return Model({{std::move(w), Vector(2, 0.0), Activation::identity}});
}

}  // namespace

TEST_CASE("vector and matrix construction invariants") {
  CHECK_THROWS_AS(Vector(std::vector<double>{}), DimensionError);
  CHECK_THROWS_AS(Vector({1.0, std::nan("")}), DomainError);
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Matrix(0, 2, 0.0), DimensionError);
  Vector v{1.0, -2.0, 2.0};
  CHECK(l1_norm(v) == doctest::Approx(5.0));
  CHECK(l2_norm(v) == doctest::Approx(3.0));
  CHECK(linf_norm(v) == doctest::Approx(2.0));
}

TEST_CASE("argmax breaks ties toward the lowest class index") {
  CHECK(argmax_index(Vector{0.5, 0.5}) == 0);
  CHECK(argmax_index(Vector{0.1, 0.6, 0.6}) == 1);
}

TEST_CASE("forward on symmetric single layer gives the uniform soft-label") {
  Model m = identity_2x2();
  Vector out = m.forward(Vector{0.0, 0.0});
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("forward matches hand-computed 2-2-2 relu network") {
  // Hand arithmetic: x=(1, 0.5), layer1 W=[[1,-2],[0.5,1]] b=(0.25,-1), relu
  //   pre1 = (1*1 - 2*0.5 + 0.25, 0.5*1 + 1*0.5 - 1) = (0.25, 0)
  //   act1 = (0.25, 0)
  // layer2 W=[[2,1],[-1,3]] b=(0,0.5): z = (0.5, 0.25)
  Matrix w1(2, 2, {1.0, -2.0, 0.5, 1.0});
  Matrix w2(2, 2, {2.0, 1.0, -1.0, 3.0});
  Model m({{std::move(w1), Vector{0.25, -1.0}, Activation::relu},
           {std::move(w2), Vector{0.0, 0.5}, Activation::identity}});
  Vector z = m.logits(Vector{1.0, 0.5});
  CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(0.25).epsilon(1e-15));
  Vector p = m.forward(Vector{1.0, 0.5});
  const double e0 = std::exp(0.5), e1 = std::exp(0.25);
  CHECK(p[0] == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-14));
}

TEST_CASE("forward output is a probability vector for random models") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    Model m = oracles::random_mlp(100 + trial, {5, 7, 4});
    Vector x = oracles::random_point(rng, 5);
    Vector p = m.forward(x);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("logits of identity layer reproduce the input") {
  Model m = identity_2x2();
  Vector z = m.logits(Vector{1.0, 2.0});
  CHECK(z[0] == 1.0);
  CHECK(z[1] == 2.0);
}

TEST_CASE("softmax of logits equals forward bit for bit") {
  Model m = oracles::random_mlp(7, {6, 8, 3});
  SplitMix64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x = oracles::random_point(rng, 6);
    Vector via_parts = softmax(m.logits(x));
    Vector direct = m.forward(x);
    CHECK(via_parts == direct);
  }
}

TEST_CASE("logits match an independent naive evaluator") {
  Model m = oracles::random_mlp(11, {6, 5, 4});
  SplitMix64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x = oracles::random_point(rng, 6);
    std::vector<double> naive = oracles::naive_logits(m, x.values());
    Vector z = m.logits(x);
    for (std::size_t i = 0; i < z.size(); ++i) {
      CHECK(z[i] == doctest::Approx(naive[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("forward and logits are deterministic") {
  Model m = oracles::random_mlp(13, {4, 6, 3});
  Vector x{0.1, 0.9, 0.4, 0.2};
  CHECK(m.forward(x) == m.forward(x));
  CHECK(m.logits(x) == m.logits(x));
}

TEST_CASE("forward rejects dimension mismatch") {
  Model m = identity_2x2();
  CHECK_THROWS_AS(m.forward(Vector{1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(m.logits(Vector{1.0}), DimensionError);
}

TEST_CASE("cross entropy basics") {
  CHECK(cross_entropy(Vector{1.0, 0.0}, 0) == doctest::Approx(0.0));
  CHECK(cross_entropy(Vector{0.5, 0.5}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(Vector{0.5, 0.5}, 2), DomainError);
}

TEST_CASE("cross entropy matches the high-precision recomputation") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> raw(4);
    double sum = 0.0;
    for (double& v : raw) {
      v = rng.next_open_unit();
      sum += v;
    }
    for (double& v : raw) v /= sum;
    Vector probs(raw);
    const std::size_t label = rng.next_below(4);
    CHECK(cross_entropy(probs, label) ==
          doctest::Approx(oracles::high_precision_cross_entropy(raw, label)).epsilon(1e-14));
  }
}

TEST_CASE("zero-weight model has zero input gradient") {
  Matrix w(3, 4, 0.0);
  Model m({{std::move(w), Vector(3, 0.0), Activation::identity}});
  Vector g = input_gradient(m, Vector{0.1, 0.2, 0.3, 0.4}, 1);
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("binary linear model gradient matches the logistic closed form") {
  // two-class linear model; d(-log p_y)/dx = (p - onehot)^T W
  Matrix w(2, 3, {1.0, -0.5, 0.25, -0.75, 0.5, 1.5});
  Model m({{w, Vector{0.1, -0.2}, Activation::identity}});
  Vector x{0.3, 0.8, 0.1};
  Vector p = m.forward(x);
  const std::size_t label = 0;
  Vector expected(3);
  for (std::size_t c = 0; c < 3; ++c) {
    expected[c] = (p[0] - 1.0) * w(0, c) + p[1] * w(1, c);
  }
  Vector g = input_gradient(m, x, label);
  for (std::size_t c = 0; c < 3; ++c) CHECK(g[c] == doctest::Approx(expected[c]).epsilon(1e-12));
}

TEST_CASE("input gradient matches central finite differences on random models") {
  SplitMix64 rng(2024);
  std::size_t checked = 0;
  for (int trial = 0; checked < 25 && trial < 200; ++trial) {
    Model m = oracles::random_mlp(500 + trial, {6, 8, 8, 3});
    Vector x = oracles::random_point(rng, 6);
    if (!oracles::relu_margin_ok(m, x, 1e-3)) continue;
    const std::size_t label = rng.next_below(3);
    Vector got = input_gradient(m, x, label);
    Vector fd = finite_difference_input_gradient(
        [&](const Vector& p) { return cross_entropy(m.forward(p), label); }, x, 1e-5);
    CHECK(oracles::rel_l2_error(got, fd) < 1e-4);
    ++checked;
  }
  CHECK(checked == 25);
}

TEST_CASE("bias gradient of zero-weight single layer equals softmax minus onehot") {
  Matrix w(3, 2, 0.0);
  Model m({{std::move(w), Vector(3, 0.0), Activation::identity}});
  std::vector<LabeledSample> batch = {{Vector{0.4, 0.6}, 2}};
  auto grads = param_gradients(m, batch);
  // softmax of zero logits is uniform 1/3
  CHECK(grads[0].bias[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(grads[0].bias[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(grads[0].bias[2] == doctest::Approx(1.0 / 3.0 - 1.0).epsilon(1e-14));
}

TEST_CASE("duplicated sample leaves the mean parameter gradient unchanged") {
  Model m = oracles::random_mlp(77, {4, 5, 3});
  LabeledSample s{Vector{0.2, 0.4, 0.6, 0.8}, 1};
  std::vector<LabeledSample> once = {s};
  std::vector<LabeledSample> twice = {s, s};
  auto g1 = param_gradients(m, once);
  auto g2 = param_gradients(m, twice);
  for (std::size_t k = 0; k < g1.size(); ++k) {
    for (std::size_t i = 0; i < g1[k].bias.size(); ++i) {
      CHECK(g2[k].bias[i] == doctest::Approx(g1[k].bias[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("parameter gradients match finite differences") {
  Model m = oracles::random_mlp(321, {4, 6, 3});
  SplitMix64 rng(8);
  std::vector<LabeledSample> batch;
  for (int i = 0; i < 5; ++i) {
    batch.push_back({oracles::random_point(rng, 4), rng.next_below(3)});
  }
  auto batch_loss = [&](const Model& model) {
    double total = 0.0;
    for (const LabeledSample& s : batch) total += cross_entropy(model.forward(s.x), s.label);
    return total / static_cast<double>(batch.size());
  };
  auto grads = param_gradients(m, batch);
  const double h = 1e-6;
  Model probe = m;
  for (std::size_t k = 0; k < m.layers().size(); ++k) {
    for (std::size_t r = 0; r < m.layers()[k].weights.rows(); ++r) {
      for (std::size_t c = 0; c < m.layers()[k].weights.cols(); c += 2) {
        const double orig = probe.layers()[k].weights(r, c);
        probe.mutable_layers()[k].weights(r, c) = orig + h;
        const double up = batch_loss(probe);
        probe.mutable_layers()[k].weights(r, c) = orig - h;
        const double down = batch_loss(probe);
        probe.mutable_layers()[k].weights(r, c) = orig;
        const double fd = (up - down) / (2.0 * h);
        CHECK(grads[k].weights(r, c) == doctest::Approx(fd).epsilon(2e-4));
      }
    }
  }
}

TEST_CASE("param gradients reject an empty batch") {
  Model m = identity_2x2();
  CHECK_THROWS_AS(param_gradients(m, std::span<const LabeledSample>{}), DomainError);
}

TEST_CASE("finite differences recover analytic gradients of simple functions") {
  Vector x{0.3, -0.7, 1.2};
  Vector g_sum = finite_difference_input_gradient(
      [](const Vector& p) {
        double s = 0.0;
        for (double v : p) s += v;
        return s;
      },
      x, 1e-5);
  for (double v : g_sum) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  Vector g_sq = finite_difference_input_gradient(
      [](const Vector& p) {
        double s = 0.0;
        for (double v : p) s += v * v;
        return s;
      },
      x, 1e-5);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(g_sq[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-8));
  }

  CHECK_THROWS_AS(finite_difference_input_gradient([](const Vector&) { return 0.0; }, x, 0.0),
                  DomainError);
}

TEST_CASE("model construction validates layer chaining") {
  Matrix w1(3, 2, 0.5);
  Matrix w2(2, 4, 0.5);  // does not chain: 4 != 3
  CHECK_THROWS_AS(Model({{w1, Vector(3, 0.0), Activation::relu},
                         {w2, Vector(2, 0.0), Activation::identity}}),
                  DimensionError);
  CHECK_THROWS_AS(Model({{w1, Vector(2, 0.0), Activation::relu}}), DimensionError);
}
