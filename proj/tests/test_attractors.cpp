#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afrg/attractor.hpp"
#include "afrg/error.hpp"
#include "afrg/pieced.hpp"
#include "afrg/rng.hpp"
#include "oracles.hpp"

using namespace afrg;

TEST_CASE("spread spectrum generation is deterministic per seed") {
  auto a = gen_spread_spectrum(DecoderSeed{42}, 3, 16);
  auto b = gen_spread_spectrum(DecoderSeed{42}, 3, 16);
  CHECK(a == b);
}

TEST_CASE("distinct seeds give distinct messages") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto a = gen_spread_spectrum(DecoderSeed{seed}, 2, 8);
    auto b = gen_spread_spectrum(DecoderSeed{seed + 1000}, 2, 8);
    CHECK(a.messages().values() != b.messages().values());
  }
}

TEST_CASE("generated message rows have unit norm") {
  auto dec = gen_spread_spectrum(DecoderSeed{7}, 4, 32);
  for (std::size_t j = 0; j < 4; ++j) {
    const double n = std::sqrt(dot(dec.messages().row(j), dec.messages().row(j)));
    CHECK(std::fabs(n - 1.0) <= 1e-9);
  }
  auto qim = gen_qim(DecoderSeed{7}, 3, 32, 8);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t h = 0; h < 8; ++h) {
      const double n = std::sqrt(dot(qim.message(j, h), qim.message(j, h)));
      CHECK(std::fabs(n - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("spread spectrum response examples") {
  auto dec = gen_spread_spectrum(DecoderSeed{1}, 3, 8, 2.5);
  Vector zero(8, 0.0);
  for (double c : eval_spread_spectrum(dec, zero)) CHECK(c == 0.0);

  // orthonormal rows: response picks out each row's coefficient
  Matrix basis(2, 3, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0});
  SpreadSpectrumDecoder ortho(basis, 1.0);
  Vector x{1.0, 0.0, 0.0};
  Vector c = eval_spread_spectrum(ortho, x);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(0.0));

  SplitMix64 rng(3);
  Vector r = oracles::random_point(rng, 8);
  Vector got = eval_spread_spectrum(dec, r);
  for (std::size_t j = 0; j < 3; ++j) {
    double naive = 0.0;
    for (std::size_t i = 0; i < 8; ++i) naive += r[i] * dec.messages()(j, i);
    naive *= 2.5;
    CHECK(got[j] == doctest::Approx(naive).epsilon(1e-13));
  }
  CHECK_THROWS_AS(eval_spread_spectrum(dec, Vector(5, 0.0)), DimensionError);
}

TEST_CASE("quant residual analytic points") {
  const double d = 0.5;
  CHECK(quant_residual(d / 2.0, d) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(quant_residual(0.0, d) == doctest::Approx(d / 2.0));
  CHECK_THROWS_AS(quant_residual(1.0, 0.0), DomainError);
}

TEST_CASE("quant residual equals brute-force lattice search") {
  SplitMix64 rng(88);
  for (int trial = 0; trial < 10000; ++trial) {
    const double y = rng.next_in(-40.0, 40.0);
    const double step = rng.next_in(0.05, 3.0);
    CHECK(std::fabs(quant_residual(y, step) - oracles::lattice_residual(y, step)) < 1e-10);
  }
}

TEST_CASE("quant residual is periodic with period step") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const double y = rng.next_in(-50.0, 50.0);
    const double step = rng.next_in(0.1, 2.0);
    CHECK(std::fabs(quant_residual(y + step, step) - quant_residual(y, step)) <= 1e-12);
  }
}

namespace {

//! 1D QIM decoder with a single known message direction per class.
QimDecoder line_qim(double step) {
  Matrix messages(2, 2, {1.0, 0.0, 0.0, 1.0});
  return QimDecoder(messages, 2, step, {1.0});
}

}  // namespace

TEST_CASE("qim response hits 1 on lattice points and 0 at maximal error") {
  const double step = 0.5;
  QimDecoder dec = line_qim(step);
  // projections: y0 = x[0], y1 = x[1]; lattice points at (k - 1/2) * step
  Vector on_lattice{0.25, 0.75};
  Vector e = eval_qim(dec, on_lattice);
  CHECK(e[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e[1] == doctest::Approx(1.0).epsilon(1e-12));

  Vector max_err{0.5, 1.0};  // y = k * step: farthest from the offset lattice
  Vector e2 = eval_qim(dec, max_err);
  CHECK(e2[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e2[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("qim response matches the residual oracle composition") {
  auto dec = gen_qim(DecoderSeed{5}, 3, 16, 8, 0.4);
  SplitMix64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x = oracles::random_point(rng, 16);
    Vector got = eval_qim(dec, x);
    for (std::size_t j = 0; j < 3; ++j) {
      double total = 0.0;
      for (std::size_t h = 0; h < 8; ++h) {
        const double y = dot(dec.message(j, h), x.span());
        total += dec.weights()[h] * oracles::lattice_residual(y, 0.4);
      }
      const double expected = 1.0 - total / dec.max_error();
      CHECK(got[j] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("qim responses stay in [0,1]") {
  auto dec = gen_qim(DecoderSeed{9}, 4, 24, 16);
  SplitMix64 rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector x = oracles::random_point(rng, 24);
    for (double e : eval_qim(dec, x)) {
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
  }
}

TEST_CASE("qim regeneration is bit identical") {
  auto a = gen_qim(DecoderSeed{123}, 3, 16, 8);
  auto b = gen_qim(DecoderSeed{123}, 3, 16, 8);
  CHECK(a == b);
}

TEST_CASE("spread spectrum gradient is exactly gain times the message") {
  auto dec = gen_spread_spectrum(DecoderSeed{21}, 3, 12, 4.0);
  Vector x(12, 0.5);
  for (std::size_t j = 0; j < 3; ++j) {
    Vector g = decoder_input_gradient(dec, x, j);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(g[i] == 4.0 * dec.messages()(j, i));
    }
  }
}

TEST_CASE("qim gradient matches finite differences away from kinks") {
  auto dec = gen_qim(DecoderSeed{31}, 3, 10, 6, 0.5);
  SplitMix64 rng(32);
  std::size_t checked = 0;
  for (int trial = 0; checked < 20 && trial < 400; ++trial) {
    Vector x = oracles::random_point(rng, 10);
    if (!oracles::qim_margin_ok(dec, x, 1e-3)) continue;
    const std::size_t cls = rng.next_below(3);
    Vector got = decoder_input_gradient(dec, x, cls);
    Vector fd = finite_difference_input_gradient(
        [&](const Vector& p) { return eval_qim(dec, p)[cls]; }, x, 1e-5);
    CHECK(oracles::rel_l2_error(got, fd) < 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("qim gradient is zero when every residual sign vanishes") {
  QimDecoder dec = line_qim(0.5);
  Vector x{0.25, 0.75};  // both projections exactly on lattice points: sign == 0
  for (std::size_t cls = 0; cls < 2; ++cls) {
    Vector g = decoder_input_gradient(dec, x, cls);
    for (double v : g) CHECK(v == 0.0);
  }
}

TEST_CASE("piece_together validates dimensions") {
  Model master = oracles::random_mlp(1, {6, 5, 3});
  CHECK_THROWS_AS(piece_together(master, gen_qim(DecoderSeed{2}, 4, 6, 4)), DimensionError);
  CHECK_THROWS_AS(piece_together(master, gen_qim(DecoderSeed{2}, 3, 7, 4)), DimensionError);
  PiecedModel ok = piece_together(master, gen_qim(DecoderSeed{2}, 3, 6, 4));
  SplitMix64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    CHECK_NOTHROW(pieced_forward(ok, oracles::random_point(rng, 6)));
  }
}

TEST_CASE("pieced forward with a zero response reduces to the master bitwise") {
  Model master = oracles::random_mlp(4, {5, 6, 3});
  // spread spectrum at x = 0: every correlation is exactly zero
  PiecedModel pm = piece_together(master, gen_spread_spectrum(DecoderSeed{5}, 3, 5));
  Vector zero(5, 0.0);
  CHECK(pieced_forward(pm, zero) == master.forward(zero));
}

TEST_CASE("pieced forward favors the class a dominant response points to") {
  // uniform master: zero weights. One-hot-ish qim response via known messages.
  Matrix w(3, 2, 0.0);
  Model master({{std::move(w), Vector(3, 0.0), Activation::identity}});
  Matrix messages(3, 2,
                  {1.0, 0.0,  //
                   0.0, 1.0,  //
                   std::sqrt(0.5), std::sqrt(0.5)});
  QimDecoder dec(messages, 3, 0.5, {1.0});
  PiecedModel pm = piece_together(master, AttractorDecoder{dec});
  // class 0 projection on a lattice point -> e_0 == 1; others land elsewhere
  Vector x{0.25, 0.6};
  Vector out = pieced_forward(pm, x);
  CHECK(argmax_index(out) == 0);
}

TEST_CASE("pieced forward matches a naive recomputation and keeps unit L1 norm") {
  Model master = oracles::random_mlp(8, {6, 7, 3});
  PiecedModel pm = piece_together(master, gen_qim(DecoderSeed{11}, 3, 6, 8));
  SplitMix64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x = oracles::random_point(rng, 6);
    Vector got = pieced_forward(pm, x);

    std::vector<double> probs = oracles::naive_softmax(oracles::naive_logits(master, x.values()));
    Vector response = eval_qim(std::get<QimDecoder>(pm.decoder()), x);
    double norm = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) norm += std::fabs(probs[i] + response[i]);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      CHECK(got[i] == doctest::Approx((probs[i] + response[i]) / norm).epsilon(1e-12));
    }
    CHECK(std::fabs(l1_norm(got) - 1.0) <= 1e-12);
    // qim keeps both summands nonnegative
    double sum = 0.0;
    for (double v : got) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("pieced gradient with a zero-gain decoder reduces to the master") {
  Model master = oracles::random_mlp(14, {5, 6, 3});
  PiecedModel pm = piece_together(master, gen_spread_spectrum(DecoderSeed{15}, 3, 5, 0.0));
  SplitMix64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x = oracles::random_point(rng, 5);
    Vector got = pieced_input_gradient(pm, x, 1);
    Vector master_grad = input_gradient(master, x, 1);
    CHECK(oracles::rel_l2_error(got, master_grad) < 1e-12);
    CHECK(pieced_forward(pm, x) == master.forward(x));
  }
}

TEST_CASE("pieced gradient matches finite differences away from kinks") {
  Model master = oracles::random_mlp(18, {6, 8, 3});
  PiecedModel pm = piece_together(master, gen_qim(DecoderSeed{19}, 3, 6, 8));
  const auto& dec = std::get<QimDecoder>(pm.decoder());
  SplitMix64 rng(20);
  std::size_t checked = 0;
  for (int trial = 0; checked < 20 && trial < 400; ++trial) {
    Vector x = oracles::random_point(rng, 6);
    if (!oracles::qim_margin_ok(dec, x, 1e-3)) continue;
    if (!oracles::relu_margin_ok(master, x, 1e-3)) continue;
    const std::size_t label = rng.next_below(3);
    Vector got = pieced_input_gradient(pm, x, label);
    Vector fd = finite_difference_input_gradient(
        [&](const Vector& p) { return cross_entropy(pieced_forward(pm, p), label); }, x, 1e-5);
    CHECK(oracles::rel_l2_error(got, fd) < 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("scaling the spread gain leaves the argmax unchanged where the response is zero") {
  Model master = oracles::random_mlp(22, {5, 5, 3});
  Vector zero(5, 0.0);
  const std::size_t base = argmax_index(master.forward(zero));
  for (double gain : {0.5, 5.0, 50.0}) {
    PiecedModel pm = piece_together(master, gen_spread_spectrum(DecoderSeed{23}, 3, 5, gain));
    CHECK(argmax_index(pieced_forward(pm, zero)) == base);
  }
}

TEST_CASE("a vanishing sum raises an error instead of being perturbed") {
  // uniform master (0.5, 0.5) plus a correlation response of (-0.5, -0.5)
  Matrix zero_w(2, 2, 0.0);
  Model master({{std::move(zero_w), Vector(2, 0.0), Activation::identity}});
  Matrix basis(2, 2, {1.0, 0.0, 0.0, 1.0});
  PiecedModel pm = piece_together(master, SpreadSpectrumDecoder(basis, 1.0));
  Vector cancel{-0.5, -0.5};
  CHECK_THROWS_AS(pieced_forward(pm, cancel), DegenerateError);
  CHECK_THROWS_AS(pieced_input_gradient(pm, cancel, 0), DegenerateError);
}

TEST_CASE("spread spectrum pieced output keeps unit L1 norm with signed entries") {
  Model master = oracles::random_mlp(24, {6, 6, 3});
  PiecedModel pm = piece_together(master, gen_spread_spectrum(DecoderSeed{25}, 3, 6, 5.0));
  SplitMix64 rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    Vector out = pieced_forward(pm, oracles::random_point(rng, 6));
    CHECK(std::fabs(l1_norm(out) - 1.0) <= 1e-12);
  }
}
