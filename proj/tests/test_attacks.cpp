#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afrg/attacks.hpp"
#include "afrg/error.hpp"
#include "afrg/rng.hpp"
#include "oracles.hpp"

using namespace afrg;

namespace {

//! Two-class linear 2D model: class 0 below the line x0 + x1 = 1.1, class 1 above.
Model tilted_line() {
  Matrix w(2, 2, {0.0, 0.0, 2.0, 2.0});
  return Model({{std::move(w), Vector{0.0, -2.2}, Activation::identity}});
}

Model three_class_linear() {
  Matrix w(3, 2,
           {3.0, 0.5,   //
            -1.0, 2.5,  //
            0.5, -2.0});
  return Model({{std::move(w), Vector{0.4, -0.1, 0.2}, Activation::identity}});
}

AttackConfig config_for(AttackKind kind, double eps) {
  AttackConfig cfg;
  cfg.kind = kind;
  cfg.epsilon = eps;
  return cfg;
}

}  // namespace

TEST_CASE("fgsm with zero epsilon returns the input unchanged") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample sample{Vector{0.3, 0.3}, 0};
  REQUIRE(!misclassified(s, sample.x, sample.label));
  AttackOutcome o = fgsm(s, sample, config_for(AttackKind::fgsm, 0.0));
  CHECK(o.x_adv == sample.x);
  CHECK(!o.success);
}

TEST_CASE("fgsm follows the analytic signed gradient of a linear model") {
  Model m = tilted_line();
  ModelSurface s(m);
  Vector x{0.3, 0.35};
  LabeledSample sample{x, 0};
  const double eps = 0.05;
  AttackOutcome o = fgsm(s, sample, config_for(AttackKind::fgsm, eps));

  // label 0: grad = (p0 - 1) * (w0 - w1)
  Vector p = m.forward(x);
  Vector expected(2);
  for (std::size_t i = 0; i < 2; ++i) {
    const double g = (p[0] - 1.0) * (m.layers()[0].weights(0, i) - m.layers()[0].weights(1, i));
    const double step = eps * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
    expected[i] = std::min(1.0, std::max(0.0, x[i] + step));
  }
  CHECK(o.x_adv == expected);
  CHECK(o.linf_dist <= eps + 1e-9);
}

TEST_CASE("fgsm clipping pins coordinates at the box edge") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample sample{Vector{1.0, 0.05}, 0};
  REQUIRE(!misclassified(s, sample.x, sample.label));
  AttackOutcome o = fgsm(s, sample, config_for(AttackKind::fgsm, 0.2));
  // gradient for label 0 pushes both coordinates up; x0 is already at 1.0
  CHECK(o.x_adv[0] == 1.0);
  CHECK(o.x_adv[1] == doctest::Approx(0.25));
}

TEST_CASE("fgm basics") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample sample{Vector{0.4, 0.35}, 0};

  AttackOutcome zero_eps = fgm(s, sample, config_for(AttackKind::fgm, 0.0));
  CHECK(zero_eps.x_adv == sample.x);

  const double eps = 0.07;
  AttackOutcome o = fgm(s, sample, config_for(AttackKind::fgm, eps));
  CHECK(o.l2_dist == doctest::Approx(eps).epsilon(1e-9));  // interior point: clip is a no-op

  Matrix wz(2, 2, 0.0);
  Model zero_model({{std::move(wz), Vector(2, 0.0), Activation::identity}});
  ModelSurface sz(zero_model);
  AttackOutcome degenerate = fgm(sz, LabeledSample{Vector{0.2, 0.8}, 0},
                                 config_for(AttackKind::fgm, 0.1));
  CHECK(degenerate.x_adv == Vector{0.2, 0.8});
  CHECK(!degenerate.success);
}

TEST_CASE("pgd linf with one full-size step and no random start reproduces fgsm") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample sample{Vector{0.3, 0.35}, 0};
  AttackConfig cfg = config_for(AttackKind::pgd_linf, 0.06);
  cfg.steps = 1;
  cfg.step_size = 0.06;
  cfg.rng_seed = 0;  // start exactly at x
  AttackOutcome via_pgd = pgd(s, sample, cfg, PgdNorm::linf);
  AttackOutcome via_fgsm = fgsm(s, sample, config_for(AttackKind::fgsm, 0.06));
  CHECK(via_pgd.x_adv == via_fgsm.x_adv);
}

TEST_CASE("pgd respects its norm ball") {
  Model m = three_class_linear();
  ModelSurface s(m);
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x = oracles::random_point(rng, 2);
    LabeledSample sample{x, predicted_class(s, x)};
    AttackConfig cfg = config_for(AttackKind::pgd_l2, 0.15);
    cfg.rng_seed = 1000 + trial;
    AttackOutcome o2 = pgd(s, sample, cfg, PgdNorm::l2);
    CHECK(o2.l2_dist <= 0.15 + 1e-9);

    cfg.kind = AttackKind::pgd_linf;
    AttackOutcome oi = pgd(s, sample, cfg, PgdNorm::linf);
    CHECK(oi.linf_dist <= 0.15 + 1e-9);
  }
}

TEST_CASE("pgd is deterministic for a fixed seed") {
  Model m = three_class_linear();
  ModelSurface s(m);
  LabeledSample sample{Vector{0.6, 0.4}, predicted_class(s, Vector{0.6, 0.4})};
  AttackConfig cfg = config_for(AttackKind::pgd_l2, 0.2);
  cfg.rng_seed = 77;
  AttackOutcome a = pgd(s, sample, cfg, PgdNorm::l2);
  AttackOutcome b = pgd(s, sample, cfg, PgdNorm::l2);
  CHECK(a.x_adv == b.x_adv);
  CHECK(a.success == b.success);
  CHECK(a.iterations_used == b.iterations_used);
}

TEST_CASE("deepfool returns immediately on a misclassified input") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample wrong{Vector{0.9, 0.9}, 0};  // model says class 1 up there
  REQUIRE(predicted_class(s, wrong.x) == 1);
  AttackOutcome o = deepfool(s, wrong, config_for(AttackKind::deepfool, 0.0));
  CHECK(o.x_adv == wrong.x);
  CHECK(o.success);
  CHECK(o.iterations_used == 0);
}

TEST_CASE("deepfool lands within 5 percent of the linear minimal perturbation") {
  Model m = tilted_line();
  ModelSurface s(m);
  Vector x{0.4, 0.4};
  LabeledSample sample{x, predicted_class(s, x)};
  AttackOutcome o = deepfool(s, sample, config_for(AttackKind::deepfool, 0.0));
  const double closed_form =
      oracles::linear_boundary_distance(m.layers()[0].weights, m.layers()[0].bias, x.values());
  CHECK(o.success);
  CHECK(o.l2_dist >= closed_form * 0.999);
  CHECK(o.l2_dist <= closed_form * 1.05);
}

TEST_CASE("deepfool picks the nearest hyperplane of a 3-class linear model") {
  Model m = three_class_linear();
  ModelSurface s(m);
  Vector x{0.62, 0.43};
  const std::size_t orig = predicted_class(s, x);
  LabeledSample sample{x, orig};
  AttackOutcome o = deepfool(s, sample, config_for(AttackKind::deepfool, 0.0));
  REQUIRE(o.success);

  // enumerate the per-class closed forms
  Vector z = m.logits(x);
  double best = 0.0;
  std::size_t best_cls = orig;
  bool first = true;
  for (std::size_t j = 0; j < 3; ++j) {
    if (j == orig) continue;
    double num = z[j] - z[orig];
    double sq = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      const double d = m.layers()[0].weights(j, c) - m.layers()[0].weights(orig, c);
      sq += d * d;
    }
    const double dist = std::fabs(num) / std::sqrt(sq);
    if (first || dist < best) {
      best = dist;
      best_cls = j;
      first = false;
    }
  }
  CHECK(predicted_class(s, o.x_adv) == best_cls);
  CHECK(o.l2_dist <= best * 1.05);
}

TEST_CASE("cw with c = 0 descends the pure norm term and stays at x") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample sample{Vector{0.3, 0.3}, 0};
  AttackConfig cfg = config_for(AttackKind::cw, 0.0);
  cfg.cw_c = 0.0;
  AttackOutcome o = cw(s, sample, cfg);
  CHECK(o.x_adv == sample.x);
  CHECK(!o.success);
}

TEST_CASE("cw lands within 10 percent of the linear minimal perturbation") {
  Model m = tilted_line();
  ModelSurface s(m);
  Vector x{0.4, 0.4};
  LabeledSample sample{x, predicted_class(s, x)};
  AttackConfig cfg = config_for(AttackKind::cw, 0.0);
  cfg.cw_c = 10.0;
  cfg.steps = 800;
  cfg.step_size = 5e-4;
  AttackOutcome o = cw(s, sample, cfg);
  const double closed_form =
      oracles::linear_boundary_distance(m.layers()[0].weights, m.layers()[0].bias, x.values());
  CHECK(o.success);
  CHECK(o.l2_dist <= closed_form * 1.10);
  CHECK(o.l2_dist >= closed_form * 0.90);
}

TEST_CASE("cw success flag flips exactly with the argmax at kappa zero") {
  Model m = three_class_linear();
  ModelSurface s(m);
  SplitMix64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x = oracles::random_point(rng, 2);
    LabeledSample sample{x, predicted_class(s, x)};
    AttackConfig cfg = config_for(AttackKind::cw, 0.0);
    cfg.cw_c = 5.0;
    cfg.steps = 100;
    cfg.step_size = 2e-3;
    AttackOutcome o = cw(s, sample, cfg);
    CHECK(o.success == misclassified(s, o.x_adv, sample.label));
  }
}

TEST_CASE("boundary attack keeps every accepted iterate adversarial and contracts") {
  Model m = tilted_line();
  ModelSurface s(m);
  Vector x{0.35, 0.35};
  LabeledSample sample{x, predicted_class(s, x)};
  AttackConfig cfg = config_for(AttackKind::boundary, 0.0);
  cfg.rng_seed = 9;
  cfg.steps = 600;
  BoundaryTrace trace;
  AttackOutcome o = boundary_attack(BlackBoxModel::of(s), sample, cfg, &trace);
  REQUIRE(o.success);
  REQUIRE(!trace.accepted.empty());
  for (const Vector& iterate : trace.accepted) {
    CHECK(misclassified(s, iterate, sample.label));
    for (double v : iterate) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const double initial = l2_distance(trace.accepted.front(), x);
  CHECK(o.l2_dist <= initial);
}

TEST_CASE("boundary attack approaches the linear boundary distance") {
  Model m = tilted_line();
  ModelSurface s(m);
  Vector x{0.35, 0.35};
  LabeledSample sample{x, predicted_class(s, x)};
  AttackConfig cfg = config_for(AttackKind::boundary, 0.0);
  cfg.rng_seed = 2024;
  cfg.steps = 2000;
  AttackOutcome o = boundary_attack(BlackBoxModel::of(s), sample, cfg);
  const double closed_form =
      oracles::linear_boundary_distance(m.layers()[0].weights, m.layers()[0].bias, x.values());
  REQUIRE(o.success);
  CHECK(o.l2_dist <= closed_form * 1.20);
  CHECK(o.l2_dist >= closed_form * 0.999);  // cannot beat the true distance
}

TEST_CASE("boundary attack is deterministic per seed") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample sample{Vector{0.3, 0.4}, 0};
  AttackConfig cfg = config_for(AttackKind::boundary, 0.0);
  cfg.rng_seed = 5;
  cfg.steps = 300;
  AttackOutcome a = boundary_attack(BlackBoxModel::of(s), sample, cfg);
  AttackOutcome b = boundary_attack(BlackBoxModel::of(s), sample, cfg);
  CHECK(a.x_adv == b.x_adv);
}

TEST_CASE("minimization attacks revert outputs that exceed the epsilon budget") {
  Model m = tilted_line();
  ModelSurface s(m);
  Vector x{0.4, 0.4};
  LabeledSample sample{x, predicted_class(s, x)};
  const double closed_form =
      oracles::linear_boundary_distance(m.layers()[0].weights, m.layers()[0].bias, x.values());
  AttackConfig tight = config_for(AttackKind::deepfool, closed_form * 0.5);
  AttackOutcome capped = deepfool(s, sample, tight);
  CHECK(capped.x_adv == x);
  CHECK(!capped.success);
  CHECK(capped.l2_dist == 0.0);

  AttackConfig loose = config_for(AttackKind::deepfool, closed_form * 2.0);
  AttackOutcome kept = deepfool(s, sample, loose);
  CHECK(kept.success);
  CHECK(kept.l2_dist > 0.0);
}

TEST_CASE("attack outputs stay inside the unit box and their norm budgets") {
  Model m = three_class_linear();
  ModelSurface s(m);
  SplitMix64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    for (AttackKind kind : {AttackKind::fgsm, AttackKind::fgm, AttackKind::pgd_l2,
                            AttackKind::pgd_linf, AttackKind::deepfool, AttackKind::cw}) {
      Vector x = oracles::random_point(rng, 2);
      LabeledSample sample{x, predicted_class(s, x)};
      AttackConfig cfg = config_for(kind, 0.4);
      cfg.rng_seed = 11 + trial;
      AttackOutcome o = run_attack(s, sample, cfg);
      for (double v : o.x_adv) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      if (kind == AttackKind::fgsm || kind == AttackKind::pgd_linf) {
        CHECK(o.linf_dist <= cfg.epsilon + 1e-9);
      }
      if (kind == AttackKind::fgm || kind == AttackKind::pgd_l2) {
        CHECK(o.l2_dist <= cfg.epsilon + 1e-9);
      }
      if (is_minimization_attack(kind)) {
        CHECK(o.l2_dist <= cfg.epsilon + 1e-9);  // budgeted: over-budget outputs revert
      }
    }
  }
}

TEST_CASE("dispatch filters to correctly classified samples and is deterministic") {
  Model m = three_class_linear();
  ModelSurface s(m);
  SplitMix64 rng(77);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 30; ++i) {
    Vector x = oracles::random_point(rng, 2);
    // deliberately wrong label for every third sample
    const std::size_t truth = predicted_class(s, x);
    samples.push_back({x, i % 3 == 0 ? (truth + 1) % 3 : truth});
  }
  AttackConfig cfg = config_for(AttackKind::pgd_linf, 0.1);
  cfg.rng_seed = 13;
  DispatchResult a = attack_dispatch(s, samples, cfg);
  DispatchResult b = attack_dispatch(s, samples, cfg);
  CHECK(a.outcomes.size() == a.samples.size());
  CHECK(a.n_input == samples.size());
  CHECK(a.outcomes.size() == 20);  // two thirds were correctly classified
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    CHECK(a.outcomes[i].x_adv == b.outcomes[i].x_adv);
    CHECK(a.outcomes[i].success == b.outcomes[i].success);
  }
}

TEST_CASE("dispatch of an impossible filter yields an empty outcome list") {
  Model m = tilted_line();
  ModelSurface s(m);
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 5; ++i) {
    Vector x{0.1 * (i + 1), 0.1};
    samples.push_back({x, (predicted_class(s, x) + 1) % 2});  // every label wrong
  }
  DispatchResult r = attack_dispatch(s, samples, config_for(AttackKind::fgsm, 0.1));
  CHECK(r.outcomes.empty());
  CHECK(r.n_input == 5);
}

TEST_CASE("attack distances are consistent with their outputs") {
  Model m = three_class_linear();
  ModelSurface s(m);
  SplitMix64 rng(91);
  Vector x = oracles::random_point(rng, 2);
  LabeledSample sample{x, predicted_class(s, x)};
  AttackConfig cfg = config_for(AttackKind::fgm, 0.2);
  AttackOutcome o = fgm(s, sample, cfg);
  CHECK(std::fabs(o.l2_dist - l2_distance(o.x_adv, x)) <= 1e-9);
  CHECK(std::fabs(o.linf_dist - linf_distance(o.x_adv, x)) <= 1e-9);
}

TEST_CASE("attacks reject dimension mismatches") {
  Model m = tilted_line();
  ModelSurface s(m);
  LabeledSample bad{Vector{0.1, 0.2, 0.3}, 0};
  CHECK_THROWS_AS(fgsm(s, bad, config_for(AttackKind::fgsm, 0.1)), DimensionError);
  CHECK_THROWS_AS(deepfool(s, bad, config_for(AttackKind::deepfool, 0.0)), DimensionError);
}
