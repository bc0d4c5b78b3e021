#include "afrg/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "afrg/error.hpp"
#include "afrg/rng.hpp"

namespace afrg {

namespace {

constexpr double kGradFloor = 1e-12;

double sign_of(double v) {
  if (v > 0.0) return 1.0;
  if (v < 0.0) return -1.0;
  return 0.0;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void clip_box(Vector& x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = clamp01(x[i]);
}

void require_dims(const AttackableModel& m, const LabeledSample& s) {
  if (s.x.size() != m.input_dim()) throw DimensionError("attack: sample length != model dim");
  if (s.label >= m.num_classes()) throw DomainError("attack: label out of range");
}

//! Success predicate, distances, and the minimization budget in one place.
AttackOutcome finish(const AttackableModel& m, const LabeledSample& s, Vector x_adv,
                     std::size_t iterations, const AttackConfig& cfg) {
  if (is_minimization_attack(cfg.kind) && cfg.epsilon > 0.0) {
    if (l2_distance(x_adv, s.x) > cfg.epsilon) x_adv = s.x;  // over budget: keep the input
  }
  AttackOutcome out;
  out.l2_dist = l2_distance(x_adv, s.x);
  out.linf_dist = linf_distance(x_adv, s.x);
  out.success = misclassified(m, x_adv, s.label);
  out.x_adv = std::move(x_adv);
  out.iterations_used = iterations;
  return out;
}

AttackOutcome immediate(const Vector& x, bool success) {
  return AttackOutcome{x, success, 0.0, 0.0, 0};
}

//! Label whose cross-entropy the gradient steps climb (or descend, targeted).
std::size_t objective_label(const LabeledSample& s, const AttackConfig& cfg) {
  return cfg.targeted ? cfg.target_class : s.label;
}

Vector ascent_gradient(const AttackableModel& m, const Vector& x, const LabeledSample& s,
                       const AttackConfig& cfg) {
  Vector g = m.loss_gradient(x, objective_label(s, cfg));
  if (cfg.targeted) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i];
  }
  return g;
}

}  // namespace

const char* attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::fgm: return "fgm";
    case AttackKind::pgd_l2: return "pgd_l2";
    case AttackKind::pgd_linf: return "pgd_linf";
    case AttackKind::deepfool: return "deepfool";
    case AttackKind::cw: return "cw";
    case AttackKind::boundary: return "boundary";
  }
  return "unknown";
}

std::optional<AttackKind> attack_kind_from_name(const std::string& name) {
  for (AttackKind k : {AttackKind::fgsm, AttackKind::fgm, AttackKind::pgd_l2, AttackKind::pgd_linf,
                       AttackKind::deepfool, AttackKind::cw, AttackKind::boundary}) {
    if (name == attack_kind_name(k)) return k;
  }
  return std::nullopt;
}

bool is_minimization_attack(AttackKind kind) {
  return kind == AttackKind::deepfool || kind == AttackKind::cw || kind == AttackKind::boundary;
}

std::size_t AttackConfig::effective_steps() const {
  if (steps > 0) return steps;
  switch (kind) {
    case AttackKind::pgd_l2:
    case AttackKind::pgd_linf: return 40;
    case AttackKind::deepfool: return 50;
    case AttackKind::cw: return 200;
    case AttackKind::boundary: return 2000;
    default: return 1;
  }
}

double AttackConfig::effective_step_size() const {
  if (step_size > 0.0) return step_size;
  switch (kind) {
    case AttackKind::pgd_l2:
    case AttackKind::pgd_linf: return 2.5 * epsilon / static_cast<double>(effective_steps());
    case AttackKind::cw: return 0.01;
    default: return epsilon;
  }
}

AttackOutcome fgsm(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg) {
  require_dims(m, s);
  if (cfg.epsilon < 0.0) throw DomainError("fgsm: epsilon must be nonnegative");
  if (misclassified(m, s.x, s.label)) return immediate(s.x, true);
  Vector g = ascent_gradient(m, s.x, s, cfg);
  Vector x_adv(s.x.size());
  for (std::size_t i = 0; i < x_adv.size(); ++i) {
    x_adv[i] = clamp01(s.x[i] + cfg.epsilon * sign_of(g[i]));
  }
  return finish(m, s, std::move(x_adv), 1, cfg);
}

AttackOutcome fgm(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg) {
  require_dims(m, s);
  if (cfg.epsilon < 0.0) throw DomainError("fgm: epsilon must be nonnegative");
  if (misclassified(m, s.x, s.label)) return immediate(s.x, true);
  Vector g = ascent_gradient(m, s.x, s, cfg);
  const double norm = l2_norm(g);
  if (norm < kGradFloor) return immediate(s.x, false);
  Vector x_adv(s.x.size());
  for (std::size_t i = 0; i < x_adv.size(); ++i) {
    x_adv[i] = clamp01(s.x[i] + cfg.epsilon * g[i] / norm);
  }
  return finish(m, s, std::move(x_adv), 1, cfg);
}

AttackOutcome pgd(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg,
                  PgdNorm norm) {
  require_dims(m, s);
  if (cfg.epsilon < 0.0) throw DomainError("pgd: epsilon must be nonnegative");
  if (misclassified(m, s.x, s.label)) return immediate(s.x, true);

  const std::size_t steps = cfg.effective_steps();
  const double step = cfg.effective_step_size();
  const double eps = cfg.epsilon;

  Vector x_t = s.x;
  if (cfg.rng_seed != 0) {  // seed 0 starts deterministically at x
    SplitMix64 rng(cfg.rng_seed);
    if (norm == PgdNorm::linf) {
      for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] += rng.next_in(-eps, eps);
    } else {
      Vector dir(x_t.size());
      double sq = 0.0;
      for (std::size_t i = 0; i < dir.size(); ++i) {
        dir[i] = rng.next_gaussian();
        sq += dir[i] * dir[i];
      }
      const double dn = std::sqrt(sq);
      if (dn >= kGradFloor) {
        const double radius =
            eps * std::pow(rng.next_unit(), 1.0 / static_cast<double>(x_t.size()));
        for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] += radius * dir[i] / dn;
      }
    }
    clip_box(x_t);
  }

  for (std::size_t t = 0; t < steps; ++t) {
    Vector g = ascent_gradient(m, x_t, s, cfg);
    if (norm == PgdNorm::linf) {
      for (std::size_t i = 0; i < x_t.size(); ++i) {
        double v = x_t[i] + step * sign_of(g[i]);
        v = std::min(s.x[i] + eps, std::max(s.x[i] - eps, v));
        x_t[i] = clamp01(v);
      }
    } else {
      const double gn = l2_norm(g);
      if (gn >= kGradFloor) {
        for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] += step * g[i] / gn;
      }
      Vector d = x_t - s.x;
      const double dn = l2_norm(d);
      if (dn > eps) {
        const double scale = eps / dn;
        for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] = s.x[i] + scale * d[i];
      }
      clip_box(x_t);
    }
  }
  return finish(m, s, std::move(x_t), steps, cfg);
}

AttackOutcome deepfool(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg) {
  require_dims(m, s);
  if (cfg.targeted) throw DomainError("deepfool: targeted mode unsupported");
  if (!(cfg.overshoot > 0.0)) throw DomainError("deepfool: overshoot must be positive");
  if (misclassified(m, s.x, s.label)) return immediate(s.x, true);

  const std::size_t steps = cfg.effective_steps();
  const double eta = cfg.overshoot;
  const std::size_t orig = predicted_class(m, s.x);

  Vector acc(s.x.size(), 0.0);
  std::size_t iterations = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    Vector x_t(s.x.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      x_t[i] = clamp01(s.x[i] + (1.0 + eta) * acc[i]);
    }
    if (predicted_class(m, x_t) != orig) break;

    Vector z = m.scores(x_t);
    Vector g_orig = m.score_gradient(x_t, orig);
    bool found = false;
    double best_ratio = 0.0;
    double best_f = 0.0;
    double best_wnorm = 0.0;
    Vector best_w;
    for (std::size_t j = 0; j < m.num_classes(); ++j) {
      if (j == orig) continue;
      Vector w = m.score_gradient(x_t, j) - g_orig;
      const double wnorm = l2_norm(w);
      if (wnorm < kGradFloor) continue;
      const double f = z[j] - z[orig];
      const double ratio = std::fabs(f) / wnorm;
      if (!found || ratio < best_ratio) {
        found = true;
        best_ratio = ratio;
        best_f = f;
        best_wnorm = wnorm;
        best_w = std::move(w);
      }
    }
    if (!found) break;  // all candidate hyperplanes degenerate

    const double scale = std::fabs(best_f) / (best_wnorm * best_wnorm);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * best_w[i];
    ++iterations;
  }

  Vector x_adv(s.x.size());
  for (std::size_t i = 0; i < x_adv.size(); ++i) {
    x_adv[i] = clamp01(s.x[i] + (1.0 + eta) * acc[i]);
  }
  return finish(m, s, std::move(x_adv), iterations, cfg);
}

AttackOutcome cw(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg) {
  require_dims(m, s);
  if (cfg.cw_c < 0.0) throw DomainError("cw: c must be nonnegative");
  if (cfg.cw_kappa < 0.0) throw DomainError("cw: kappa must be nonnegative");
  if (misclassified(m, s.x, s.label)) return immediate(s.x, true);

  const std::size_t steps = cfg.effective_steps();
  const double step = cfg.effective_step_size();
  const double c = cfg.cw_c;
  const double kappa = cfg.cw_kappa;
  const std::size_t label = s.label;

  Vector x_t = s.x;
  Vector best;
  double best_norm = 0.0;
  bool have_best = false;

  for (std::size_t t = 0; t < steps; ++t) {
    Vector z = m.scores(x_t);
    // Hinge term: un-targeted pushes z_label below its strongest rival;
    // targeted pushes the target above everything else.
    const std::size_t anchor = cfg.targeted ? cfg.target_class : label;
    std::size_t other = anchor == 0 ? 1 : 0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != anchor && z[j] > z[other]) other = j;
    }
    const std::size_t up = cfg.targeted ? other : label;    // gradient added
    const std::size_t down = cfg.targeted ? anchor : other; // gradient subtracted
    const double margin = z[up] - z[down];

    Vector grad(x_t.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = 2.0 * (x_t[i] - s.x[i]);
    if (c > 0.0 && margin > -kappa) {
      Vector gu = m.score_gradient(x_t, up);
      Vector gd = m.score_gradient(x_t, down);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += c * (gu[i] - gd[i]);
    }
    for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] = clamp01(x_t[i] - step * grad[i]);

    if (misclassified(m, x_t, label)) {
      const double n = l2_distance(x_t, s.x);
      if (!have_best || n < best_norm) {
        best = x_t;
        best_norm = n;
        have_best = true;
      }
    }
  }
  return finish(m, s, have_best ? std::move(best) : std::move(x_t), steps, cfg);
}

AttackOutcome boundary_attack(const BlackBoxModel& m, const LabeledSample& s,
                              const AttackConfig& cfg, BoundaryTrace* trace) {
  if (s.x.size() != m.input_dim) throw DimensionError("boundary: sample length != model dim");
  if (s.label >= m.num_classes) throw DomainError("boundary: label out of range");
  if (cfg.targeted) throw DomainError("boundary: targeted mode unsupported");

  const auto adversarial = [&](const Vector& x) { return argmax_index(m.forward(x)) != s.label; };
  if (adversarial(s.x)) return immediate(s.x, true);

  SplitMix64 rng(cfg.rng_seed);
  const std::size_t steps = cfg.effective_steps();

  // init: uniform draws in the box until one is adversarial
  Vector x_t(s.x.size(), 0.0);
  bool initialized = false;
  for (std::size_t attempt = 0; attempt < 200; ++attempt) {
    for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] = rng.next_unit();
    if (adversarial(x_t)) {
      initialized = true;
      break;
    }
  }
  if (!initialized) return immediate(s.x, false);
  if (trace) trace->accepted.push_back(x_t);

  double gamma_orth = cfg.gamma_orth;
  double gamma_src = cfg.gamma_src;
  std::size_t window_proposals = 0;
  std::size_t window_accepts = 0;

  Vector noise(s.x.size(), 0.0);
  for (std::size_t step = 0; step < steps; ++step) {
    Vector d = x_t - s.x;
    const double dist = l2_norm(d);
    if (dist < 1e-12) break;

    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = rng.next_gaussian();
    const double along = dot(noise, d) / (dist * dist);
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] -= along * d[i];
    const double nn = l2_norm(noise);
    if (nn < 1e-12) continue;

    // orthogonal move, re-projected onto the sphere of radius dist around x
    Vector cand(s.x.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      cand[i] = x_t[i] + (gamma_orth * dist / nn) * noise[i];
    }
    Vector from_src = cand - s.x;
    const double fn = l2_norm(from_src);
    if (fn < 1e-12) continue;
    const double contract = (1.0 - gamma_src) * dist / fn;  // sphere + step toward x
    for (std::size_t i = 0; i < cand.size(); ++i) {
      cand[i] = clamp01(s.x[i] + contract * from_src[i]);
    }

    ++window_proposals;
    if (adversarial(cand)) {
      x_t = std::move(cand);
      ++window_accepts;
      if (trace) trace->accepted.push_back(x_t);
    }
    if (window_proposals == 20) {
      const double rate = static_cast<double>(window_accepts) / 20.0;
      const double factor = rate > 0.5 ? 1.1 : (rate < 0.5 ? 0.9 : 1.0);
      gamma_orth = std::min(std::max(gamma_orth * factor, 1e-9), 1e3);
      gamma_src = std::min(std::max(gamma_src * factor, 1e-9), 0.999);
      window_proposals = 0;
      window_accepts = 0;
    }
  }

  // success predicate via the same forward-only capability
  AttackOutcome out;
  out.l2_dist = l2_distance(x_t, s.x);
  out.linf_dist = linf_distance(x_t, s.x);
  out.success = adversarial(x_t);
  out.iterations_used = steps;
  out.x_adv = std::move(x_t);
  if (cfg.epsilon > 0.0 && out.l2_dist > cfg.epsilon) {
    out.x_adv = s.x;
    out.l2_dist = 0.0;
    out.linf_dist = 0.0;
    out.success = adversarial(s.x);
  }
  return out;
}

AttackOutcome run_attack(const AttackableModel& m, const LabeledSample& s,
                         const AttackConfig& cfg) {
  switch (cfg.kind) {
    case AttackKind::fgsm: return fgsm(m, s, cfg);
    case AttackKind::fgm: return fgm(m, s, cfg);
    case AttackKind::pgd_l2: return pgd(m, s, cfg, PgdNorm::l2);
    case AttackKind::pgd_linf: return pgd(m, s, cfg, PgdNorm::linf);
    case AttackKind::deepfool: return deepfool(m, s, cfg);
    case AttackKind::cw: return cw(m, s, cfg);
    case AttackKind::boundary: return boundary_attack(BlackBoxModel::of(m), s, cfg);
  }
  throw DomainError("run_attack: unknown attack kind");
}

DispatchResult attack_dispatch(const AttackableModel& m, std::span<const LabeledSample> samples,
                               const AttackConfig& cfg) {
  DispatchResult result;
  result.n_input = samples.size();
  for (std::size_t idx = 0; idx < samples.size(); ++idx) {
    const LabeledSample& s = samples[idx];
    if (misclassified(m, s.x, s.label)) continue;  // attack only correctly classified inputs

    AttackConfig per_sample = cfg;
    if (cfg.rng_seed == 0 && cfg.kind != AttackKind::boundary) {
      per_sample.rng_seed = 0;  // keep the "no random start" convention
    } else {
      per_sample.rng_seed = derive_nonzero(cfg.rng_seed, idx);
    }

    AttackOutcome outcome;
    try {
      outcome = run_attack(m, s, per_sample);
    } catch (const Error&) {
      outcome = AttackOutcome{s.x, false, 0.0, 0.0, 0};  // per-sample failure, batch continues
    }
    result.outcomes.push_back(std::move(outcome));
    result.samples.push_back(s);
  }
  return result;
}

}  // namespace afrg
