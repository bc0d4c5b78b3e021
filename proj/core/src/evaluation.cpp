#include "afrg/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "afrg/error.hpp"

namespace afrg {

ReplicationReport replicate(std::span<const AttackOutcome> outcomes, const AttackableModel& source,
                            const AttackableModel& target, std::span<const LabeledSample> samples) {
  if (outcomes.empty()) throw DomainError("replicate: empty outcome list");
  if (outcomes.size() != samples.size()) {
    throw DimensionError("replicate: outcomes not aligned with samples");
  }
  if (source.input_dim() != target.input_dim() || source.num_classes() != target.num_classes()) {
    throw DimensionError("replicate: source and target dims disagree");
  }

  ReplicationReport rep;
  rep.n_outputs = outcomes.size();
  double sum_l2 = 0.0;
  double sum_linf = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const AttackOutcome& o = outcomes[i];
    const std::size_t label = samples[i].label;
    const bool on_source = misclassified(source, o.x_adv, label);
    const bool on_target = misclassified(target, o.x_adv, label);
    if (on_source) ++rep.n_adversarial_on_source;
    if (on_target) ++rep.n_misclassified_on_target;
    if (on_source && on_target) ++rep.n_intersection;
    sum_l2 += o.l2_dist;
    sum_linf += o.linf_dist;
  }
  const double n = static_cast<double>(rep.n_outputs);
  rep.initial_rate = static_cast<double>(rep.n_adversarial_on_source) / n;
  rep.rate_all = static_cast<double>(rep.n_misclassified_on_target) / n;
  if (rep.n_adversarial_on_source > 0) {
    rep.rate_adv = static_cast<double>(rep.n_intersection) /
                   static_cast<double>(rep.n_adversarial_on_source);
  }
  rep.avg_l2 = sum_l2 / n;
  rep.avg_linf = sum_linf / n;
  return rep;
}

GradientSimilarityReport gradient_cosine(const AttackableModel& a, const AttackableModel& b,
                                         const Dataset& data) {
  if (a.input_dim() != b.input_dim() || a.num_classes() != b.num_classes()) {
    throw DimensionError("gradient_cosine: model dims disagree");
  }
  if (data.input_dim() != a.input_dim()) {
    throw DimensionError("gradient_cosine: dataset dim != model dim");
  }

  GradientSimilarityReport rep;
  for (const LabeledSample& s : data.samples()) {
    Vector ga = a.loss_gradient(s.x, s.label);
    Vector gb = b.loss_gradient(s.x, s.label);
    const double na = l2_norm(ga);
    const double nb = l2_norm(gb);
    if (na < 1e-12 || nb < 1e-12) {
      ++rep.n_degenerate;
      continue;
    }
    double c = dot(ga, gb) / (na * nb);
    c = std::min(1.0, std::max(-1.0, c));
    rep.cosines.push_back(c);
  }
  if (rep.cosines.empty()) {
    throw DegenerateError("gradient_cosine: every sample had a degenerate gradient");
  }

  double sum = 0.0;
  for (double c : rep.cosines) {
    sum += c;
    const double width = 2.0 / static_cast<double>(kCosineBins);
    auto bin = static_cast<std::size_t>((c + 1.0) / width);
    if (bin >= kCosineBins) bin = kCosineBins - 1;  // c == 1 lands in the last bin
    ++rep.histogram[bin];
  }
  rep.mean = sum / static_cast<double>(rep.cosines.size());

  std::vector<double> sorted = rep.cosines;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  rep.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return rep;
}

namespace {

bool all_colluders_fooled(std::span<const AttackableModel* const> colluders, const Vector& x,
                          std::size_t label) {
  for (const AttackableModel* member : colluders) {
    if (!misclassified(*member, x, label)) return false;
  }
  return true;
}

//! DeepFool-style finishing pass of the ensemble attack: once the ensemble is
//! fooled, walk each not-yet-fooled colluder across its own boundary toward
//! the ensemble's adversarial class with minimal linearized steps. Engages
//! only when some member still resists, so a single-colluder run reduces
//! exactly to the plain attack.
void finish_colluders(std::span<const AttackableModel* const> colluders,
                      const EnsembleSurface& ensemble, const LabeledSample& s,
                      const AttackConfig& cfg, AttackOutcome& outcome) {
  if (!misclassified(ensemble, outcome.x_adv, s.label)) return;
  Vector x = outcome.x_adv;
  std::size_t budget = cfg.effective_steps();
  const double eta = cfg.overshoot;
  while (budget > 0 && !all_colluders_fooled(colluders, x, s.label)) {
    const std::size_t target = predicted_class(ensemble, x);
    if (target == s.label) break;  // lost the ensemble flip along the way
    const AttackableModel* resisting = nullptr;
    for (const AttackableModel* member : colluders) {
      if (!misclassified(*member, x, s.label)) {
        resisting = member;
        break;
      }
    }
    if (resisting == nullptr) break;
    Vector z = resisting->scores(x);
    Vector w = resisting->score_gradient(x, target) - resisting->score_gradient(x, s.label);
    const double wnorm = l2_norm(w);
    if (wnorm < 1e-12) break;
    const double gap = z[s.label] - z[target];
    const double scale = (1.0 + eta) * std::max(gap, 0.0) / (wnorm * wnorm) +
                         1e-3 / wnorm;  // nudge past exact ties
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::min(1.0, std::max(0.0, x[i] + scale * w[i]));
    }
    --budget;
  }
  if (cfg.epsilon > 0.0 && l2_distance(x, s.x) > cfg.epsilon) return;  // over budget: keep original
  outcome.x_adv = std::move(x);
  outcome.l2_dist = l2_distance(outcome.x_adv, s.x);
  outcome.linf_dist = linf_distance(outcome.x_adv, s.x);
  outcome.success = misclassified(ensemble, outcome.x_adv, s.label);
}

}  // namespace

DispatchResult collusion_dispatch(std::span<const AttackableModel* const> colluders,
                                  std::span<const LabeledSample> samples,
                                  const AttackConfig& cfg) {
  if (colluders.empty()) throw DomainError("collusion_dispatch: needs at least one colluder");
  if (samples.empty()) throw DomainError("collusion_dispatch: empty sample set");
  EnsembleSurface ensemble(std::vector<const AttackableModel*>(colluders.begin(), colluders.end()));
  DispatchResult run = attack_dispatch(ensemble, samples, cfg);
  if (colluders.size() > 1) {
    for (std::size_t i = 0; i < run.outcomes.size(); ++i) {
      finish_colluders(colluders, ensemble, run.samples[i], cfg, run.outcomes[i]);
    }
  }
  return run;
}

CollusionReport collusion_attack(std::span<const AttackableModel* const> colluders,
                                 const AttackableModel& victim,
                                 std::span<const LabeledSample> samples, const AttackConfig& cfg) {
  if (colluders.empty()) throw DomainError("collusion_attack: needs at least one colluder");
  if (samples.empty()) throw DomainError("collusion_attack: empty sample set");
  EnsembleSurface ensemble(std::vector<const AttackableModel*>(colluders.begin(), colluders.end()));
  if (victim.input_dim() != ensemble.input_dim() ||
      victim.num_classes() != ensemble.num_classes()) {
    throw DimensionError("collusion_attack: victim dims != colluder dims");
  }

  DispatchResult run = collusion_dispatch(colluders, samples, cfg);

  CollusionReport rep;
  rep.colluders = colluders.size();
  rep.n_outputs = run.outcomes.size();
  if (rep.n_outputs == 0) return rep;  // nothing correctly classified: all rates stay 0

  for (std::size_t i = 0; i < run.outcomes.size(); ++i) {
    const Vector& x_adv = run.outcomes[i].x_adv;
    const std::size_t label = run.samples[i].label;
    bool generation = misclassified(ensemble, x_adv, label);
    for (const AttackableModel* member : colluders) {
      if (!generation) break;
      generation = misclassified(*member, x_adv, label);
    }
    const bool on_victim = misclassified(victim, x_adv, label);
    if (generation) ++rep.n_generation_success;
    if (on_victim) ++rep.n_on_victim;
    if (generation && on_victim) ++rep.n_intersection;
  }
  const double n = static_cast<double>(rep.n_outputs);
  rep.initial_rate = static_cast<double>(rep.n_generation_success) / n;
  rep.rate_all = static_cast<double>(rep.n_on_victim) / n;
  if (rep.n_generation_success > 0) {
    rep.rate_adv = static_cast<double>(rep.n_intersection) /
                   static_cast<double>(rep.n_generation_success);
  }
  return rep;
}

BoundaryGrid boundary_map(const AttackableModel& m, std::array<double, 2> lo,
                          std::array<double, 2> hi, std::size_t resolution) {
  if (m.input_dim() != 2) throw DimensionError("boundary_map: model must be 2D");
  if (resolution == 0) throw DomainError("boundary_map: resolution must be positive");
  if (!(lo[0] < hi[0]) || !(lo[1] < hi[1])) throw DomainError("boundary_map: empty box");

  BoundaryGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.resolution = resolution;
  grid.cells.resize(resolution * resolution);
  const double dx = (hi[0] - lo[0]) / static_cast<double>(resolution);
  const double dy = (hi[1] - lo[1]) / static_cast<double>(resolution);
  Vector point(2);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    point[1] = lo[1] + (static_cast<double>(iy) + 0.5) * dy;
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      point[0] = lo[0] + (static_cast<double>(ix) + 0.5) * dx;
      grid.cells[iy * resolution + ix] = static_cast<std::uint32_t>(predicted_class(m, point));
    }
  }
  return grid;
}

double grid_agreement(const BoundaryGrid& a, const BoundaryGrid& b) {
  if (a.resolution != b.resolution || a.lo != b.lo || a.hi != b.hi) {
    throw DimensionError("grid_agreement: grids cover different boxes");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i] == b.cells[i]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(a.cells.size());
}

}  // namespace afrg
