#ifndef AFRG_ATTACKS_HPP
#define AFRG_ATTACKS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afrg/surface.hpp"

namespace afrg {

enum class AttackKind : std::uint8_t {
  fgsm,
  fgm,
  pgd_l2,
  pgd_linf,
  deepfool,
  cw,
  boundary,
};

const char* attack_kind_name(AttackKind kind);
std::optional<AttackKind> attack_kind_from_name(const std::string& name);

//! True for attacks that minimize the perturbation instead of spending a fixed
//! budget. For these, epsilon > 0 acts as a success budget: outputs whose final
//! L2 distance exceeds it revert to the original input. epsilon <= 0 leaves
//! them unbudgeted.
bool is_minimization_attack(AttackKind kind);

struct AttackConfig {
  AttackKind kind = AttackKind::fgsm;
  double epsilon = 0.0;
  std::size_t steps = 0;     // 0 -> per-kind default
  double step_size = 0.0;    // 0 -> per-kind default
  double cw_c = 1.0;         // trade-off constant c
  double cw_kappa = 0.0;     // confidence margin
  double overshoot = 0.02;   // deepfool eta
  double gamma_orth = 0.01;  // boundary orthogonal step scale
  double gamma_src = 0.01;   // boundary source step scale
  std::uint64_t rng_seed = 0;  // 0 disables the pgd random start
  bool targeted = false;       // experimental
  std::size_t target_class = 0;

  //! Per-kind default step counts: pgd 40, deepfool 50, cw 200, boundary 2000.
  std::size_t effective_steps() const;
  //! Per-kind default step sizes: pgd 2.5*eps/steps, cw 0.01.
  double effective_step_size() const;
};

struct AttackOutcome {
  Vector x_adv;
  bool success = false;  // un-targeted predicate against the true label
  double l2_dist = 0.0;
  double linf_dist = 0.0;
  std::size_t iterations_used = 0;
};

enum class PgdNorm : std::uint8_t { l2, linf };

AttackOutcome fgsm(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg);
AttackOutcome fgm(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg);
AttackOutcome pgd(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg,
                  PgdNorm norm);
AttackOutcome deepfool(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg);
AttackOutcome cw(const AttackableModel& m, const LabeledSample& s, const AttackConfig& cfg);

//! Accepted iterates of a boundary attack run, for inspection in tests.
struct BoundaryTrace {
  std::vector<Vector> accepted;
};

//! Decision-based attack; touches only the forward surface by construction.
AttackOutcome boundary_attack(const BlackBoxModel& m, const LabeledSample& s,
                              const AttackConfig& cfg, BoundaryTrace* trace = nullptr);

//! Routes to the attack selected by cfg.kind.
AttackOutcome run_attack(const AttackableModel& m, const LabeledSample& s,
                         const AttackConfig& cfg);

//! Outcomes over the subset of samples the model classifies correctly,
//! aligned index-for-index with `samples`.
struct DispatchResult {
  std::vector<AttackOutcome> outcomes;
  std::vector<LabeledSample> samples;  // the filtered subset
  std::size_t n_input = 0;             // samples offered before filtering
};

//! Filters to correctly classified samples, then runs the configured attack on
//! each with an rng substream keyed by the sample's original index.
//! Per-sample failures become failure outcomes instead of aborting the batch.
DispatchResult attack_dispatch(const AttackableModel& m, std::span<const LabeledSample> samples,
                               const AttackConfig& cfg);

}  // namespace afrg

#endif  // AFRG_ATTACKS_HPP
