#ifndef AFRG_EVALUATION_HPP
#define AFRG_EVALUATION_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "afrg/attacks.hpp"
#include "afrg/training.hpp"

namespace afrg {

//! Replication of attack outputs from a source copy onto a target copy.
//! A = all outputs, B = outputs misclassified by the source, C = outputs
//! misclassified by the target; rate_all = |C|/|A|, rate_adv = |B&C|/|B|.
struct ReplicationReport {
  std::size_t n_outputs = 0;
  std::size_t n_adversarial_on_source = 0;
  std::size_t n_misclassified_on_target = 0;
  std::size_t n_intersection = 0;
  double initial_rate = 0.0;  // |B| / |A|
  double rate_all = 0.0;
  std::optional<double> rate_adv;  // absent when |B| == 0
  double avg_l2 = 0.0;
  double avg_linf = 0.0;
};

ReplicationReport replicate(std::span<const AttackOutcome> outcomes, const AttackableModel& source,
                            const AttackableModel& target, std::span<const LabeledSample> samples);

constexpr std::size_t kCosineBins = 101;

//! Per-sample cosine similarity of loss gradients between two models.
//! Samples where either gradient norm falls below 1e-12 are excluded and
//! counted in n_degenerate.
struct GradientSimilarityReport {
  std::vector<double> cosines;
  double mean = 0.0;
  double median = 0.0;
  std::array<std::size_t, kCosineBins> histogram{};  // uniform bins over [-1, 1]
  std::size_t n_degenerate = 0;
};

GradientSimilarityReport gradient_cosine(const AttackableModel& a, const AttackableModel& b,
                                         const Dataset& data);

//! Ensemble attack by r colluding copies, measured against a held-out victim.
//! Generation-side success requires the ensemble and every colluder fooled.
struct CollusionReport {
  std::size_t colluders = 0;
  std::size_t n_outputs = 0;
  std::size_t n_generation_success = 0;
  std::size_t n_on_victim = 0;
  std::size_t n_intersection = 0;
  double initial_rate = 0.0;
  double rate_all = 0.0;
  std::optional<double> rate_adv;
};

//! Runs the configured attack against the colluders' ensemble. With more than
//! one colluder and an ensemble-fooling output, DeepFool-style finishing steps
//! then drive every resisting member across its own boundary toward the
//! ensemble's adversarial class (the custom part of the ensemble attack).
DispatchResult collusion_dispatch(std::span<const AttackableModel* const> colluders,
                                  std::span<const LabeledSample> samples, const AttackConfig& cfg);

CollusionReport collusion_attack(std::span<const AttackableModel* const> colluders,
                                 const AttackableModel& victim,
                                 std::span<const LabeledSample> samples, const AttackConfig& cfg);

//! Predicted classes over a regular 2D grid of cell centers.
struct BoundaryGrid {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::size_t resolution = 0;
  std::vector<std::uint32_t> cells;  // row-major, cells[iy * resolution + ix]

  std::uint32_t at(std::size_t iy, std::size_t ix) const { return cells[iy * resolution + ix]; }
};

BoundaryGrid boundary_map(const AttackableModel& m, std::array<double, 2> lo,
                          std::array<double, 2> hi, std::size_t resolution);

//! Fraction of cells where two grids over the same box pick the same class.
double grid_agreement(const BoundaryGrid& a, const BoundaryGrid& b);

}  // namespace afrg

#endif  // AFRG_EVALUATION_HPP
