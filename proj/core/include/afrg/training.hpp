#ifndef AFRG_TRAINING_HPP
#define AFRG_TRAINING_HPP

#include <cstdint>
#include <vector>

#include "afrg/model.hpp"
#include "afrg/surface.hpp"

namespace afrg {

enum class SplitTag : std::uint8_t { train = 0, test = 1 };

//! Labeled sample collection with fixed (num_classes, input_dim).
class Dataset {
 public:
  Dataset(std::vector<LabeledSample> samples, std::size_t num_classes, std::size_t input_dim,
          SplitTag tag);

  const std::vector<LabeledSample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  SplitTag tag() const noexcept { return tag_; }

 private:
  std::vector<LabeledSample> samples_;
  std::size_t num_classes_;
  std::size_t input_dim_;
  SplitTag tag_;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  //! Full width chain, input_dim first and num_classes last, e.g. {64, 32, 3}.
  std::vector<std::size_t> architecture;
};

//! SGD with momentum. The seed drives the fan-in-scaled normal initialization
//! and the per-epoch Fisher-Yates shuffle (substream keyed by (seed, epoch)).
//! Deterministic: the same (data, cfg) yields a bit-identical model.
//! Throws DegenerateError if the training loss stops being finite.
Model train(const Dataset& data, const TrainConfig& cfg);

//! Fraction of samples whose predicted class (ties to the lowest index)
//! matches the label.
double evaluate_accuracy(const AttackableModel& m, const Dataset& data);

}  // namespace afrg

#endif  // AFRG_TRAINING_HPP
