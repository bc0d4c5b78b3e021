#include "afrg/training.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "afrg/error.hpp"
#include "afrg/rng.hpp"

namespace afrg {

Dataset::Dataset(std::vector<LabeledSample> samples, std::size_t num_classes,
                 std::size_t input_dim, SplitTag tag)
    : samples_(std::move(samples)), num_classes_(num_classes), input_dim_(input_dim), tag_(tag) {
  if (samples_.empty()) throw DomainError("Dataset: empty sample list");
  if (num_classes_ == 0 || input_dim_ == 0) throw DimensionError("Dataset: dims must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const LabeledSample& s = samples_[i];
    if (s.x.size() != input_dim_) {
      throw DimensionError("Dataset: sample " + std::to_string(i) + " has wrong length");
    }
    if (s.label >= num_classes_) {
      throw DomainError("Dataset: sample " + std::to_string(i) + " label out of range");
    }
    for (double v : s.x) {
      if (v < 0.0 || v > 1.0) {
        throw DomainError("Dataset: sample " + std::to_string(i) + " entry outside [0,1]");
      }
    }
  }
}

namespace {

Model init_model(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes) {
  const auto& arch = cfg.architecture;
  if (arch.size() < 2) throw DomainError("train: architecture needs at least two widths");
  if (arch.front() != input_dim) throw DimensionError("train: architecture[0] != input_dim");
  if (arch.back() != num_classes) throw DimensionError("train: architecture back != num_classes");

  std::vector<Layer> layers;
  layers.reserve(arch.size() - 1);
  for (std::size_t k = 0; k + 1 < arch.size(); ++k) {
    SplitMix64 rng = substream(cfg.seed, {0x1717ull, k});
    const std::size_t fan_in = arch[k];
    const std::size_t fan_out = arch[k + 1];
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in, 0.0);
    for (std::size_t r = 0; r < fan_out; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) w(r, c) = std_dev * rng.next_gaussian();
    }
    const bool last = (k + 2 == arch.size());
    layers.push_back({std::move(w), Vector(fan_out, 0.0),
                      last ? Activation::identity : Activation::relu});
  }
  return Model(std::move(layers));
}

}  // namespace

Model train(const Dataset& data, const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw DomainError("train: epochs must be positive");
  if (cfg.batch_size == 0) throw DomainError("train: batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw DomainError("train: learning_rate must be positive");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw DomainError("train: momentum not in [0,1)");

  Model model = init_model(cfg, data.input_dim(), data.num_classes());

  std::vector<LayerGradients> velocity;
  velocity.reserve(model.layers().size());
  for (const Layer& l : model.layers()) {
    velocity.push_back({Matrix(l.weights.rows(), l.weights.cols(), 0.0), Vector(l.bias.size(), 0.0)});
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LabeledSample> batch;
  batch.reserve(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng = substream(cfg.seed, {0x5affull, epoch});
    for (std::size_t i = data.size(); i > 1; --i) {  // Fisher-Yates
      const std::size_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, data.size());
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data.samples()[order[i]]);

      std::vector<LayerGradients> grads = param_gradients(model, batch);
      for (std::size_t k = 0; k < grads.size(); ++k) {
        Layer& layer = model.mutable_layers()[k];
        LayerGradients& v = velocity[k];
        for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
          for (std::size_t c = 0; c < layer.weights.cols(); ++c) {
            v.weights(r, c) = cfg.momentum * v.weights(r, c) - cfg.learning_rate * grads[k].weights(r, c);
            layer.weights(r, c) += v.weights(r, c);
          }
          v.bias[r] = cfg.momentum * v.bias[r] - cfg.learning_rate * grads[k].bias[r];
          layer.bias[r] += v.bias[r];
        }
      }
      for (const LabeledSample& s : batch) {
        epoch_loss += cross_entropy(model.forward(s.x), s.label);
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw DegenerateError("train: loss diverged at epoch " + std::to_string(epoch));
    }
  }
  return model;
}

double evaluate_accuracy(const AttackableModel& m, const Dataset& data) {
  if (data.input_dim() != m.input_dim() || data.num_classes() != m.num_classes()) {
    throw DimensionError("evaluate_accuracy: dataset dims != model dims");
  }
  std::size_t correct = 0;
  for (const LabeledSample& s : data.samples()) {
    if (predicted_class(m, s.x) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace afrg
