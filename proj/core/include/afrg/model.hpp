#ifndef AFRG_MODEL_HPP
#define AFRG_MODEL_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "afrg/linalg.hpp"

namespace afrg {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

//! One dense layer: y = act(W x + b). weights.cols is the input width.
struct Layer {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::identity;
};

//! Input sample with its ground-truth class. Entries live in [0,1].
struct LabeledSample {
  Vector x;
  std::size_t label = 0;
};

//! Feedforward classifier: dense layers, ReLU hidden activations, softmax head.
//!
//! Evaluation is pure and single-threaded; identical inputs produce
//! bit-identical outputs.
class Model {
 public:
  explicit Model(std::vector<Layer> layers);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& mutable_layers() noexcept { return layers_; }

  //! Pre-softmax scores.
  Vector logits(const Vector& x) const;

  //! Soft-label output: softmax(logits). Entries >= 0, sum == 1 within 1e-12.
  Vector forward(const Vector& x) const;

  //! Per-layer inputs and pre-activations kept for backprop.
  struct Trace {
    std::vector<Vector> inputs;  // inputs[k] feeds layer k
    std::vector<Vector> pre;     // pre[k] = W_k inputs[k] + b_k
  };
  Trace trace(const Vector& x) const;

  //! Logits recovered from an existing trace (applies the final activation).
  Vector logits_from_trace(const Trace& t) const;

  //! Pulls a gradient on the logits back to the input. ReLU derivative at 0 is 0.
  Vector backprop_to_input(const Trace& t, const Vector& logit_grad) const;

 private:
  std::vector<Layer> layers_;
  std::size_t input_dim_ = 0;
  std::size_t num_classes_ = 0;
};

//! Numerically stable softmax (max subtraction).
Vector softmax(const Vector& logits);

//! Maps an upstream gradient on softmax outputs to a gradient on the logits:
//! w_k = p_k * (v_k - sum_j v_j p_j).
Vector softmax_vjp(const Vector& probs, const Vector& upstream);

//! -log(probs[label]) with probs[label] floored at 1e-12 before the log.
double cross_entropy(const Vector& probs, std::size_t label);

//! Exact gradient of cross_entropy(forward(m, x), label) with respect to x.
Vector input_gradient(const Model& m, const Vector& x, std::size_t label);

struct LayerGradients {
  Matrix weights;
  Vector bias;
};

//! Mean cross-entropy gradient over the batch for every weight and bias.
std::vector<LayerGradients> param_gradients(const Model& m, std::span<const LabeledSample> batch);

//! Central-difference gradient oracle: (f(x+h e_i) - f(x-h e_i)) / (2h).
Vector finite_difference_input_gradient(const std::function<double(const Vector&)>& f,
                                        const Vector& x, double h);

constexpr double kProbFloor = 1e-12;

}  // namespace afrg

#endif  // AFRG_MODEL_HPP
