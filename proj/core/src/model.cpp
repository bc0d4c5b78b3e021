#include "afrg/model.hpp"

#include <cmath>
#include <string>

#include "afrg/error.hpp"

namespace afrg {

namespace {

Vector affine(const Layer& layer, const Vector& x) {
  Vector out(layer.weights.rows());
  for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
    out[r] = dot(layer.weights.row(r), x.span()) + layer.bias[r];
  }
  return out;
}

Vector activate(const Layer& layer, const Vector& pre) {
  if (layer.activation == Activation::identity) return pre;
  Vector out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  return out;
}

}  // namespace

Model::Model(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("Model: needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.bias.size() != l.weights.rows()) {
      throw DimensionError("Model: layer " + std::to_string(k) + " bias length != weight rows");
    }
    if (k > 0 && l.weights.cols() != layers_[k - 1].weights.rows()) {
      throw DimensionError("Model: layer " + std::to_string(k) + " width does not chain");
    }
  }
  input_dim_ = layers_.front().weights.cols();
  num_classes_ = layers_.back().weights.rows();
}

Vector Model::logits(const Vector& x) const {
  if (x.size() != input_dim_) throw DimensionError("Model::logits: input length != input_dim");
  Vector cur = x;
  for (const Layer& l : layers_) cur = activate(l, affine(l, cur));
  return cur;
}

Vector Model::forward(const Vector& x) const { return softmax(logits(x)); }

Vector Model::logits_from_trace(const Trace& t) const {
  return activate(layers_.back(), t.pre.back());
}

Model::Trace Model::trace(const Vector& x) const {
  if (x.size() != input_dim_) throw DimensionError("Model::trace: input length != input_dim");
  Trace t;
  t.inputs.reserve(layers_.size());
  t.pre.reserve(layers_.size());
  Vector cur = x;
  for (const Layer& l : layers_) {
    t.inputs.push_back(cur);
    Vector pre = affine(l, cur);
    cur = activate(l, pre);
    t.pre.push_back(std::move(pre));
  }
  return t;
}

Vector Model::backprop_to_input(const Trace& t, const Vector& logit_grad) const {
  if (logit_grad.size() != num_classes_) {
    throw DimensionError("backprop_to_input: gradient length != num_classes");
  }
  Vector grad = logit_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& l = layers_[k];
    if (l.activation == Activation::relu) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (t.pre[k][i] <= 0.0) grad[i] = 0.0;  // derivative at 0 fixed to 0
      }
    }
    Vector prev(l.weights.cols());
    for (std::size_t c = 0; c < l.weights.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < l.weights.rows(); ++r) acc += l.weights(r, c) * grad[r];
      prev[c] = acc;
    }
    grad = std::move(prev);
  }
  return grad;
}

Vector softmax(const Vector& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
  return out;
}

Vector softmax_vjp(const Vector& probs, const Vector& upstream) {
  require_same_size(probs, upstream, "softmax_vjp");
  double mix = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) mix += upstream[i] * probs[i];
  Vector out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] * (upstream[i] - mix);
  return out;
}

double cross_entropy(const Vector& probs, std::size_t label) {
  if (label >= probs.size()) throw DomainError("cross_entropy: label out of range");
  return -std::log(std::max(probs[label], kProbFloor));
}

Vector input_gradient(const Model& m, const Vector& x, std::size_t label) {
  if (label >= m.num_classes()) throw DomainError("input_gradient: label out of range");
  Model::Trace t = m.trace(x);
  Vector probs = softmax(m.logits_from_trace(t));
  if (probs[label] <= kProbFloor) return Vector(x.size(), 0.0);  // loss flat under the floor
  Vector logit_grad = probs;
  logit_grad[label] -= 1.0;
  return m.backprop_to_input(t, logit_grad);
}

std::vector<LayerGradients> param_gradients(const Model& m, std::span<const LabeledSample> batch) {
  if (batch.empty()) throw DomainError("param_gradients: empty batch");
  std::vector<LayerGradients> grads;
  grads.reserve(m.layers().size());
  for (const Layer& l : m.layers()) {
    grads.push_back({Matrix(l.weights.rows(), l.weights.cols(), 0.0), Vector(l.bias.size(), 0.0)});
  }

  for (const LabeledSample& s : batch) {
    if (s.label >= m.num_classes()) throw DomainError("param_gradients: label out of range");
    Model::Trace t = m.trace(s.x);
    Vector probs = softmax(m.logits_from_trace(t));
    Vector grad(probs.size());
    if (probs[s.label] > kProbFloor) {
      for (std::size_t i = 0; i < probs.size(); ++i) grad[i] = probs[i];
      grad[s.label] -= 1.0;
    }
    for (std::size_t k = m.layers().size(); k-- > 0;) {
      const Layer& l = m.layers()[k];
      if (l.activation == Activation::relu) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
          if (t.pre[k][i] <= 0.0) grad[i] = 0.0;
        }
      }
      for (std::size_t r = 0; r < l.weights.rows(); ++r) {
        grads[k].bias[r] += grad[r];
        for (std::size_t c = 0; c < l.weights.cols(); ++c) {
          grads[k].weights(r, c) += grad[r] * t.inputs[k][c];
        }
      }
      if (k > 0) {
        Vector prev(l.weights.cols());
        for (std::size_t c = 0; c < l.weights.cols(); ++c) {
          double acc = 0.0;
          for (std::size_t r = 0; r < l.weights.rows(); ++r) acc += l.weights(r, c) * grad[r];
          prev[c] = acc;
        }
        grad = std::move(prev);
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  for (LayerGradients& g : grads) {
    for (std::size_t r = 0; r < g.weights.rows(); ++r) {
      g.bias[r] *= scale;
      for (std::size_t c = 0; c < g.weights.cols(); ++c) g.weights(r, c) *= scale;
    }
  }
  return grads;
}

Vector finite_difference_input_gradient(const std::function<double(const Vector&)>& f,
                                        const Vector& x, double h) {
  if (!(h > 0.0)) throw DomainError("finite_difference_input_gradient: h must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    probe[i] = xi + h;
    const double up = f(probe);
    probe[i] = xi - h;
    const double down = f(probe);
    probe[i] = xi;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace afrg
