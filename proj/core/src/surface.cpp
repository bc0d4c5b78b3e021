#include "afrg/surface.hpp"

#include "afrg/error.hpp"

namespace afrg {

std::size_t predicted_class(const AttackableModel& m, const Vector& x) {
  return argmax_index(m.forward(x));
}

bool misclassified(const AttackableModel& m, const Vector& x, std::size_t label) {
  return predicted_class(m, x) != label;
}

Vector ModelSurface::loss_gradient(const Vector& x, std::size_t label) const {
  return input_gradient(*model_, x, label);
}

Vector ModelSurface::score_gradient(const Vector& x, std::size_t cls) const {
  if (cls >= num_classes()) throw DomainError("score_gradient: class out of range");
  Model::Trace t = model_->trace(x);
  Vector upstream(num_classes(), 0.0);
  upstream[cls] = 1.0;
  return model_->backprop_to_input(t, upstream);
}

Vector ModelSurface::output_gradient(const Vector& x, std::size_t cls) const {
  if (cls >= num_classes()) throw DomainError("output_gradient: class out of range");
  Model::Trace t = model_->trace(x);
  Vector probs = softmax(model_->logits_from_trace(t));
  Vector upstream(num_classes(), 0.0);
  upstream[cls] = 1.0;
  return model_->backprop_to_input(t, softmax_vjp(probs, upstream));
}

Vector PiecedSurface::loss_gradient(const Vector& x, std::size_t label) const {
  return pieced_input_gradient(*pieced_, x, label);
}

Vector PiecedSurface::score_gradient(const Vector& x, std::size_t cls) const {
  return output_gradient(x, cls);
}

Vector PiecedSurface::output_gradient(const Vector& x, std::size_t cls) const {
  if (cls >= num_classes()) throw DomainError("output_gradient: class out of range");
  Vector upstream(num_classes(), 0.0);
  upstream[cls] = 1.0;
  return pieced_vjp(*pieced_, x, upstream);
}

EnsembleSurface::EnsembleSurface(std::vector<const AttackableModel*> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw DomainError("EnsembleSurface: needs at least one member");
  for (const AttackableModel* m : members_) {
    if (m == nullptr) throw DomainError("EnsembleSurface: null member");
    if (m->input_dim() != members_.front()->input_dim() ||
        m->num_classes() != members_.front()->num_classes()) {
      throw DimensionError("EnsembleSurface: member dims disagree");
    }
  }
}

std::size_t EnsembleSurface::input_dim() const { return members_.front()->input_dim(); }
std::size_t EnsembleSurface::num_classes() const { return members_.front()->num_classes(); }

Vector EnsembleSurface::mean_of(const std::function<Vector(const AttackableModel&)>& eval) const {
  Vector acc = eval(*members_.front());
  for (std::size_t i = 1; i < members_.size(); ++i) acc += eval(*members_[i]);
  const double count = static_cast<double>(members_.size());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= count;
  return acc;
}

Vector EnsembleSurface::forward(const Vector& x) const {
  return mean_of([&](const AttackableModel& m) { return m.forward(x); });
}

Vector EnsembleSurface::scores(const Vector& x) const {
  return mean_of([&](const AttackableModel& m) { return m.scores(x); });
}

Vector EnsembleSurface::loss_gradient(const Vector& x, std::size_t label) const {
  if (label >= num_classes()) throw DomainError("loss_gradient: label out of range");
  Vector probs = forward(x);
  if (probs[label] <= kProbFloor) return Vector(x.size(), 0.0);
  Vector grad = output_gradient(x, label);
  const double scale = -1.0 / probs[label];
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= scale;
  return grad;
}

Vector EnsembleSurface::score_gradient(const Vector& x, std::size_t cls) const {
  return mean_of([&](const AttackableModel& m) { return m.score_gradient(x, cls); });
}

Vector EnsembleSurface::output_gradient(const Vector& x, std::size_t cls) const {
  return mean_of([&](const AttackableModel& m) { return m.output_gradient(x, cls); });
}

BlackBoxModel BlackBoxModel::of(const AttackableModel& m) {
  return BlackBoxModel{m.input_dim(), m.num_classes(),
                       [&m](const Vector& x) { return m.forward(x); }};
}

}  // namespace afrg
