#ifndef AFRG_SURFACE_HPP
#define AFRG_SURFACE_HPP

#include <functional>
#include <vector>

#include "afrg/model.hpp"
#include "afrg/pieced.hpp"

namespace afrg {

//! Evaluation surface the attacks operate on.
//!
//! forward() is the soft-label output used by every success predicate.
//! scores() is the raw surface white-box attacks linearize: pre-softmax logits
//! for a plain model, the composed output for a pieced model, and the member
//! mean for an ensemble.
class AttackableModel {
 public:
  virtual ~AttackableModel() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;

  virtual Vector forward(const Vector& x) const = 0;
  virtual Vector scores(const Vector& x) const = 0;

  //! Gradient of cross_entropy(forward(x), label) with respect to x.
  virtual Vector loss_gradient(const Vector& x, std::size_t label) const = 0;
  //! Gradient of scores(x)[cls] with respect to x.
  virtual Vector score_gradient(const Vector& x, std::size_t cls) const = 0;
  //! Gradient of forward(x)[cls] with respect to x.
  virtual Vector output_gradient(const Vector& x, std::size_t cls) const = 0;
};

std::size_t predicted_class(const AttackableModel& m, const Vector& x);
bool misclassified(const AttackableModel& m, const Vector& x, std::size_t label);

//! Non-owning view over a plain model.
class ModelSurface final : public AttackableModel {
 public:
  explicit ModelSurface(const Model& m) : model_(&m) {}

  std::size_t input_dim() const override { return model_->input_dim(); }
  std::size_t num_classes() const override { return model_->num_classes(); }
  Vector forward(const Vector& x) const override { return model_->forward(x); }
  Vector scores(const Vector& x) const override { return model_->logits(x); }
  Vector loss_gradient(const Vector& x, std::size_t label) const override;
  Vector score_gradient(const Vector& x, std::size_t cls) const override;
  Vector output_gradient(const Vector& x, std::size_t cls) const override;

 private:
  const Model* model_;
};

//! Non-owning view over a pieced model. scores == forward == the composed output.
class PiecedSurface final : public AttackableModel {
 public:
  explicit PiecedSurface(const PiecedModel& pm) : pieced_(&pm) {}

  std::size_t input_dim() const override { return pieced_->input_dim(); }
  std::size_t num_classes() const override { return pieced_->num_classes(); }
  Vector forward(const Vector& x) const override { return pieced_forward(*pieced_, x); }
  Vector scores(const Vector& x) const override { return pieced_forward(*pieced_, x); }
  Vector loss_gradient(const Vector& x, std::size_t label) const override;
  Vector score_gradient(const Vector& x, std::size_t cls) const override;
  Vector output_gradient(const Vector& x, std::size_t cls) const override;

 private:
  const PiecedModel* pieced_;
};

//! Arithmetic mean of the members' surfaces; the colluders' combined model.
class EnsembleSurface final : public AttackableModel {
 public:
  explicit EnsembleSurface(std::vector<const AttackableModel*> members);

  std::size_t input_dim() const override;
  std::size_t num_classes() const override;
  Vector forward(const Vector& x) const override;
  Vector scores(const Vector& x) const override;
  Vector loss_gradient(const Vector& x, std::size_t label) const override;
  Vector score_gradient(const Vector& x, std::size_t cls) const override;
  Vector output_gradient(const Vector& x, std::size_t cls) const override;

  std::size_t size() const noexcept { return members_.size(); }
  const std::vector<const AttackableModel*>& members() const noexcept { return members_; }

 private:
  Vector mean_of(const std::function<Vector(const AttackableModel&)>& eval) const;
  std::vector<const AttackableModel*> members_;
};

//! Forward-only capability handed to decision-based black-box attacks.
struct BlackBoxModel {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::function<Vector(const Vector&)> forward;

  static BlackBoxModel of(const AttackableModel& m);
};

}  // namespace afrg

#endif  // AFRG_SURFACE_HPP
