#ifndef AFRG_PIECED_HPP
#define AFRG_PIECED_HPP

#include <memory>

#include "afrg/attractor.hpp"
#include "afrg/model.hpp"

namespace afrg {

//! Master classifier composed with a decoder; the output is the L1-normalized
//! sum of the master soft-label and the decoder response.
class PiecedModel {
 public:
  PiecedModel(std::shared_ptr<const Model> master, AttractorDecoder decoder);

  const Model& master() const noexcept { return *master_; }
  const std::shared_ptr<const Model>& master_ptr() const noexcept { return master_; }
  const AttractorDecoder& decoder() const noexcept { return decoder_; }
  std::size_t input_dim() const noexcept { return master_->input_dim(); }
  std::size_t num_classes() const noexcept { return master_->num_classes(); }

 private:
  std::shared_ptr<const Model> master_;
  AttractorDecoder decoder_;
};

PiecedModel piece_together(std::shared_ptr<const Model> master, AttractorDecoder decoder);
PiecedModel piece_together(Model master, AttractorDecoder decoder);

//! (M(x) + A(x)) / ||M(x) + A(x)||_1. When the decoder response is identically
//! zero the master soft-label is returned unchanged (it already has L1 norm 1),
//! which keeps the zero-decoder case bit-exact. Throws DegenerateError when the
//! L1 norm of the sum falls below 1e-12.
Vector pieced_forward(const PiecedModel& pm, const Vector& x);

//! Gradient of <upstream, pieced_forward(x)> with respect to x, chaining the
//! master backprop, the decoder gradients, and the quotient rule of the L1
//! normalization. |.| is differentiated as sign(.) with sign(0) = 0.
Vector pieced_vjp(const PiecedModel& pm, const Vector& x, const Vector& upstream);

//! Gradient of cross_entropy(pieced_forward(pm, x), label) with respect to x.
Vector pieced_input_gradient(const PiecedModel& pm, const Vector& x, std::size_t label);

}  // namespace afrg

#endif  // AFRG_PIECED_HPP
