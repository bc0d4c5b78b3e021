#include "afrg/pieced.hpp"

#include <cmath>

#include "afrg/error.hpp"

namespace afrg {

namespace {

constexpr double kNormFloor = 1e-12;

double sign_of(double v) {
  if (v > 0.0) return 1.0;
  if (v < 0.0) return -1.0;
  return 0.0;
}

bool all_zero(const Vector& v) {
  for (double e : v) {
    if (e != 0.0) return false;
  }
  return true;
}

}  // namespace

PiecedModel::PiecedModel(std::shared_ptr<const Model> master, AttractorDecoder decoder)
    : master_(std::move(master)), decoder_(std::move(decoder)) {
  if (!master_) throw DomainError("PiecedModel: null master");
  if (decoder_num_classes(decoder_) != master_->num_classes()) {
    throw DimensionError("PiecedModel: decoder classes != master classes");
  }
  if (decoder_input_dim(decoder_) != master_->input_dim()) {
    throw DimensionError("PiecedModel: decoder input dim != master input dim");
  }
}

PiecedModel piece_together(std::shared_ptr<const Model> master, AttractorDecoder decoder) {
  return PiecedModel(std::move(master), std::move(decoder));
}

PiecedModel piece_together(Model master, AttractorDecoder decoder) {
  return PiecedModel(std::make_shared<const Model>(std::move(master)), std::move(decoder));
}

Vector pieced_forward(const PiecedModel& pm, const Vector& x) {
  Vector probs = pm.master().forward(x);
  Vector response = eval_decoder(pm.decoder(), x);
  if (all_zero(response)) return probs;
  Vector sum = probs + response;
  const double norm = l1_norm(sum);
  if (norm < kNormFloor) throw DegenerateError("pieced_forward: L1 norm of sum below 1e-12");
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] /= norm;
  return sum;
}

Vector pieced_vjp(const PiecedModel& pm, const Vector& x, const Vector& upstream) {
  if (upstream.size() != pm.num_classes()) {
    throw DimensionError("pieced_vjp: upstream length != num_classes");
  }
  Model::Trace t = pm.master().trace(x);
  Vector probs = softmax(pm.master().logits_from_trace(t));
  Vector response = eval_decoder(pm.decoder(), x);
  Vector sum = probs + response;
  const double norm = l1_norm(sum);
  if (norm < kNormFloor) throw DegenerateError("pieced_vjp: L1 norm of sum below 1e-12");

  // p = u / ||u||_1:  d<v,p>/du_i = v_i/N - (<v,u>/N^2) * sign(u_i)
  double vu = 0.0;
  for (std::size_t i = 0; i < sum.size(); ++i) vu += upstream[i] * sum[i];
  Vector on_sum(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    on_sum[i] = upstream[i] / norm - (vu / (norm * norm)) * sign_of(sum[i]);
  }

  Vector master_part = pm.master().backprop_to_input(t, softmax_vjp(probs, on_sum));
  Vector decoder_part = decoder_vjp(pm.decoder(), x, on_sum);
  return master_part + decoder_part;
}

Vector pieced_input_gradient(const PiecedModel& pm, const Vector& x, std::size_t label) {
  if (label >= pm.num_classes()) throw DomainError("pieced_input_gradient: label out of range");
  Vector out = pieced_forward(pm, x);
  if (out[label] <= kProbFloor) return Vector(x.size(), 0.0);  // loss flat under the floor
  Vector upstream(pm.num_classes(), 0.0);
  upstream[label] = -1.0 / out[label];
  return pieced_vjp(pm, x, upstream);
}

}  // namespace afrg
