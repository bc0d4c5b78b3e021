#ifndef AFRG_ATTRACTOR_HPP
#define AFRG_ATTRACTOR_HPP

#include <cstdint>
#include <variant>
#include <vector>

#include "afrg/linalg.hpp"

namespace afrg {

//! Secret per-user seed. Never persisted into reports; decoder spec files only.
struct DecoderSeed {
  std::uint64_t value = 0;
};

//! Per-class decoder response, length num_classes.
using DecoderResponse = Vector;

//! Correlation decoder: response_j = gain * (x . message_j).
//!
//! Messages are one unit-L2 row per class, drawn i.i.d. standard normal from
//! the substream keyed by (seed, class, 0) and then normalized. Regeneration
//! from the same (seed, n, l) is bit-identical.
class SpreadSpectrumDecoder {
 public:
  SpreadSpectrumDecoder(Matrix messages, double gain);

  std::size_t num_classes() const noexcept { return messages_.rows(); }
  std::size_t input_dim() const noexcept { return messages_.cols(); }
  double gain() const noexcept { return gain_; }
  const Matrix& messages() const noexcept { return messages_; }

  bool operator==(const SpreadSpectrumDecoder&) const = default;

 private:
  Matrix messages_;
  double gain_;
};

//! Lattice-distance decoder.
//!
//! Projects the input onto `projections` unit messages per class, scores each
//! projection by its distance to the offset lattice (k - 1/2) * step, and maps
//! the weighted total linearly onto [0,1] with zero distance mapped to 1.
class QimDecoder {
 public:
  QimDecoder(Matrix messages, std::size_t num_classes, double step, std::vector<double> weights);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t input_dim() const noexcept { return messages_.cols(); }
  std::size_t projections() const noexcept { return weights_.size(); }
  double step() const noexcept { return step_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  //! Row (cls * projections + h) of the message matrix.
  std::span<const double> message(std::size_t cls, std::size_t h) const {
    return messages_.row(cls * weights_.size() + h);
  }
  const Matrix& messages() const noexcept { return messages_; }
  //! Largest possible weighted total: (step/2) * sum(weights).
  double max_error() const noexcept { return max_error_; }

  bool operator==(const QimDecoder&) const = default;

 private:
  Matrix messages_;  // (num_classes * projections) rows, input_dim cols
  std::size_t num_classes_;
  double step_;
  std::vector<double> weights_;
  double max_error_;
};

using AttractorDecoder = std::variant<SpreadSpectrumDecoder, QimDecoder>;

constexpr double kDefaultSpreadGain = 5.0;
constexpr std::size_t kDefaultQimProjections = 16;
constexpr double kDefaultQimStep = 0.5;

SpreadSpectrumDecoder gen_spread_spectrum(DecoderSeed seed, std::size_t num_classes,
                                          std::size_t input_dim,
                                          double gain = kDefaultSpreadGain);

//! Uniform weights (1/projections each) when `weights` is empty.
QimDecoder gen_qim(DecoderSeed seed, std::size_t num_classes, std::size_t input_dim,
                   std::size_t projections = kDefaultQimProjections,
                   double step = kDefaultQimStep, std::vector<double> weights = {});

//! |y + step/2 - round(y/step + 1/2) * step|; round ties away from zero.
//! Equals the distance from y to the nearest lattice point (k - 1/2) * step,
//! so the result lies in [0, step/2].
double quant_residual(double y, double step);

DecoderResponse eval_spread_spectrum(const SpreadSpectrumDecoder& dec, const Vector& x);
DecoderResponse eval_qim(const QimDecoder& dec, const Vector& x);
DecoderResponse eval_decoder(const AttractorDecoder& dec, const Vector& x);

//! Gradient of response component `cls` with respect to x.
//! Spread spectrum: gain * message_cls exactly. QIM: round() treated as locally
//! constant; sign(0) = 0.
Vector decoder_input_gradient(const SpreadSpectrumDecoder& dec, const Vector& x, std::size_t cls);
Vector decoder_input_gradient(const QimDecoder& dec, const Vector& x, std::size_t cls);
Vector decoder_input_gradient(const AttractorDecoder& dec, const Vector& x, std::size_t cls);

//! Gradient of <upstream, response(x)> with respect to x in one pass.
Vector decoder_vjp(const AttractorDecoder& dec, const Vector& x, const Vector& upstream);

std::size_t decoder_num_classes(const AttractorDecoder& dec);
std::size_t decoder_input_dim(const AttractorDecoder& dec);

}  // namespace afrg

#endif  // AFRG_ATTRACTOR_HPP
