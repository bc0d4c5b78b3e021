#include "afrg/attractor.hpp"

#include <cmath>
#include <string>

#include "afrg/error.hpp"
#include "afrg/rng.hpp"

namespace afrg {

namespace {

constexpr double kUnitNormTol = 1e-9;

void require_unit_rows(const Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double norm = std::sqrt(dot(m.row(r), m.row(r)));
    if (std::fabs(norm - 1.0) > kUnitNormTol) {
      throw DomainError(std::string(what) + ": message row " + std::to_string(r) +
                        " is not unit L2 norm");
    }
  }
}

//! One unit-L2 message row from the substream keyed by (seed, cls, proj).
void fill_message_row(Matrix& messages, std::size_t row, std::uint64_t seed, std::uint64_t cls,
                      std::uint64_t proj) {
  SplitMix64 rng = substream(seed, {cls, proj});
  auto dst = messages.row(row);
  for (;;) {
    double sq = 0.0;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = rng.next_gaussian();
      sq += dst[i] * dst[i];
    }
    const double norm = std::sqrt(sq);
    if (norm >= 1e-12) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] /= norm;
      return;
    }
  }
}

}  // namespace

SpreadSpectrumDecoder::SpreadSpectrumDecoder(Matrix messages, double gain)
    : messages_(std::move(messages)), gain_(gain) {
  if (!(gain_ >= 0.0)) throw DomainError("SpreadSpectrumDecoder: gain must be nonnegative");
  require_unit_rows(messages_, "SpreadSpectrumDecoder");
}

QimDecoder::QimDecoder(Matrix messages, std::size_t num_classes, double step,
                       std::vector<double> weights)
    : messages_(std::move(messages)),
      num_classes_(num_classes),
      step_(step),
      weights_(std::move(weights)) {
  if (num_classes_ == 0) throw DimensionError("QimDecoder: num_classes must be positive");
  if (weights_.empty()) throw DimensionError("QimDecoder: needs at least one projection");
  if (!(step_ > 0.0)) throw DomainError("QimDecoder: step must be positive");
  if (messages_.rows() != num_classes_ * weights_.size()) {
    throw DimensionError("QimDecoder: message rows != num_classes * projections");
  }
  double weight_sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw DomainError("QimDecoder: weights must be nonnegative");
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw DomainError("QimDecoder: weight sum must be positive");
  require_unit_rows(messages_, "QimDecoder");
  max_error_ = (step_ / 2.0) * weight_sum;
}

SpreadSpectrumDecoder gen_spread_spectrum(DecoderSeed seed, std::size_t num_classes,
                                          std::size_t input_dim, double gain) {
  if (num_classes == 0 || input_dim == 0) {
    throw DimensionError("gen_spread_spectrum: dims must be positive");
  }
  Matrix messages(num_classes, input_dim, 0.0);
  for (std::size_t j = 0; j < num_classes; ++j) fill_message_row(messages, j, seed.value, j, 0);
  return SpreadSpectrumDecoder(std::move(messages), gain);
}

QimDecoder gen_qim(DecoderSeed seed, std::size_t num_classes, std::size_t input_dim,
                   std::size_t projections, double step, std::vector<double> weights) {
  if (num_classes == 0 || input_dim == 0 || projections == 0) {
    throw DimensionError("gen_qim: dims must be positive");
  }
  if (weights.empty()) {
    weights.assign(projections, 1.0 / static_cast<double>(projections));
  }
  if (weights.size() != projections) {
    throw DimensionError("gen_qim: weight count != projections");
  }
  Matrix messages(num_classes * projections, input_dim, 0.0);
  for (std::size_t j = 0; j < num_classes; ++j) {
    for (std::size_t h = 0; h < projections; ++h) {
      fill_message_row(messages, j * projections + h, seed.value, j, h);
    }
  }
  return QimDecoder(std::move(messages), num_classes, step, std::move(weights));
}

double quant_residual(double y, double step) {
  if (!(step > 0.0)) throw DomainError("quant_residual: step must be positive");
  // std::round ties away from zero, matching the fixed convention.
  const double r = std::fabs(y + step / 2.0 - std::round(y / step + 0.5) * step);
  return std::min(r, step / 2.0);  // guards a 1-ulp overshoot
}

DecoderResponse eval_spread_spectrum(const SpreadSpectrumDecoder& dec, const Vector& x) {
  if (x.size() != dec.input_dim()) {
    throw DimensionError("eval_spread_spectrum: input length != decoder dim");
  }
  Vector out(dec.num_classes());
  for (std::size_t j = 0; j < dec.num_classes(); ++j) {
    out[j] = dec.gain() * dot(dec.messages().row(j), x.span());
  }
  return out;
}

DecoderResponse eval_qim(const QimDecoder& dec, const Vector& x) {
  if (x.size() != dec.input_dim()) throw DimensionError("eval_qim: input length != decoder dim");
  Vector out(dec.num_classes());
  for (std::size_t j = 0; j < dec.num_classes(); ++j) {
    double total = 0.0;
    for (std::size_t h = 0; h < dec.projections(); ++h) {
      const double y = dot(dec.message(j, h), x.span());
      total += dec.weights()[h] * quant_residual(y, dec.step());
    }
    const double e = 1.0 - total / dec.max_error();
    out[j] = e < 0.0 ? 0.0 : e;  // rounding in the weighted sum may dip a hair below 0
  }
  return out;
}

DecoderResponse eval_decoder(const AttractorDecoder& dec, const Vector& x) {
  if (const auto* ss = std::get_if<SpreadSpectrumDecoder>(&dec)) return eval_spread_spectrum(*ss, x);
  return eval_qim(std::get<QimDecoder>(dec), x);
}

Vector decoder_input_gradient(const SpreadSpectrumDecoder& dec, const Vector& x, std::size_t cls) {
  if (x.size() != dec.input_dim()) {
    throw DimensionError("decoder_input_gradient: input length != decoder dim");
  }
  if (cls >= dec.num_classes()) throw DomainError("decoder_input_gradient: class out of range");
  Vector grad(dec.input_dim());
  const auto row = dec.messages().row(cls);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = dec.gain() * row[i];
  return grad;
}

namespace {

double residual_sign(double y, double step) {
  const double inner = y + step / 2.0 - std::round(y / step + 0.5) * step;
  if (inner > 0.0) return 1.0;
  if (inner < 0.0) return -1.0;
  return 0.0;
}

}  // namespace

Vector decoder_input_gradient(const QimDecoder& dec, const Vector& x, std::size_t cls) {
  if (x.size() != dec.input_dim()) {
    throw DimensionError("decoder_input_gradient: input length != decoder dim");
  }
  if (cls >= dec.num_classes()) throw DomainError("decoder_input_gradient: class out of range");
  Vector grad(dec.input_dim(), 0.0);
  for (std::size_t h = 0; h < dec.projections(); ++h) {
    const auto row = dec.message(cls, h);
    const double y = dot(row, x.span());
    const double coeff = -(dec.weights()[h] * residual_sign(y, dec.step())) / dec.max_error();
    if (coeff == 0.0) continue;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += coeff * row[i];
  }
  return grad;
}

Vector decoder_input_gradient(const AttractorDecoder& dec, const Vector& x, std::size_t cls) {
  return std::visit([&](const auto& d) { return decoder_input_gradient(d, x, cls); }, dec);
}

Vector decoder_vjp(const AttractorDecoder& dec, const Vector& x, const Vector& upstream) {
  if (upstream.size() != decoder_num_classes(dec)) {
    throw DimensionError("decoder_vjp: upstream length != num_classes");
  }
  Vector grad(x.size(), 0.0);
  if (const auto* ss = std::get_if<SpreadSpectrumDecoder>(&dec)) {
    if (x.size() != ss->input_dim()) throw DimensionError("decoder_vjp: input length mismatch");
    for (std::size_t j = 0; j < ss->num_classes(); ++j) {
      const double coeff = upstream[j] * ss->gain();
      if (coeff == 0.0) continue;
      const auto row = ss->messages().row(j);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += coeff * row[i];
    }
    return grad;
  }
  const auto& qim = std::get<QimDecoder>(dec);
  if (x.size() != qim.input_dim()) throw DimensionError("decoder_vjp: input length mismatch");
  for (std::size_t j = 0; j < qim.num_classes(); ++j) {
    if (upstream[j] == 0.0) continue;
    for (std::size_t h = 0; h < qim.projections(); ++h) {
      const auto row = qim.message(j, h);
      const double y = dot(row, x.span());
      const double coeff =
          -upstream[j] * qim.weights()[h] * residual_sign(y, qim.step()) / qim.max_error();
      if (coeff == 0.0) continue;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += coeff * row[i];
    }
  }
  return grad;
}

std::size_t decoder_num_classes(const AttractorDecoder& dec) {
  return std::visit([](const auto& d) { return d.num_classes(); }, dec);
}

std::size_t decoder_input_dim(const AttractorDecoder& dec) {
  return std::visit([](const auto& d) { return d.input_dim(); }, dec);
}

}  // namespace afrg
