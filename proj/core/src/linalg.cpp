#include "afrg/linalg.hpp"

#include <cmath>
#include <string>

#include "afrg/error.hpp"

namespace afrg {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

Vector::Vector(std::size_t n, double fill) : v_(n, fill) {
  if (n == 0) throw DimensionError("Vector: length must be positive");
  if (!std::isfinite(fill)) throw DomainError("Vector: non-finite fill value");
}

Vector::Vector(std::vector<double> values) : v_(std::move(values)) {
  if (v_.empty()) throw DimensionError("Vector: length must be positive");
  require_finite(v_, "Vector");
}

Vector::Vector(std::initializer_list<double> values) : Vector(std::vector<double>(values)) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), v_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw DimensionError("Matrix: dims must be positive");
  if (!std::isfinite(fill)) throw DomainError("Matrix: non-finite fill value");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), v_(std::move(values)) {
  if (rows == 0 || cols == 0) throw DimensionError("Matrix: dims must be positive");
  if (v_.size() != rows * cols) throw DimensionError("Matrix: rows*cols != data length");
  require_finite(v_, "Matrix");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double dot(const Vector& a, const Vector& b) {
  require_same_size(a, b, "dot");
  return dot(a.span(), b.span());
}

double l1_norm(const Vector& a) {
  double acc = 0.0;
  for (double v : a) acc += std::fabs(v);
  return acc;
}

double l2_norm(const Vector& a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

double linf_norm(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

double l2_distance(const Vector& a, const Vector& b) {
  require_same_size(a, b, "l2_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double linf_distance(const Vector& a, const Vector& b) {
  require_same_size(a, b, "linf_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Vector operator+(const Vector& a, const Vector& b) {
  require_same_size(a, b, "operator+");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector operator-(const Vector& a, const Vector& b) {
  require_same_size(a, b, "operator-");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector operator*(double s, const Vector& a) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

Vector& operator+=(Vector& a, const Vector& b) {
  require_same_size(a, b, "operator+=");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

std::size_t argmax_index(const Vector& a) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace afrg
