#ifndef AFRG_LINALG_HPP
#define AFRG_LINALG_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace afrg {

//! Dense vector of 64-bit reals. Nonempty and finite on construction.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0);
  explicit Vector(std::vector<double> values);
  Vector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return v_.size(); }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  std::span<const double> span() const noexcept { return v_; }
  std::span<double> span() noexcept { return v_; }
  const std::vector<double>& values() const noexcept { return v_; }

  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> v_;
};

//! Dense row-major matrix of 64-bit reals. Positive dims, finite entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return v_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {v_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {v_.data() + r * cols_, cols_}; }
  const std::vector<double>& values() const noexcept { return v_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

// Reductions run sequentially in index order: summation order is part of the
// determinism contract.
double dot(std::span<const double> a, std::span<const double> b);
double dot(const Vector& a, const Vector& b);
double l1_norm(const Vector& a);
double l2_norm(const Vector& a);
double linf_norm(const Vector& a);
double l2_distance(const Vector& a, const Vector& b);
double linf_distance(const Vector& a, const Vector& b);

Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& a);
Vector& operator+=(Vector& a, const Vector& b);

//! Index of the largest entry; ties break toward the lowest index.
std::size_t argmax_index(const Vector& a);

void require_same_size(const Vector& a, const Vector& b, const char* what);

}  // namespace afrg

#endif  // AFRG_LINALG_HPP
