#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tdfb {

/// Dense row-major matrix of doubles. Always at least 1x1.
class Matrix {
 public:
  Matrix() : Matrix(1, 1) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix row_vector(std::span<const double> values);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  void fill(double v);
  bool all_finite() const;
  double l2_norm() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Throws ContractViolation unless a and b have the same shape.
void require_same_shape(const Matrix& a, const Matrix& b, const char* context);

/// A learnable (or frozen) tensor with its gradient accumulator.
///
/// Backward passes add into `grad` only when `trainable` is set, so a frozen
/// parameter keeps an all-zero gradient for its whole lifetime.
struct Param {
  Param() = default;
  explicit Param(Matrix v, bool is_trainable = true)
      : value(std::move(v)), grad(value.rows(), value.cols()), trainable(is_trainable) {}

  Matrix value;
  Matrix grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace tdfb
