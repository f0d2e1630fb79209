#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vill {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a (n x k) * b (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T (k x n)^T * b (k x m) -> n x m
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a (n x k) * b^T (m x k)^T -> n x m
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Rows selected by index, in the given order (duplicates allowed).
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

// Column means (length cols).
std::vector<double> column_mean(const Matrix& m);

}  // namespace vill
