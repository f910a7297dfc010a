#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trf {

/// Dense column-major matrix of doubles. Tree growing scans one predictor
/// across many rows, so columns are contiguous.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Builds from row-major nested vectors; every row must have the same length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[c * rows_ + r]; }

  std::span<const double> col(std::size_t c) const noexcept {
    return {data_.data() + c * rows_, rows_};
  }
  std::span<double> col(std::size_t c) noexcept { return {data_.data() + c * rows_, rows_}; }

  std::vector<double> row(std::size_t r) const;

  Matrix select_rows(std::span<const std::size_t> rows) const;
  Matrix select_cols(std::span<const std::size_t> cols) const;

  /// Appends a column; the matrix must be empty or have `values.size()` rows.
  void append_col(std::span<const double> values);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace trf
