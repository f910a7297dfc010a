#include "trf/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace trf {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    for (std::size_t c = 0; c < m.cols_; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<double> Matrix::row(std::size_t r) const {
  std::vector<double> out(cols_);
  for (std::size_t c = 0; c < cols_; ++c) out[c] = (*this)(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t c = 0; c < cols_; ++c) {
    auto src = col(c);
    auto dst = out.col(c);
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
  }
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> cols) const {
  Matrix out(rows_, cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= cols_) throw std::out_of_range("Matrix::select_cols: column index");
    std::ranges::copy(col(cols[i]), out.col(i).begin());
  }
  return out;
}

void Matrix::append_col(std::span<const double> values) {
  if (cols_ == 0 && rows_ == 0) {
    rows_ = values.size();
  } else if (values.size() != rows_) {
    throw std::invalid_argument("Matrix::append_col: length mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++cols_;
}

}  // namespace trf
