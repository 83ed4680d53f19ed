#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "jcr/errors.hpp"

namespace jcr {

using cplx = std::complex<double>;

/**
 * Dense row-major complex matrix used for channel grids, masks, and point
 * spread functions. Row index = Doppler bin, column index = angle bin in the
 * channel-domain uses throughout the library.
 */
class ComplexGrid {
 public:
  ComplexGrid() = default;

  ComplexGrid(std::size_t rows, std::size_t cols, cplx fill = cplx(0.0, 0.0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw invalid_input("ComplexGrid: dimensions must be >= 1");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  cplx& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }

  double frobenius_norm_sq() const {
    double s = 0.0;
    for (const cplx& v : data_) s += std::norm(v);
    return s;
  }

  double frobenius_norm() const { return std::sqrt(frobenius_norm_sq()); }

  bool same_shape(const ComplexGrid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

}  // namespace jcr
