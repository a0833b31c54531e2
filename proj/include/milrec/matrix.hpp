#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace milrec {

// Dense row-major f64 matrix. Kept deliberately minimal: the training and
// evaluation kernels index it directly.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  std::size_t size() const { return data.size(); }

  void fill(double v) { data.assign(data.size(), v); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

using Vector = std::vector<double>;

// Sparse vector as parallel index/value arrays; indices strictly increasing
// unless noted otherwise by the producer.
struct SparseVec {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;

  std::size_t size() const { return idx.size(); }
  bool empty() const { return idx.empty(); }
};

}  // namespace milrec
