#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dcor/rng.hpp"

namespace dcor {

// Dense row-major matrix of 64-bit floats.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  static Matrix zeros(int r, int c) { return Matrix(r, c); }

  static Matrix constant(int r, int c, double x) {
    Matrix m(r, c);
    m.v.assign(m.v.size(), x);
    return m;
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> data) {
    Matrix m(static_cast<int>(data.size()),
             data.size() ? static_cast<int>(data.begin()->size()) : 0);
    int i = 0;
    for (const auto& row : data) {
      int j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  static Matrix uniform(int r, int c, double lo, double hi, Rng& rng) {
    Matrix m(r, c);
    for (double& x : m.v) x = rng.uniform(lo, hi);
    return m;
  }

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  std::span<double> row(int r) { return {v.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const { return {v.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }
};

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline Matrix transposed(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  }
  return t;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    worst = std::max(worst, std::fabs(a.v[i] - b.v[i]));
  }
  return worst;
}

}  // namespace dcor
