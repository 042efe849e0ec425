#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "wurl/common.hpp"

namespace wurl {

// Dense row-major matrix. Just enough linear algebra for small MLPs.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, 0.0) {}

  double* row(int r) { return a.data() + std::size_t(r) * cols; }
  const double* row(int r) const { return a.data() + std::size_t(r) * cols; }
  double& operator()(int r, int c) { return a[std::size_t(r) * cols + c]; }
  double operator()(int r, int c) const { return a[std::size_t(r) * cols + c]; }

  void resize(int r, int c) {
    rows = r;
    cols = c;
    a.assign(std::size_t(r) * c, 0.0);
  }
  void zero() { std::memset(a.data(), 0, a.size() * sizeof(double)); }
};

// Mutable view into a flat parameter buffer, row-major.
struct MatView {
  double* p = nullptr;
  int rows = 0, cols = 0;
  double* row(int r) const { return p + std::size_t(r) * cols; }
};

// Y = X W^T + b.  X: B x in, W: out x in, b: out, Y: B x out.
inline void affine_forward(const Matrix& X, MatView W, const double* b, Matrix& Y) {
  Y.resize(X.rows, W.rows);
  for (int i = 0; i < X.rows; ++i) {
    const double* x = X.row(i);
    double* y = Y.row(i);
    for (int o = 0; o < W.rows; ++o) {
      const double* w = W.row(o);
      double s = b[o];
      for (int k = 0; k < W.cols; ++k) s += w[k] * x[k];
      y[o] = s;
    }
  }
}

// Backward of affine_forward. Accumulates into dW / db; writes dX if given.
inline void affine_backward(const Matrix& X, MatView W, const Matrix& dY,
                            MatView dW, double* db, Matrix* dX) {
  for (int i = 0; i < dY.rows; ++i) {
    const double* dy = dY.row(i);
    const double* x = X.row(i);
    for (int o = 0; o < W.rows; ++o) {
      double g = dy[o];
      if (g == 0.0) continue;
      double* dw = dW.row(o);
      for (int k = 0; k < W.cols; ++k) dw[k] += g * x[k];
      db[o] += g;
    }
  }
  if (dX) {
    dX->resize(X.rows, X.cols);
    for (int i = 0; i < dY.rows; ++i) {
      const double* dy = dY.row(i);
      double* dx = dX->row(i);
      for (int o = 0; o < W.rows; ++o) {
        double g = dy[o];
        if (g == 0.0) continue;
        const double* w = W.row(o);
        for (int k = 0; k < W.cols; ++k) dx[k] += g * w[k];
      }
    }
  }
}

}  // namespace wurl
