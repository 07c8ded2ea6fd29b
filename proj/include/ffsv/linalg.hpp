// ffsv/linalg.hpp

// Copyright 2026  FFSV Toolkit Contributors

// See COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef FFSV_LINALG_HPP_
#define FFSV_LINALG_HPP_

#include <cmath>
#include <vector>

#include "ffsv/common.hpp"

namespace ffsv {

// Dense row-major double matrix, sized for embedding dimensions (<= a few
// hundred); not a general-purpose BLAS.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double &operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  static Matrix Identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; i++) m(i, i) = 1.0;
    return m;
  }
};

using Vector = std::vector<double>;

inline Matrix MatMul(const Matrix &a, const Matrix &b) {
  FFSV_CHECK(a.cols == b.rows, "matmul shape mismatch");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; i++)
    for (int k = 0; k < a.cols; k++) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; j++) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Matrix Transpose(const Matrix &a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; i++)
    for (int j = 0; j < a.cols; j++) t(j, i) = a(i, j);
  return t;
}

inline Vector MatVec(const Matrix &a, const Vector &x) {
  FFSV_CHECK(a.cols == static_cast<int>(x.size()), "matvec shape mismatch");
  Vector y(a.rows, 0.0);
  for (int i = 0; i < a.rows; i++) {
    double acc = 0.0;
    for (int j = 0; j < a.cols; j++) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

inline double Dot(const Vector &a, const Vector &b) {
  FFSV_CHECK(a.size() == b.size(), "dot shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); i++) acc += a[i] * b[i];
  return acc;
}

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
inline Matrix CholeskyFactor(const Matrix &a) {
  FFSV_CHECK(a.rows == a.cols, "Cholesky needs a square matrix");
  const int n = a.rows;
  Matrix l(n, n);
  for (int i = 0; i < n; i++) {
    for (int j = 0; j <= i; j++) {
      double sum = a(i, j);
      for (int k = 0; k < j; k++) sum -= l(i, k) * l(j, k);
      if (i == j) {
        FFSV_CHECK(sum > 0.0, "matrix is not positive definite (pivot " << i
                   << " = " << sum << ")");
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return l;
}

inline double LogDetFromCholesky(const Matrix &l) {
  double acc = 0.0;
  for (int i = 0; i < l.rows; i++) acc += std::log(l(i, i));
  return 2.0 * acc;
}

// Solves A x = b given the Cholesky factor L of A.
inline Vector CholeskySolve(const Matrix &l, const Vector &b) {
  const int n = l.rows;
  Vector y(b);
  for (int i = 0; i < n; i++) {
    for (int k = 0; k < i; k++) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (int i = n - 1; i >= 0; i--) {
    for (int k = i + 1; k < n; k++) y[i] -= l(k, i) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

inline Matrix SpdInverse(const Matrix &a) {
  const Matrix l = CholeskyFactor(a);
  const int n = a.rows;
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (int j = 0; j < n; j++) {
    e[j] = 1.0;
    Vector col = CholeskySolve(l, e);
    for (int i = 0; i < n; i++) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix: a = V diag(w) V^T
// with V's columns the eigenvectors, eigenvalues ascending.
inline void SymmetricEig(const Matrix &a, Vector *eigenvalues, Matrix *eigenvectors) {
  FFSV_CHECK(a.rows == a.cols, "eig needs a square matrix");
  const int n = a.rows;
  Matrix m = a;
  Matrix v = Matrix::Identity(n);

  for (int sweep = 0; sweep < 100; sweep++) {
    double off = 0.0;
    for (int p = 0; p < n; p++)
      for (int q = p + 1; q < n; q++) off += m(p, q) * m(p, q);
    if (off < 1e-26) break;

    for (int p = 0; p < n; p++) {
      for (int q = p + 1; q < n; q++) {
        if (std::abs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; k++) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; k++) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; k++) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; i++) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return m(x, x) < m(y, y); });
  eigenvalues->resize(n);
  *eigenvectors = Matrix(n, n);
  for (int j = 0; j < n; j++) {
    (*eigenvalues)[j] = m(order[j], order[j]);
    for (int i = 0; i < n; i++) (*eigenvectors)(i, j) = v(i, order[j]);
  }
}

// Solves the lower-triangular system L x = b (forward substitution).
inline Vector ForwardSolve(const Matrix &l, const Vector &b) {
  const int n = l.rows;
  Vector y(b);
  for (int i = 0; i < n; i++) {
    for (int k = 0; k < i; k++) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

// Inverse of a lower-triangular matrix.
inline Matrix LowerTriangularInverse(const Matrix &l) {
  const int n = l.rows;
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (int j = 0; j < n; j++) {
    e[j] = 1.0;
    Vector col = ForwardSolve(l, e);
    for (int i = 0; i < n; i++) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

}  // namespace ffsv

#endif  // FFSV_LINALG_HPP_
