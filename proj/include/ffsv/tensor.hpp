// ffsv/tensor.hpp

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

#ifndef FFSV_TENSOR_HPP_
#define FFSV_TENSOR_HPP_

#include <cstdint>
#include <numeric>
#include <vector>

#include "ffsv/common.hpp"

namespace ffsv {

// Dense row-major tensor of doubles.  Network activations use the layout
// [N, C, F, T]; parameters use whatever rank fits them.
struct Tensor {
  std::vector<int> dims;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    data.assign(static_cast<size_t>(NumElements()), 0.0);
  }

  int64_t NumElements() const {
    int64_t n = 1;
    for (int d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  int Dim(int i) const { return dims[static_cast<size_t>(i)]; }
  int Rank() const { return static_cast<int>(dims.size()); }

  // 4-D accessor, [N, C, F, T].
  double &At4(int n, int c, int f, int t) {
    return data[((static_cast<size_t>(n) * dims[1] + c) * dims[2] + f) * dims[3] + t];
  }
  double At4(int n, int c, int f, int t) const {
    return data[((static_cast<size_t>(n) * dims[1] + c) * dims[2] + f) * dims[3] + t];
  }

  // 2-D accessor, [N, D].
  double &At2(int n, int d) { return data[static_cast<size_t>(n) * dims[1] + d]; }
  double At2(int n, int d) const { return data[static_cast<size_t>(n) * dims[1] + d]; }

  void SetZero() { std::fill(data.begin(), data.end(), 0.0); }

  bool SameShape(const Tensor &o) const { return dims == o.dims; }
};

namespace nn_internal {

// C[m x n] += A[m x k] * B[k x n], all row-major.
inline void MatMulAcc(const double *a, const double *b, double *c,
                      int m, int k, int n) {
  for (int i = 0; i < m; i++) {
    const double *ai = a + static_cast<size_t>(i) * k;
    double *ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; p++) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double *bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; j++) ci[j] += aip * bp[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T.
inline void MatMulAccNT(const double *a, const double *b, double *c,
                        int m, int k, int n) {
  for (int i = 0; i < m; i++) {
    const double *ai = a + static_cast<size_t>(i) * k;
    double *ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; j++) {
      const double *bj = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; p++) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n].
inline void MatMulAccTN(const double *a, const double *b, double *c,
                        int m, int k, int n) {
  for (int i = 0; i < m; i++) {
    const double *ai = a + static_cast<size_t>(i) * k;
    const double *bi = b + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; p++) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double *cp = c + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; j++) cp[j] += aip * bi[j];
    }
  }
}

}  // namespace nn_internal

}  // namespace ffsv

#endif  // FFSV_TENSOR_HPP_
