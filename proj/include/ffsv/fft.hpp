// ffsv/fft.hpp

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

#ifndef FFSV_FFT_HPP_
#define FFSV_FFT_HPP_

#include <complex>
#include <vector>

#include "ffsv/common.hpp"

namespace ffsv {

inline bool IsPowerOfTwo(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t NextPowerOfTwo(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT.  inverse=true applies the conjugate
// transform and the 1/n scale.
inline void Fft(std::vector<std::complex<double>> *x, bool inverse = false) {
  const size_t n = x->size();
  FFSV_CHECK(IsPowerOfTwo(n), "FFT size " << n << " is not a power of two");
  auto &a = *x;
  for (size_t i = 1, j = 0; i < n; i++) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; k++) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto &c : a) c /= static_cast<double>(n);
  }
}

// Spectrum of a real signal zero-padded to n_fft; returns all n_fft bins.
inline std::vector<std::complex<double>> RealFft(const std::vector<double> &x,
                                                 size_t n_fft) {
  FFSV_CHECK(x.size() <= n_fft, "signal longer than FFT size");
  std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
  for (size_t i = 0; i < x.size(); i++) buf[i] = {x[i], 0.0};
  Fft(&buf);
  return buf;
}

// Full linear convolution of length a+b-1 via FFT.  Matches direct
// evaluation to around 1e-12 for the signal sizes used here.
inline std::vector<double> FftConvolve(const std::vector<double> &a,
                                       const std::vector<double> &b) {
  FFSV_CHECK(!a.empty() && !b.empty(), "convolution of an empty sequence");
  const size_t out_len = a.size() + b.size() - 1;
  const size_t n = NextPowerOfTwo(out_len);
  std::vector<std::complex<double>> fa(n, {0.0, 0.0}), fb(n, {0.0, 0.0});
  for (size_t i = 0; i < a.size(); i++) fa[i] = {a[i], 0.0};
  for (size_t i = 0; i < b.size(); i++) fb[i] = {b[i], 0.0};
  Fft(&fa);
  Fft(&fb);
  for (size_t i = 0; i < n; i++) fa[i] *= fb[i];
  Fft(&fa, /*inverse=*/true);
  std::vector<double> out(out_len);
  for (size_t i = 0; i < out_len; i++) out[i] = fa[i].real();
  return out;
}

// Direct O(NM) convolution; the reference the FFT path is tested against.
inline std::vector<double> DirectConvolve(const std::vector<double> &a,
                                          const std::vector<double> &b) {
  FFSV_CHECK(!a.empty() && !b.empty(), "convolution of an empty sequence");
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); i++)
    for (size_t j = 0; j < b.size(); j++) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace ffsv

#endif  // FFSV_FFT_HPP_
