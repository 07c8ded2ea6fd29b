// ffsv/common.hpp

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

#ifndef FFSV_COMMON_HPP_
#define FFSV_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffsv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FFSV_ERR(msg)                      \
  do {                                     \
    std::ostringstream os__;               \
    os__ << msg;                           \
    throw ::ffsv::Error(os__.str());       \
  } while (0)

#define FFSV_CHECK(cond, msg)              \
  do {                                     \
    if (!(cond)) FFSV_ERR(msg);            \
  } while (0)

// Deterministic RNG.  Uniform/Gaussian mappings are written out explicitly so
// that sampled values do not depend on the standard library's distribution
// implementations; streams are reproducible bit-for-bit from the seed.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {
    // splitmix64 warm-up so nearby seeds give unrelated streams.
    for (int i = 0; i < 4; i++) Next();
  }

  uint64_t Next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n).
  uint64_t Index(uint64_t n) { return n ? Next() % n : 0; }

  // Standard normal via Box-Muller; the spare value is cached.
  double Gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = Uniform(), u2 = Uniform();
    while (u1 <= 1e-300) u1 = Uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for per-utterance seed derivation and input digests.
inline uint64_t Fnv1a(const void *data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < len; i++) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t Fnv1a(const std::string &s, uint64_t h = 0xcbf29ce484222325ULL) {
  return Fnv1a(s.data(), s.size(), h);
}

// Seed for one utterance's augmentation, derived from (global seed, utt id).
inline uint64_t DeriveSeed(uint64_t global_seed, const std::string &utt_id) {
  uint64_t h = Fnv1a(utt_id);
  h ^= global_seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h ? h : 1;
}

// --- little-endian binary I/O -----------------------------------------------

template <class T>
void WriteRaw(std::ostream &os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <class T>
T ReadRaw(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  FFSV_CHECK(is.good(), "unexpected end of stream");
  return v;
}

inline void WriteString(std::ostream &os, const std::string &s) {
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string ReadString(std::istream &is) {
  uint32_t n = ReadRaw<uint32_t>(is);
  FFSV_CHECK(n < (1u << 28), "string length " << n << " is implausible");
  std::string s(n, '\0');
  is.read(s.data(), n);
  FFSV_CHECK(is.good(), "unexpected end of stream while reading string");
  return s;
}

inline void ExpectMagic(std::istream &is, const char *magic) {
  char buf[9] = {0};
  is.read(buf, 8);
  FFSV_CHECK(is.good() && std::memcmp(buf, magic, 8) == 0,
             "bad file magic, expected \"" << magic << "\"");
}

inline uint64_t FileDigest(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open " << path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
    h = Fnv1a(buf, static_cast<size_t>(is.gcount()), h);
  return h;
}

}  // namespace ffsv

#endif  // FFSV_COMMON_HPP_
