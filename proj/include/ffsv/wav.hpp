// ffsv/wav.hpp

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

#ifndef FFSV_WAV_HPP_
#define FFSV_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ffsv/common.hpp"

namespace ffsv {

// Mono sample sequence with its rate.  Amplitudes live in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  size_t NumSamples() const { return samples.size(); }
  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

namespace wav_internal {

inline uint32_t ReadU32(std::istream &is) { return ReadRaw<uint32_t>(is); }
inline uint16_t ReadU16(std::istream &is) { return ReadRaw<uint16_t>(is); }

}  // namespace wav_internal

// Reads a RIFF/WAVE file holding 16-bit PCM; returns one Waveform per
// channel, deinterleaved.  Integer samples map to [-1, 1) via division by
// 32768.
inline std::vector<Waveform> ReadWav(const std::string &path) {
  using namespace wav_internal;
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open wav file " << path);

  char tag[5] = {0};
  is.read(tag, 4);
  FFSV_CHECK(is.good() && std::string(tag) == "RIFF",
             "malformed wav header (no RIFF) in " << path);
  ReadU32(is);  // riff size, unreliable in the wild; ignored
  is.read(tag, 4);
  FFSV_CHECK(is.good() && std::string(tag) == "WAVE",
             "malformed wav header (no WAVE) in " << path);

  uint16_t audio_format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<int16_t> raw;
  bool have_data = false;

  while (is.read(tag, 4)) {
    uint32_t chunk_size = ReadU32(is);
    std::string id(tag, 4);
    if (id == "fmt ") {
      FFSV_CHECK(chunk_size >= 16, "malformed fmt chunk in " << path);
      audio_format = ReadU16(is);
      channels = ReadU16(is);
      sample_rate = ReadU32(is);
      ReadU32(is);  // byte rate
      ReadU16(is);  // block align
      bits = ReadU16(is);
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (id == "data") {
      FFSV_CHECK(have_fmt, "data chunk before fmt chunk in " << path);
      FFSV_CHECK(audio_format == 1,
                 "unsupported wav encoding (format tag " << audio_format
                 << ", want PCM) in " << path);
      FFSV_CHECK(bits == 16,
                 "unsupported wav encoding (" << bits << "-bit, want 16) in "
                 << path);
      FFSV_CHECK(chunk_size > 0, "empty audio data chunk in " << path);
      FFSV_CHECK(chunk_size % (2 * channels) == 0,
                 "data chunk size not a whole number of frames in " << path);
      raw.resize(chunk_size / 2);
      is.read(reinterpret_cast<char *>(raw.data()), chunk_size);
      FFSV_CHECK(is.good(), "truncated data chunk in " << path);
      have_data = true;
      break;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  FFSV_CHECK(have_fmt && have_data, "malformed wav file (missing chunk) in " << path);
  FFSV_CHECK(channels >= 1 && sample_rate > 0, "malformed fmt chunk in " << path);

  const size_t frames = raw.size() / channels;
  std::vector<Waveform> out(channels);
  for (uint16_t c = 0; c < channels; c++) {
    out[c].sample_rate = static_cast<int>(sample_rate);
    out[c].samples.resize(frames);
    for (size_t t = 0; t < frames; t++)
      out[c].samples[t] = raw[t * channels + c] / 32768.0;
  }
  return out;
}

inline Waveform ReadWavMono(const std::string &path) {
  auto chans = ReadWav(path);
  FFSV_CHECK(chans.size() == 1,
             path << " has " << chans.size() << " channels, expected mono");
  return std::move(chans[0]);
}

// Writes 16-bit PCM mono.  Values are clamped to the representable range and
// rounded to nearest, so a 16-bit PCM read/write round trip is sample-exact.
inline void WriteWav(const std::string &path, const Waveform &w) {
  FFSV_CHECK(w.sample_rate > 0, "waveform has non-positive sample rate");
  std::ofstream os(path, std::ios::binary);
  FFSV_CHECK(os.is_open(), "cannot create wav file " << path);
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  WriteRaw<uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteRaw<uint32_t>(os, 16);
  WriteRaw<uint16_t>(os, 1);  // PCM
  WriteRaw<uint16_t>(os, 1);  // mono
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(w.sample_rate));
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(w.sample_rate * 2));
  WriteRaw<uint16_t>(os, 2);
  WriteRaw<uint16_t>(os, 16);
  os.write("data", 4);
  WriteRaw<uint32_t>(os, data_bytes);
  for (double v : w.samples) {
    long q = std::lround(v * 32768.0);
    q = std::clamp(q, -32768L, 32767L);
    WriteRaw<int16_t>(os, static_cast<int16_t>(q));
  }
  FFSV_CHECK(os.good(), "write failed for " << path);
}

namespace wav_internal {

// Modified Bessel function of the first kind, order zero (power series).
inline double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double x2 = x * x / 4.0;
  for (int k = 1; k < 64; k++) {
    term *= x2 / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

inline double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

}  // namespace wav_internal

// Band-limited resampling with a windowed-sinc kernel: 64-tap at the denser
// rate, Kaiser window beta=8, cutoff at the lower of the two Nyquist rates.
// Output length is round(n * target / source).  A same-rate input is
// returned unchanged.
inline Waveform Resample(const Waveform &w, int target_rate) {
  FFSV_CHECK(!w.samples.empty(), "cannot resample an empty waveform");
  FFSV_CHECK(target_rate > 0, "target rate must be positive");
  if (target_rate == w.sample_rate) return w;

  using namespace wav_internal;
  const double ratio = static_cast<double>(target_rate) / w.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to input Nyquist
  const double half_width = 32.0 / cutoff;     // input samples per kernel side
  const double i0_beta = BesselI0(8.0);
  const size_t n_in = w.samples.size();
  const size_t n_out = static_cast<size_t>(std::llround(n_in * ratio));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out, 0.0);
  for (size_t n = 0; n < n_out; n++) {
    const double center = n / ratio;
    const long k_lo = std::max(0L, static_cast<long>(std::ceil(center - half_width)));
    const long k_hi = std::min(static_cast<long>(n_in) - 1,
                               static_cast<long>(std::floor(center + half_width)));
    double acc = 0.0;
    for (long k = k_lo; k <= k_hi; k++) {
      const double x = center - k;
      const double t = x / half_width;  // in [-1, 1]
      const double window = BesselI0(8.0 * std::sqrt(std::max(0.0, 1.0 - t * t))) / i0_beta;
      acc += w.samples[k] * cutoff * Sinc(cutoff * x) * window;
    }
    out.samples[n] = acc;
  }
  return out;
}

// y[0] = x[0]; y[t] = x[t] - alpha * x[t-1].
inline Waveform PreEmphasize(const Waveform &w, double alpha = 0.97) {
  FFSV_CHECK(alpha >= 0.0 && alpha < 1.0, "pre-emphasis coefficient must be in [0, 1)");
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  for (size_t t = 0; t < w.samples.size(); t++)
    out.samples[t] = (t == 0) ? w.samples[0]
                              : w.samples[t] - alpha * w.samples[t - 1];
  return out;
}

}  // namespace ffsv

#endif  // FFSV_WAV_HPP_
