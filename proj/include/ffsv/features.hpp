// ffsv/features.hpp

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

#ifndef FFSV_FEATURES_HPP_
#define FFSV_FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/fft.hpp"
#include "ffsv/wav.hpp"

namespace ffsv {

enum class FeatureKind { kLogMel, kMfcc };

// T x D feature array, row-major.
struct FeatureMatrix {
  std::vector<double> data;
  int num_frames = 0;
  int dim = 0;
  double frame_shift = 0.01;
  FeatureKind kind = FeatureKind::kLogMel;

  double &At(int t, int d) { return data[static_cast<size_t>(t) * dim + d]; }
  double At(int t, int d) const { return data[static_cast<size_t>(t) * dim + d]; }
  const double *Row(int t) const { return data.data() + static_cast<size_t>(t) * dim; }
  double *Row(int t) { return data.data() + static_cast<size_t>(t) * dim; }
};

struct FramingConfig {
  double frame_len_s = 0.025;
  double hop_s = 0.010;
};

// Frames extracted from a waveform.  frames holds the Hamming-windowed
// samples; log_energy_db is 10*log10 of the raw frame's mean square power,
// kept for the energy VAD and as a GVAD input feature.
struct FrameSet {
  std::vector<std::vector<double>> frames;
  std::vector<double> log_energy_db;
  int frame_len = 0;       // samples
  int hop = 0;             // samples
  int sample_rate = 16000;

  int NumFrames() const { return static_cast<int>(frames.size()); }
  double FrameShift() const { return static_cast<double>(hop) / sample_rate; }
};

inline int NumFramesFor(size_t num_samples, int frame_len, int hop) {
  if (num_samples < static_cast<size_t>(frame_len)) return 0;
  return static_cast<int>((num_samples - frame_len) / hop) + 1;
}

// Slices w into overlapping frames and applies a Hamming window to each.
// Errors out if the signal is shorter than one frame.
inline FrameSet FrameSignal(const Waveform &w,
                            const FramingConfig &cfg = FramingConfig()) {
  FrameSet fs;
  fs.sample_rate = w.sample_rate;
  fs.frame_len = static_cast<int>(std::lround(cfg.frame_len_s * w.sample_rate));
  fs.hop = static_cast<int>(std::lround(cfg.hop_s * w.sample_rate));
  FFSV_CHECK(fs.frame_len > 1 && fs.hop >= 1, "degenerate framing config");
  FFSV_CHECK(w.samples.size() >= static_cast<size_t>(fs.frame_len),
             "signal too short: " << w.samples.size() << " samples < one "
             << fs.frame_len << "-sample frame");

  const int num_frames = NumFramesFor(w.samples.size(), fs.frame_len, fs.hop);
  std::vector<double> window(fs.frame_len);
  for (int n = 0; n < fs.frame_len; n++)
    window[n] = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (fs.frame_len - 1));

  fs.frames.resize(num_frames);
  fs.log_energy_db.resize(num_frames);
  for (int t = 0; t < num_frames; t++) {
    const size_t start = static_cast<size_t>(t) * fs.hop;
    auto &frame = fs.frames[t];
    frame.resize(fs.frame_len);
    double power = 0.0;
    for (int n = 0; n < fs.frame_len; n++) {
      const double x = w.samples[start + n];
      power += x * x;
      frame[n] = x * window[n];
    }
    power /= fs.frame_len;
    fs.log_energy_db[t] = 10.0 * std::log10(power + 1e-30);
  }
  return fs;
}

struct MelConfig {
  int n_fft = 512;
  int n_mels = 64;
  double fmin_hz = 20.0;
  double fmax_hz = 8000.0;
  double log_floor = 1e-10;
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters with equally spaced mel centers; weights are linear in
// mel, evaluated at the FFT bin frequencies.  Returns n_mels x (n_fft/2 + 1).
inline std::vector<std::vector<double>> MelFilterbank(const MelConfig &cfg,
                                                      int sample_rate) {
  FFSV_CHECK(cfg.n_mels >= 1, "need at least one mel band");
  const int n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = HzToMel(cfg.fmin_hz);
  const double mel_hi = HzToMel(std::min(cfg.fmax_hz, sample_rate / 2.0));
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; i++)
    edges[i] = mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1);

  std::vector<std::vector<double>> bank(cfg.n_mels, std::vector<double>(n_bins, 0.0));
  for (int k = 0; k < n_bins; k++) {
    const double mel = HzToMel(static_cast<double>(k) * sample_rate / cfg.n_fft);
    for (int i = 0; i < cfg.n_mels; i++) {
      const double lo = edges[i], mid = edges[i + 1], hi = edges[i + 2];
      if (mel <= lo || mel >= hi) continue;
      bank[i][k] = (mel <= mid) ? (mel - lo) / (mid - lo) : (hi - mel) / (hi - mid);
    }
  }
  return bank;
}

// Per frame: zero-pad to n_fft, magnitude-squared DFT, mel filterbank,
// natural log with floor.
inline FeatureMatrix LogMel(const FrameSet &fs, const MelConfig &cfg = MelConfig()) {
  const auto bank = MelFilterbank(cfg, fs.sample_rate);
  const int n_bins = cfg.n_fft / 2 + 1;

  FeatureMatrix out;
  out.num_frames = fs.NumFrames();
  out.dim = cfg.n_mels;
  out.frame_shift = fs.FrameShift();
  out.kind = FeatureKind::kLogMel;
  out.data.resize(static_cast<size_t>(out.num_frames) * out.dim);

  std::vector<double> power(n_bins);
  for (int t = 0; t < out.num_frames; t++) {
    FFSV_CHECK(fs.frames[t].size() <= static_cast<size_t>(cfg.n_fft),
               "frame longer than FFT size");
    auto spec = RealFft(fs.frames[t], cfg.n_fft);
    for (int k = 0; k < n_bins; k++) power[k] = std::norm(spec[k]);
    for (int i = 0; i < cfg.n_mels; i++) {
      double e = 0.0;
      for (int k = 0; k < n_bins; k++) e += bank[i][k] * power[k];
      out.At(t, i) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

// Orthonormal DCT-II matrix slice: n_coef x n_in, rows orthonormal.
inline std::vector<std::vector<double>> DctMatrix(int n_coef, int n_in) {
  std::vector<std::vector<double>> m(n_coef, std::vector<double>(n_in));
  for (int k = 0; k < n_coef; k++) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int n = 0; n < n_in; n++)
      m[k][n] = scale * std::cos(M_PI * k * (2.0 * n + 1.0) / (2.0 * n_in));
  }
  return m;
}

// DCT-II of the log-mel energies, keeping the first n_coef coefficients
// (coefficient 0 included).
inline FeatureMatrix Mfcc(const FrameSet &fs, int n_coef = 30,
                          const MelConfig &mel_cfg = MelConfig()) {
  FFSV_CHECK(n_coef >= 1 && n_coef <= mel_cfg.n_mels,
             "mfcc coefficient count must be in [1, n_mels]");
  FeatureMatrix lm = LogMel(fs, mel_cfg);
  const auto dct = DctMatrix(n_coef, mel_cfg.n_mels);

  FeatureMatrix out;
  out.num_frames = lm.num_frames;
  out.dim = n_coef;
  out.frame_shift = lm.frame_shift;
  out.kind = FeatureKind::kMfcc;
  out.data.resize(static_cast<size_t>(out.num_frames) * n_coef);
  for (int t = 0; t < lm.num_frames; t++) {
    for (int k = 0; k < n_coef; k++) {
      double acc = 0.0;
      for (int n = 0; n < mel_cfg.n_mels; n++) acc += dct[k][n] * lm.At(t, n);
      out.At(t, k) = acc;
    }
  }
  return out;
}

// Subtracts the per-utterance mean of every coefficient dimension.
inline FeatureMatrix MeanNormalize(const FeatureMatrix &f) {
  FFSV_CHECK(f.num_frames >= 1, "cannot mean-normalize an empty feature matrix");
  FeatureMatrix out = f;
  for (int d = 0; d < f.dim; d++) {
    double mean = 0.0;
    for (int t = 0; t < f.num_frames; t++) mean += f.At(t, d);
    mean /= f.num_frames;
    for (int t = 0; t < f.num_frames; t++) out.At(t, d) -= mean;
  }
  return out;
}

// --- feature archive ---------------------------------------------------------
//
// Layout: magic "FFSVFEAT", version u32, then one record per utterance:
// id length u32, id bytes, T u32, D u32, T*D row-major f32 little-endian.

inline void WriteFeatureArchive(
    const std::string &path,
    const std::vector<std::pair<std::string, FeatureMatrix>> &entries) {
  std::ofstream os(path, std::ios::binary);
  FFSV_CHECK(os.is_open(), "cannot create feature archive " << path);
  os.write("FFSVFEAT", 8);
  WriteRaw<uint32_t>(os, 1);
  for (const auto &[id, f] : entries) {
    WriteString(os, id);
    WriteRaw<uint32_t>(os, static_cast<uint32_t>(f.num_frames));
    WriteRaw<uint32_t>(os, static_cast<uint32_t>(f.dim));
    for (double v : f.data) WriteRaw<float>(os, static_cast<float>(v));
  }
  FFSV_CHECK(os.good(), "write failed for " << path);
}

inline std::vector<std::pair<std::string, FeatureMatrix>> ReadFeatureArchive(
    const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open feature archive " << path);
  ExpectMagic(is, "FFSVFEAT");
  const uint32_t version = ReadRaw<uint32_t>(is);
  FFSV_CHECK(version == 1, "unsupported feature archive version " << version);

  std::vector<std::pair<std::string, FeatureMatrix>> entries;
  while (is.peek() != EOF) {
    std::string id = ReadString(is);
    FeatureMatrix f;
    f.num_frames = static_cast<int>(ReadRaw<uint32_t>(is));
    f.dim = static_cast<int>(ReadRaw<uint32_t>(is));
    f.data.resize(static_cast<size_t>(f.num_frames) * f.dim);
    for (auto &v : f.data) v = ReadRaw<float>(is);
    entries.emplace_back(std::move(id), std::move(f));
  }
  return entries;
}

}  // namespace ffsv

#endif  // FFSV_FEATURES_HPP_
