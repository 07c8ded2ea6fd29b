// ffsv/room_sim.hpp

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

#ifndef FFSV_ROOM_SIM_HPP_
#define FFSV_ROOM_SIM_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/features.hpp"
#include "ffsv/vad.hpp"
#include "ffsv/wav.hpp"

namespace ffsv {

using Point3 = std::array<double, 3>;

inline double Distance(const Point3 &a, const Point3 &b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Shoebox room: dimensions in meters, six per-wall absorption coefficients
// (order x0, xL, y0, yL, z0, zL) and the three positions used by the
// augmentation pipeline.
struct RoomSpec {
  Point3 dims = {7.0, 7.0, 3.0};
  std::array<double, 6> absorption = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  Point3 source_pos = {2.0, 3.0, 1.5};
  Point3 noise_pos = {5.0, 4.0, 1.5};
  Point3 mic_pos = {3.5, 3.5, 1.2};
  int max_order = 6;
};

struct RoomSimConfig {
  std::array<double, 2> width_range = {6.0, 8.0};
  std::array<double, 2> depth_range = {6.0, 8.0};
  std::array<double, 2> height_range = {2.7, 3.5};
  std::array<double, 2> absorption_range = {0.2, 0.7};
  std::array<double, 2> snr_range_db = {0.0, 20.0};
  double margin = 0.1;
  int max_order = 6;
  double speed_of_sound = 343.0;
  int num_mics = 1;          // 1, or 4 for the circular array layout
  double mic_radius = 0.05;  // circular array radius in meters
};

// Draws room geometry, per-wall absorption and the three positions.  The
// sampling order is fixed so a given seed always produces the same room.
inline RoomSpec SampleRoom(const RoomSimConfig &cfg, Rng *rng) {
  RoomSpec room;
  room.max_order = cfg.max_order;
  room.dims[0] = rng->Uniform(cfg.width_range[0], cfg.width_range[1]);
  room.dims[1] = rng->Uniform(cfg.depth_range[0], cfg.depth_range[1]);
  room.dims[2] = rng->Uniform(cfg.height_range[0], cfg.height_range[1]);
  for (auto &a : room.absorption)
    a = rng->Uniform(cfg.absorption_range[0], cfg.absorption_range[1]);

  const double mic_margin =
      cfg.margin + (cfg.num_mics > 1 ? cfg.mic_radius : 0.0);
  auto sample_point = [&](double margin) {
    Point3 p;
    for (int d = 0; d < 3; d++) {
      FFSV_CHECK(room.dims[d] > 2.0 * margin, "room too small for margin");
      p[d] = rng->Uniform(margin, room.dims[d] - margin);
    }
    return p;
  };
  room.source_pos = sample_point(cfg.margin);
  room.noise_pos = sample_point(cfg.margin);
  room.mic_pos = sample_point(mic_margin);
  return room;
}

// One image source: arrival time, signed amplitude and reflection order.
struct ImageTap {
  double delay_s = 0.0;
  double amplitude = 0.0;
  int order = 0;
};

namespace room_internal {

inline bool InsideRoom(const Point3 &p, const Point3 &dims) {
  for (int d = 0; d < 3; d++)
    if (p[d] <= 0.0 || p[d] >= dims[d]) return false;
  return true;
}

}  // namespace room_internal

// Image-source enumeration for a shoebox.  Images live at
// (1-2q)*src + 2*r*L per dimension; wall at 0 reflects |r-q| times and the
// wall at L reflects |r| times.  Amplitude is the product of per-wall
// reflection coefficients sqrt(1-absorption) over 4*pi*distance.
inline std::vector<ImageTap> SimulateRirImages(const RoomSpec &room,
                                               const Point3 &src,
                                               const Point3 &mic,
                                               double speed_of_sound = 343.0) {
  FFSV_CHECK(room_internal::InsideRoom(src, room.dims), "source outside room");
  FFSV_CHECK(room_internal::InsideRoom(mic, room.dims), "microphone outside room");
  FFSV_CHECK(Distance(src, mic) > 1e-9, "source and microphone coincide");

  std::array<double, 6> beta;
  for (int i = 0; i < 6; i++) {
    FFSV_CHECK(room.absorption[i] > 0.0 && room.absorption[i] <= 1.0,
               "absorption coefficients must lie in (0, 1]");
    beta[i] = std::sqrt(1.0 - room.absorption[i]);
  }

  const int r_max = (room.max_order + 1) / 2;
  std::vector<ImageTap> taps;
  std::array<int, 3> r{}, q{};
  for (r[0] = -r_max; r[0] <= r_max; r[0]++)
    for (r[1] = -r_max; r[1] <= r_max; r[1]++)
      for (r[2] = -r_max; r[2] <= r_max; r[2]++)
        for (q[0] = 0; q[0] <= 1; q[0]++)
          for (q[1] = 0; q[1] <= 1; q[1]++)
            for (q[2] = 0; q[2] <= 1; q[2]++) {
              int order = 0;
              double refl = 1.0;
              Point3 img;
              for (int d = 0; d < 3; d++) {
                const int n_wall0 = std::abs(r[d] - q[d]);
                const int n_wallL = std::abs(r[d]);
                order += n_wall0 + n_wallL;
                refl *= std::pow(beta[2 * d], n_wall0) *
                        std::pow(beta[2 * d + 1], n_wallL);
                img[d] = (1.0 - 2.0 * q[d]) * src[d] + 2.0 * r[d] * room.dims[d];
              }
              if (order > room.max_order || refl == 0.0) continue;
              const double dist = Distance(img, mic);
              taps.push_back(ImageTap{dist / speed_of_sound,
                                      refl / (4.0 * M_PI * dist), order});
            }
  std::sort(taps.begin(), taps.end(),
            [](const ImageTap &a, const ImageTap &b) { return a.delay_s < b.delay_s; });
  return taps;
}

struct Rir {
  std::vector<double> taps;
  int peak_delay_samples = 0;
  int sample_rate = 16000;
};

// Renders image taps to a sampled impulse response.  Fractional delays use
// an 81-tap windowed sinc (Hann window); the response is padded past the last
// image so the tail returns to zero.
inline Rir RenderRir(const std::vector<ImageTap> &images, int sample_rate = 16000) {
  FFSV_CHECK(!images.empty(), "no image taps to render");
  constexpr int kHalfTaps = 40;  // 81-tap interpolation kernel
  double max_delay = 0.0;
  for (const auto &t : images) max_delay = std::max(max_delay, t.delay_s);

  Rir rir;
  rir.sample_rate = sample_rate;
  rir.taps.assign(static_cast<size_t>(std::ceil(max_delay * sample_rate)) +
                      2 * kHalfTaps + 2,
                  0.0);
  for (const auto &img : images) {
    const double center = img.delay_s * sample_rate;
    const long j0 = std::lround(center);
    for (long j = std::max(0L, j0 - kHalfTaps);
         j <= std::min<long>(static_cast<long>(rir.taps.size()) - 1, j0 + kHalfTaps);
         j++) {
      const double x = static_cast<double>(j) - center;
      const double window = 0.5 * (1.0 + std::cos(M_PI * x / (kHalfTaps + 0.5)));
      rir.taps[j] += img.amplitude * wav_internal::Sinc(x) * window;
    }
  }
  int peak = 0;
  for (size_t i = 1; i < rir.taps.size(); i++)
    if (std::abs(rir.taps[i]) > std::abs(rir.taps[peak])) peak = static_cast<int>(i);
  rir.peak_delay_samples = peak;
  return rir;
}

inline Rir SimulateRir(const RoomSpec &room, const Point3 &src, const Point3 &mic,
                       int sample_rate = 16000, double speed_of_sound = 343.0) {
  return RenderRir(SimulateRirImages(room, src, mic, speed_of_sound), sample_rate);
}

// Full linear convolution with the impulse response, length N + M - 1.  The
// FFT path is used for large products and matches direct evaluation to
// better than 1e-9.
inline Waveform ApplyRir(const Waveform &w, const Rir &h) {
  FFSV_CHECK(!w.samples.empty() && !h.taps.empty(), "empty convolution operand");
  FFSV_CHECK(w.sample_rate == h.sample_rate,
             "waveform rate " << w.sample_rate << " != RIR rate " << h.sample_rate);
  Waveform out;
  out.sample_rate = w.sample_rate;
  const size_t work = w.samples.size() * h.taps.size();
  out.samples = (work > 1u << 16) ? FftConvolve(w.samples, h.taps)
                                  : DirectConvolve(w.samples, h.taps);
  return out;
}

namespace room_internal {

// Noise repeated or cut to exactly n samples.
inline std::vector<double> TileToLength(const std::vector<double> &x, size_t n) {
  std::vector<double> out(n);
  for (size_t i = 0; i < n; i++) out[i] = x[i % x.size()];
  return out;
}

// Sample indices covered by active-speech frames (hop-sized chunks).  Falls
// back to every sample when the signal is shorter than a frame or the VAD
// fires nowhere.
inline std::vector<size_t> ActiveSampleIndices(const Waveform &speech) {
  const FramingConfig fcfg;
  const int frame_len = static_cast<int>(std::lround(fcfg.frame_len_s * speech.sample_rate));
  std::vector<size_t> active;
  if (speech.samples.size() >= static_cast<size_t>(frame_len)) {
    FrameSet fs = FrameSignal(speech, fcfg);
    FrameMask mask = EnergyVad(fs);
    for (int t = 0; t < mask.NumFrames(); t++) {
      if (!mask.mask[t]) continue;
      const size_t start = static_cast<size_t>(t) * fs.hop;
      for (size_t i = start; i < std::min(start + fs.hop, speech.samples.size()); i++)
        active.push_back(i);
    }
  }
  if (active.empty()) {
    active.resize(speech.samples.size());
    for (size_t i = 0; i < active.size(); i++) active[i] = i;
  }
  return active;
}

inline double MeanSquareAt(const std::vector<double> &x,
                           const std::vector<size_t> &idx) {
  double acc = 0.0;
  for (size_t i : idx) acc += x[i] * x[i];
  return acc / static_cast<double>(idx.size());
}

}  // namespace room_internal

// Scales the noise so that 10*log10(P_speech / P_noise) hits snr_db, with
// powers measured over the active-speech frames, then adds it to the speech.
inline Waveform MixNoise(const Waveform &speech, const Waveform &noise,
                         double snr_db) {
  FFSV_CHECK(!speech.samples.empty() && !noise.samples.empty(),
             "mixing needs non-empty speech and noise");
  FFSV_CHECK(speech.sample_rate == noise.sample_rate,
             "speech and noise sample rates differ");

  const auto noise_tiled = room_internal::TileToLength(noise.samples, speech.samples.size());
  const auto active = room_internal::ActiveSampleIndices(speech);
  const double p_speech = room_internal::MeanSquareAt(speech.samples, active);
  const double p_noise = room_internal::MeanSquareAt(noise_tiled, active);
  FFSV_CHECK(p_speech > 0.0, "all-zero speech signal");
  FFSV_CHECK(p_noise > 0.0, "all-zero noise over the active-speech region");

  const double gain = std::sqrt(p_speech / (p_noise * std::pow(10.0, snr_db / 10.0)));
  Waveform out;
  out.sample_rate = speech.sample_rate;
  out.samples.resize(speech.samples.size());
  for (size_t i = 0; i < out.samples.size(); i++)
    out.samples[i] = speech.samples[i] + gain * noise_tiled[i];
  return out;
}

// SNR of two already-aligned components, measured the same way MixNoise
// measures it.  Used by callers that keep the paths separate.
inline double MeasureSnrDb(const Waveform &speech_path, const Waveform &noise_path) {
  FFSV_CHECK(speech_path.samples.size() == noise_path.samples.size(),
             "component lengths differ");
  const auto active = room_internal::ActiveSampleIndices(speech_path);
  const double ps = room_internal::MeanSquareAt(speech_path.samples, active);
  const double pn = room_internal::MeanSquareAt(noise_path.samples, active);
  FFSV_CHECK(ps > 0.0 && pn > 0.0, "cannot measure SNR of a silent component");
  return 10.0 * std::log10(ps / pn);
}

// Far-field copies of one utterance: the reverberated speech and noise paths
// mixed at a sampled SNR, one output per microphone.  Channel truncation to
// the source length keeps frame alignment with the clean utterance.
struct AugmentOutput {
  std::vector<Waveform> channels;
  std::vector<Waveform> speech_paths;  // reverberant speech per channel
  std::vector<Waveform> noise_paths;   // scaled reverberant noise per channel
  RoomSpec room;
  double snr_db = 0.0;
  size_t noise_index = 0;
};

inline AugmentOutput Augment(const Waveform &utt,
                             const std::vector<Waveform> &noise_bank,
                             const RoomSimConfig &cfg, Rng *rng) {
  FFSV_CHECK(!noise_bank.empty(), "empty noise bank");
  FFSV_CHECK(!utt.samples.empty(), "empty input utterance");

  AugmentOutput out;
  out.room = SampleRoom(cfg, rng);
  out.noise_index = static_cast<size_t>(rng->Index(noise_bank.size()));
  out.snr_db = rng->Uniform(cfg.snr_range_db[0], cfg.snr_range_db[1]);

  const Waveform &noise = noise_bank[out.noise_index];
  FFSV_CHECK(noise.sample_rate == utt.sample_rate, "noise bank rate mismatch");
  Waveform noise_tiled;
  noise_tiled.sample_rate = utt.sample_rate;
  noise_tiled.samples = room_internal::TileToLength(noise.samples, utt.samples.size());

  std::vector<Point3> mics;
  if (cfg.num_mics <= 1) {
    mics.push_back(out.room.mic_pos);
  } else {
    for (int k = 0; k < cfg.num_mics; k++) {
      const double ang = 2.0 * M_PI * k / cfg.num_mics;
      mics.push_back(Point3{out.room.mic_pos[0] + cfg.mic_radius * std::cos(ang),
                            out.room.mic_pos[1] + cfg.mic_radius * std::sin(ang),
                            out.room.mic_pos[2]});
    }
  }

  const size_t n = utt.samples.size();
  double gain = 1.0;
  for (size_t k = 0; k < mics.size(); k++) {
    Rir h_speech = SimulateRir(out.room, out.room.source_pos, mics[k],
                               utt.sample_rate, cfg.speed_of_sound);
    Rir h_noise = SimulateRir(out.room, out.room.noise_pos, mics[k],
                              utt.sample_rate, cfg.speed_of_sound);
    Waveform speech_rev = ApplyRir(utt, h_speech);
    Waveform noise_rev = ApplyRir(noise_tiled, h_noise);
    speech_rev.samples.resize(n);
    noise_rev.samples.resize(n);

    if (k == 0) {
      // Noise gain set on the reference channel and shared across the array:
      // one physical noise source, one level.
      const auto active = room_internal::ActiveSampleIndices(speech_rev);
      const double ps = room_internal::MeanSquareAt(speech_rev.samples, active);
      const double pn = room_internal::MeanSquareAt(noise_rev.samples, active);
      FFSV_CHECK(ps > 0.0, "reverberant speech is silent");
      FFSV_CHECK(pn > 0.0, "reverberant noise is silent");
      gain = std::sqrt(ps / (pn * std::pow(10.0, out.snr_db / 10.0)));
    }

    Waveform mixed;
    mixed.sample_rate = utt.sample_rate;
    mixed.samples.resize(n);
    for (size_t i = 0; i < n; i++) {
      noise_rev.samples[i] *= gain;
      mixed.samples[i] = speech_rev.samples[i] + noise_rev.samples[i];
    }
    out.speech_paths.push_back(std::move(speech_rev));
    out.noise_paths.push_back(std::move(noise_rev));
    out.channels.push_back(std::move(mixed));
  }
  return out;
}

}  // namespace ffsv

#endif  // FFSV_ROOM_SIM_HPP_
