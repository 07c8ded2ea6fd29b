// ffsv/synth.hpp

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

#ifndef FFSV_SYNTH_HPP_
#define FFSV_SYNTH_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/wav.hpp"

namespace ffsv {

// Deterministic toy corpus: each "speaker" is a fixed stack of formant-like
// tones; utterances vary pitch, amplitudes, phases and burst timing.  Bursts
// are separated by silence so the voice activity path has real work to do.

struct SynthConfig {
  int n_speakers = 20;
  int utts_per_speaker = 16;
  double utt_seconds = 2.2;
  int sample_rate = 16000;
  uint64_t seed = 42;
  int n_noises = 6;
  double noise_seconds = 4.0;
};

struct SynthVoice {
  double f1 = 0.0, f2 = 0.0, f3 = 0.0;
};

inline SynthVoice SynthSpeakerVoice(int speaker) {
  Rng rng(0x5eedULL * 2654435761ULL + static_cast<uint64_t>(speaker));
  SynthVoice v;
  v.f1 = rng.Uniform(180.0, 350.0);
  v.f2 = rng.Uniform(700.0, 1600.0);
  v.f3 = rng.Uniform(1900.0, 3400.0);
  return v;
}

// One utterance of a given speaker.  Tone stack with a second harmonic of
// the lowest formant, shaped by raised-cosine speech bursts.
inline Waveform SynthUtterance(int speaker, int utt_index, const SynthConfig &cfg) {
  const SynthVoice voice = SynthSpeakerVoice(speaker);
  Rng rng(DeriveSeed(cfg.seed, "synth_spk" + std::to_string(speaker) + "_utt" +
                                    std::to_string(utt_index)));

  const int n = static_cast<int>(cfg.utt_seconds * cfg.sample_rate);
  const double pitch = rng.Uniform(0.97, 1.03);
  const double freqs[4] = {voice.f1 * pitch, 2.0 * voice.f1 * pitch,
                           voice.f2 * pitch, voice.f3 * pitch};
  double amps[4], phases[4];
  for (int i = 0; i < 4; i++) {
    amps[i] = rng.Uniform(0.6, 1.0);
    phases[i] = rng.Uniform(0.0, 2.0 * M_PI);
  }
  amps[1] *= 0.5;

  // Burst/gap envelope with 20 ms raised-cosine edges.
  std::vector<double> envelope(n, 0.0);
  const int ramp = cfg.sample_rate / 50;
  int pos = static_cast<int>(rng.Uniform(0.20, 0.32) * cfg.sample_rate);
  while (pos < n) {
    const int burst = static_cast<int>(rng.Uniform(0.35, 0.60) * cfg.sample_rate);
    const int stop = std::min(n, pos + burst);
    for (int t = pos; t < stop; t++) {
      double e = 1.0;
      if (t - pos < ramp) e = 0.5 * (1.0 - std::cos(M_PI * (t - pos) / ramp));
      if (stop - 1 - t < ramp) e = std::min(e, 0.5 * (1.0 - std::cos(M_PI * (stop - 1 - t) / ramp)));
      envelope[t] = e;
    }
    pos = stop + static_cast<int>(rng.Uniform(0.12, 0.25) * cfg.sample_rate);
  }

  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(n);
  const double vibrato_hz = rng.Uniform(4.0, 7.0);
  for (int t = 0; t < n; t++) {
    const double time = static_cast<double>(t) / cfg.sample_rate;
    const double vib = 1.0 + 0.004 * std::sin(2.0 * M_PI * vibrato_hz * time);
    double s = 0.0;
    for (int i = 0; i < 4; i++)
      s += amps[i] * std::sin(2.0 * M_PI * freqs[i] * vib * time + phases[i]);
    w.samples[t] = 0.22 * envelope[t] * s;
  }
  return w;
}

// Synthetic noise bank entry standing in for a real noise corpus: white,
// low-passed rumble, or a babble-like mixture of wandering tones.
inline Waveform SynthNoise(int index, const SynthConfig &cfg) {
  Rng rng(DeriveSeed(cfg.seed ^ 0x0123456789abcdefULL, "synth_noise" + std::to_string(index)));
  const int n = static_cast<int>(cfg.noise_seconds * cfg.sample_rate);
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(n);

  switch (index % 3) {
    case 0: {  // white
      for (int t = 0; t < n; t++) w.samples[t] = 0.08 * rng.Gaussian();
      break;
    }
    case 1: {  // low-passed rumble
      double state = 0.0;
      for (int t = 0; t < n; t++) {
        state = 0.98 * state + 0.02 * rng.Gaussian();
        w.samples[t] = 3.0 * state;
      }
      break;
    }
    default: {  // babble-like tone cluster with slow amplitude modulation
      const int k = 24;
      std::vector<double> freq(k), phase(k), mod_rate(k), mod_phase(k);
      for (int i = 0; i < k; i++) {
        freq[i] = rng.Uniform(120.0, 3800.0);
        phase[i] = rng.Uniform(0.0, 2.0 * M_PI);
        mod_rate[i] = rng.Uniform(0.5, 3.0);
        mod_phase[i] = rng.Uniform(0.0, 2.0 * M_PI);
      }
      for (int t = 0; t < n; t++) {
        const double time = static_cast<double>(t) / cfg.sample_rate;
        double s = 0.0;
        for (int i = 0; i < k; i++) {
          const double am = 0.5 * (1.0 + std::sin(2.0 * M_PI * mod_rate[i] * time + mod_phase[i]));
          s += am * std::sin(2.0 * M_PI * freq[i] * time + phase[i]);
        }
        w.samples[t] = 0.03 * s;
      }
      break;
    }
  }
  return w;
}

inline std::vector<Waveform> SynthNoiseBank(const SynthConfig &cfg) {
  std::vector<Waveform> bank;
  for (int i = 0; i < cfg.n_noises; i++) bank.push_back(SynthNoise(i, cfg));
  return bank;
}

}  // namespace ffsv

#endif  // FFSV_SYNTH_HPP_
