// tests/acceptance.cpp

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

// System acceptance suite.  Each criterion prints one PASS/FAIL line; the
// process exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ffsv/backend.hpp"
#include "ffsv/embed_net.hpp"
#include "ffsv/eval.hpp"
#include "ffsv/features.hpp"
#include "ffsv/room_sim.hpp"
#include "ffsv/synth.hpp"
#include "ffsv/vad.hpp"
#include "ffsv/wav.hpp"
#include "oracles.hpp"

using namespace ffsv;
using Clock = std::chrono::steady_clock;

namespace {

#define ACCEPT_CHECK(cond, msg)                  \
  do {                                           \
    if (!(cond)) {                               \
      std::ostringstream os__;                   \
      os__ << msg;                               \
      throw std::runtime_error(os__.str());      \
    }                                            \
  } while (0)

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Shared generators (duplicated from the unit suites on purpose: the
// acceptance binary stands alone).

Matrix RandomSpd(int dim, uint64_t seed, double scale) {
  Rng rng(seed);
  Matrix a(dim, dim);
  for (auto &v : a.data) v = rng.Gaussian();
  Matrix spd = MatMul(a, Transpose(a));
  for (auto &v : spd.data) v *= scale / dim;
  for (int i = 0; i < dim; i++) spd(i, i) += 0.2 * scale;
  return spd;
}

std::vector<double> SampleGaussian(const Matrix &chol, Rng *rng) {
  const int dim = chol.rows;
  std::vector<double> z(dim);
  for (auto &v : z) v = rng->Gaussian();
  std::vector<double> x(dim, 0.0);
  for (int i = 0; i < dim; i++)
    for (int j = 0; j <= i; j++) x[i] += chol(i, j) * z[j];
  return x;
}

double FrobeniusRelError(const Matrix &estimate, const Matrix &truth) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < truth.data.size(); i++) {
    const double d = estimate.data[i] - truth.data[i];
    num += d * d;
    den += truth.data[i] * truth.data[i];
  }
  return std::sqrt(num / den);
}

FeatureMatrix Featurize(const Waveform &w) {
  return MeanNormalize(LogMel(FrameSignal(PreEmphasize(w, 0.97))));
}

FeatureMatrix MakeFrames(const std::vector<std::vector<double>> &rows) {
  FeatureMatrix f;
  f.num_frames = static_cast<int>(rows.size());
  f.dim = static_cast<int>(rows[0].size());
  for (const auto &r : rows) f.data.insert(f.data.end(), r.begin(), r.end());
  return f;
}

// Artifacts shared between the end-to-end criterion and the EDA criterion.
struct E2eArtifacts {
  std::unique_ptr<EmbedNet> model;
  GvadModel gvad;
  Waveform enroll_clean;
  Waveform test_farfield;
};
std::optional<E2eArtifacts> g_e2e;

// ---------------------------------------------------------------------------
// 1. Metric kernels match the exhaustive-threshold oracle exactly.

void Criterion1() {
  const auto start = Clock::now();
  Rng rng(20200409);
  for (int rep = 0; rep < 1000; rep++) {
    std::vector<LabeledScore> s;
    const int n = 2 + static_cast<int>(rng.Index(49));
    s.push_back({rng.Gaussian(), true});
    s.push_back({rng.Gaussian(), false});
    for (int i = 2; i < n; i++) {
      const double v = (rng.Uniform() < 0.2) ? s[rng.Index(s.size())].score
                                             : rng.Gaussian();
      s.push_back({v, rng.Uniform() < 0.4});
    }
    const double eer = ComputeEer(s);
    const double oracle_eer = ffsv_oracle::OracleEer(s);
    ACCEPT_CHECK(std::abs(eer - oracle_eer) <= 1e-12,
                 "set " << rep << ": EER " << eer << " vs oracle " << oracle_eer);
    const auto [dcf, th] = ComputeMinDcf(s, 0.01);
    const auto [odcf, oth] = ffsv_oracle::OracleMinDcf(s, 0.01);
    ACCEPT_CHECK(std::abs(dcf - odcf) <= 1e-12,
                 "set " << rep << ": minDCF " << dcf << " vs oracle " << odcf);
    ACCEPT_CHECK(th == oth, "set " << rep << ": threshold " << th << " vs " << oth);
  }
  const double elapsed = SecondsSince(start);
  ACCEPT_CHECK(elapsed < 10.0, "took " << elapsed << " s, budget 10 s");
}

// ---------------------------------------------------------------------------
// 2. Hand-checkable score sets.

void Criterion2() {
  std::vector<LabeledScore> hand = {{0.9, true},  {0.8, true},  {0.4, true},
                                    {0.5, false}, {0.2, false}, {0.1, false}};
  ACCEPT_CHECK(std::abs(ComputeEer(hand) - 1.0 / 3.0) <= 1e-12,
               "hand EER " << ComputeEer(hand) << " != 1/3");
  const auto [dcf, th] = ComputeMinDcf(hand, 0.01);
  const auto [odcf, oth] = ffsv_oracle::OracleMinDcf(hand, 0.01);
  ACCEPT_CHECK(std::abs(dcf - odcf) <= 1e-12,
               "hand minDCF " << dcf << " vs oracle " << odcf);
  ACCEPT_CHECK(std::abs(dcf - 1.0 / 3.0) <= 1e-12, "hand minDCF " << dcf << " != 1/3");
  ACCEPT_CHECK(th == 0.8, "hand minDCF threshold " << th << " != 0.8");

  std::vector<LabeledScore> perfect = {{0.9, true},  {0.8, true},  {0.7, true},
                                       {0.3, false}, {0.2, false}, {0.1, false}};
  ACCEPT_CHECK(ComputeEer(perfect) == 0.0, "perfect separation EER not 0");
  ACCEPT_CHECK(ComputeMinDcf(perfect, 0.01).first == 0.0,
               "perfect separation minDCF not 0");
}

// ---------------------------------------------------------------------------
// 3. Backpropagation against central finite differences.

void Criterion3() {
  const auto start = Clock::now();
  for (int blocks : {1, 2}) {
    NetworkConfig cfg = NetworkConfig::Resnet34(3);
    cfg.width_num = 1;
    cfg.width_den = 8;
    cfg.block_counts = {blocks, blocks, blocks, blocks};
    cfg.embedding_dim = 16;
    Rng rng(600 + blocks);
    EmbedNet net(cfg, &rng);
    Tensor x({2, 1, 64, 16});
    Rng xr(700 + blocks);
    for (auto &v : x.data) v = xr.Gaussian();
    const double err = GradCheck(&net, x, {0, 2}, 1e-4, 200, 800 + blocks);
    ACCEPT_CHECK(err < 1e-4, "blocks/layer " << blocks << ": max rel error " << err);
  }
  const double elapsed = SecondsSince(start);
  ACCEPT_CHECK(elapsed < 60.0, "took " << elapsed << " s, budget 60 s");
}

// ---------------------------------------------------------------------------
// 4. Reference-scale shapes.

void Criterion4() {
  NetworkConfig cfg34 = NetworkConfig::Resnet34(10);
  EmbedNet net34(cfg34);
  for (int len : {64, 128}) {
    Tensor x({1, 1, 64, len});
    Rng rng(901 + len);
    for (auto &v : x.data) v = rng.Gaussian();
    const ForwardResult out = net34.Forward(x, Mode::kEval);
    const auto &shapes = net34.stage_shapes();
    ACCEPT_CHECK(shapes.size() == 5, "expected 5 stage shapes");
    const int expected[5][3] = {{32, 64, len},
                                {32, 64, len},
                                {64, 32, len / 2},
                                {128, 16, len / 4},
                                {256, 8, len / 8}};
    for (int i = 0; i < 5; i++) {
      ACCEPT_CHECK(shapes[i].channels == expected[i][0] &&
                   shapes[i].freq == expected[i][1] &&
                   shapes[i].time == expected[i][2],
                   "L=" << len << " stage " << i << ": got (" << shapes[i].channels
                   << "," << shapes[i].freq << "," << shapes[i].time << "), want ("
                   << expected[i][0] << "," << expected[i][1] << ","
                   << expected[i][2] << ")");
    }
    ACCEPT_CHECK(out.encoding.Dim(1) == 512,
                 "L=" << len << " encoding " << out.encoding.Dim(1) << " != 512");
    ACCEPT_CHECK(out.embedding.Dim(1) == 128,
                 "L=" << len << " embedding " << out.embedding.Dim(1) << " != 128");
  }

  NetworkConfig cfg50 = NetworkConfig::Resnet50(7);
  EmbedNet net50(cfg50);
  Tensor x({1, 1, 30, 16});
  Rng rng(950);
  for (auto &v : x.data) v = rng.Gaussian();
  const ForwardResult out = net50.Forward(x, Mode::kEval);
  ACCEPT_CHECK(net50.stage_shapes().back().channels == 2048,
               "resnet50 final channels " << net50.stage_shapes().back().channels);
  ACCEPT_CHECK(out.encoding.Dim(1) == 2048,
               "resnet50 encoding " << out.encoding.Dim(1) << " != 2048");
  ACCEPT_CHECK(out.embedding.Dim(1) == 1024,
               "resnet50 embedding " << out.embedding.Dim(1) << " != 1024");
}

// ---------------------------------------------------------------------------
// 5. PLDA EM: recovery, monotone likelihood, brute-force rank agreement.

void Criterion5() {
  const auto start = Clock::now();

  // Pinned generator: 200 speaker draws put an irreducible sampling error of
  // about sqrt(2/200) = 10% on the between-class covariance, so this runs as
  // a frozen regression point.
  const int dim = 8;
  const Matrix b0 = RandomSpd(dim, 18, 1.5);
  const Matrix w0 = RandomSpd(dim, 19, 0.8);
  const Matrix chol_b = CholeskyFactor(b0);
  const Matrix chol_w = CholeskyFactor(w0);
  std::vector<std::vector<Vector>> grouped;
  Rng rng(30);
  for (int s = 0; s < 200; s++) {
    std::vector<Vector> group;
    const Vector y = SampleGaussian(chol_b, &rng);
    for (int j = 0; j < 10; j++) {
      Vector x = SampleGaussian(chol_w, &rng);
      for (int d = 0; d < dim; d++) x[d] += y[d];
      group.push_back(std::move(x));
    }
    grouped.push_back(std::move(group));
  }
  const TwoCovEmResult em = TwoCovarianceEm(grouped, 25);
  const double err_b = FrobeniusRelError(em.between, b0);
  const double err_w = FrobeniusRelError(em.within, w0);
  ACCEPT_CHECK(err_b < 0.10, "between-covariance error " << err_b);
  ACCEPT_CHECK(err_w < 0.10, "within-covariance error " << err_w);
  for (size_t i = 1; i < em.loglik.size(); i++)
    ACCEPT_CHECK(em.loglik[i] >= em.loglik[i - 1] - 1e-8,
                 "log-likelihood dropped at EM iteration " << i);

  // 2-D model: scores must rank-agree with the direct density evaluation.
  const Matrix b2 = RandomSpd(2, 40, 1.0);
  const Matrix w2 = RandomSpd(2, 41, 0.5);
  const Matrix cb2 = CholeskyFactor(b2), cw2 = CholeskyFactor(w2);
  std::vector<std::vector<double>> embs;
  std::vector<int> labels;
  Rng rng2(42);
  for (int s = 0; s < 30; s++) {
    const Vector y = SampleGaussian(cb2, &rng2);
    for (int j = 0; j < 10; j++) {
      Vector x = SampleGaussian(cw2, &rng2);
      for (int d = 0; d < 2; d++) x[d] += y[d];
      embs.push_back(x);
      labels.push_back(s);
    }
  }
  const PldaModel model = PldaTrain(embs, labels, 15);
  std::vector<std::vector<double>> bg(2, std::vector<double>(2));
  std::vector<std::vector<double>> wg(2, std::vector<double>(2));
  for (int i = 0; i < 2; i++)
    for (int j = 0; j < 2; j++) {
      bg[i][j] = model.between(i, j);
      wg[i][j] = model.within(i, j);
    }
  std::vector<double> impl, oracle;
  Rng pair_rng(43);
  for (int rep = 0; rep < 120; rep++) {
    std::vector<double> e = {pair_rng.Gaussian(), pair_rng.Gaussian()};
    std::vector<double> t = {pair_rng.Gaussian(), pair_rng.Gaussian()};
    impl.push_back(PldaScore(model, e, t));
    oracle.push_back(ffsv_oracle::OraclePldaLlr(PldaPreprocess(model, e),
                                                PldaPreprocess(model, t), bg, wg));
  }
  std::vector<size_t> rank_impl(impl.size()), rank_oracle(impl.size());
  std::iota(rank_impl.begin(), rank_impl.end(), 0u);
  std::iota(rank_oracle.begin(), rank_oracle.end(), 0u);
  std::sort(rank_impl.begin(), rank_impl.end(),
            [&](size_t a, size_t b) { return impl[a] < impl[b]; });
  std::sort(rank_oracle.begin(), rank_oracle.end(),
            [&](size_t a, size_t b) { return oracle[a] < oracle[b]; });
  ACCEPT_CHECK(rank_impl == rank_oracle,
               "score ranking differs from the density oracle");

  const double elapsed = SecondsSince(start);
  ACCEPT_CHECK(elapsed < 30.0, "took " << elapsed << " s, budget 30 s");
}

// ---------------------------------------------------------------------------
// 6. Room simulator.

void Criterion6() {
  // Anechoic: single image at d/343 with amplitude 1/(4 pi d).
  RoomSpec anechoic;
  anechoic.dims = {10.0, 10.0, 10.0};
  anechoic.absorption.fill(1.0);
  anechoic.max_order = 6;
  {
    const Point3 src = {4.0, 5.0, 5.0}, mic = {6.0, 5.0, 5.0};  // d = 2 m
    const auto images = SimulateRirImages(anechoic, src, mic);
    ACCEPT_CHECK(images.size() == 1, "anechoic image count " << images.size());
    ACCEPT_CHECK(std::abs(images[0].delay_s - 2.0 / 343.0) <= 1e-12,
                 "anechoic delay " << images[0].delay_s);
    ACCEPT_CHECK(std::abs(images[0].amplitude - 1.0 / (8.0 * M_PI)) <= 1e-12,
                 "anechoic amplitude " << images[0].amplitude);
    // Rendered pulse at d = 2 m: the delay is fractional, so the ideal tap is
    // spread over the interpolation kernel.  The peak attenuates by at most
    // sinc(1/2) and the cluster energy stays within the window truncation
    // error of amp^2.
    const Rir rir = SimulateRir(anechoic, src, mic);
    const double ideal_pos = 2.0 / 343.0 * 16000.0;
    const double ideal_amp = 1.0 / (8.0 * M_PI);
    ACCEPT_CHECK(std::abs(rir.peak_delay_samples - ideal_pos) <= 1.0,
                 "rendered peak at " << rir.peak_delay_samples << ", ideal "
                 << ideal_pos);
    const double peak = std::abs(rir.taps[rir.peak_delay_samples]);
    ACCEPT_CHECK(peak >= 0.6 * ideal_amp && peak <= 1.001 * ideal_amp,
                 "rendered peak amplitude " << peak << ", ideal " << ideal_amp);
    double energy = 0.0;
    for (double t : rir.taps) energy += t * t;
    ACCEPT_CHECK(std::abs(energy - ideal_amp * ideal_amp) <=
                     0.03 * ideal_amp * ideal_amp,
                 "rendered energy " << energy << ", ideal " << ideal_amp * ideal_amp);
    // Integer-delay distance: the windowed sinc collapses to one exact tap.
    const double d_exact = 343.0 * 100.0 / 16000.0;
    const Rir exact = SimulateRir(anechoic, src, {4.0 + d_exact, 5.0, 5.0});
    ACCEPT_CHECK(exact.peak_delay_samples == 100, "integer-delay peak position");
    ACCEPT_CHECK(std::abs(exact.taps[100] - 1.0 / (4.0 * M_PI * d_exact)) <= 1e-12,
                 "integer-delay peak amplitude");
  }

  // Order-1 shoebox against hand-enumerated mirror images.
  {
    RoomSpec room;
    room.dims = {6.0, 7.0, 3.0};
    room.absorption = {0.3, 0.4, 0.5, 0.6, 0.2, 0.7};
    room.max_order = 1;
    const Point3 src = {2.0, 3.0, 1.2}, mic = {4.0, 5.0, 2.0};
    struct Mirror {
      Point3 pos;
      double beta;
    };
    const std::vector<Mirror> mirrors = {
        {{2.0, 3.0, 1.2}, 1.0},
        {{-2.0, 3.0, 1.2}, std::sqrt(0.7)},   // x = 0, absorption 0.3
        {{10.0, 3.0, 1.2}, std::sqrt(0.6)},   // x = Lx, absorption 0.4
        {{2.0, -3.0, 1.2}, std::sqrt(0.5)},   // y = 0, absorption 0.5
        {{2.0, 11.0, 1.2}, std::sqrt(0.4)},   // y = Ly, absorption 0.6
        {{2.0, 3.0, -1.2}, std::sqrt(0.8)},   // z = 0, absorption 0.2
        {{2.0, 3.0, 4.8}, std::sqrt(0.3)},    // z = Lz, absorption 0.7
    };
    std::vector<ImageTap> hand;
    for (const auto &m : mirrors) {
      const double d = Distance(m.pos, mic);
      hand.push_back({d / 343.0, m.beta / (4.0 * M_PI * d), 0});
    }
    auto order_key = [](const ImageTap &a, const ImageTap &b) {
      if (a.delay_s != b.delay_s) return a.delay_s < b.delay_s;
      return a.amplitude < b.amplitude;
    };
    std::sort(hand.begin(), hand.end(), order_key);
    auto images = SimulateRirImages(room, src, mic);
    std::sort(images.begin(), images.end(), order_key);
    ACCEPT_CHECK(images.size() == hand.size(),
                 "order-1 image count " << images.size());
    for (size_t i = 0; i < hand.size(); i++) {
      ACCEPT_CHECK(std::abs(images[i].delay_s - hand[i].delay_s) <= 1e-6,
                   "order-1 delay " << i);
      ACCEPT_CHECK(std::abs(images[i].amplitude - hand[i].amplitude) <= 1e-6,
                   "order-1 amplitude " << i);
    }
  }

  // Convolution against the direct evaluation.
  {
    Rng rng(1234);
    Waveform w;
    w.sample_rate = 16000;
    for (int i = 0; i < 2500; i++) w.samples.push_back(0.3 * rng.Gaussian());
    Rir h;
    h.sample_rate = 16000;
    for (int i = 0; i < 333; i++) h.taps.push_back(0.1 * rng.Gaussian());
    const Waveform y = ApplyRir(w, h);
    const auto direct = ffsv_oracle::OracleConvolve(w.samples, h.taps);
    ACCEPT_CHECK(y.samples.size() == direct.size(), "convolution length");
    for (size_t i = 0; i < direct.size(); i++)
      ACCEPT_CHECK(std::abs(y.samples[i] - direct[i]) <= 1e-9,
                   "convolution sample " << i << " off by "
                   << std::abs(y.samples[i] - direct[i]));
  }

  // SNR mixing across the sampled range.
  {
    Rng rng(777);
    Waveform speech;
    speech.sample_rate = 16000;
    speech.samples.assign(16000, 0.0);
    for (int t = 2000; t < 16000; t++)
      speech.samples[t] = 0.4 * std::sin(2.0 * M_PI * 440.0 * t / 16000.0);
    Waveform noise;
    noise.sample_rate = 16000;
    for (int t = 0; t < 12000; t++) noise.samples.push_back(0.2 * rng.Gaussian());
    for (double snr : {0.0, 10.0, 20.0}) {
      const Waveform mixed = MixNoise(speech, noise, snr);
      Waveform noise_part;
      noise_part.sample_rate = 16000;
      for (size_t i = 0; i < speech.samples.size(); i++)
        noise_part.samples.push_back(mixed.samples[i] - speech.samples[i]);
      const double measured = MeasureSnrDb(speech, noise_part);
      ACCEPT_CHECK(std::abs(measured - snr) <= 0.01,
                   "target " << snr << " dB, measured " << measured << " dB");
    }
  }
}

// ---------------------------------------------------------------------------
// 7. Feature kernels against direct DFT / DCT oracles.

void Criterion7() {
  Rng rng(31337);
  Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 400 + 99 * 160; i++)
    w.samples.push_back(0.5 * rng.Uniform(-1, 1));
  const FrameSet fs = FrameSignal(w);
  ACCEPT_CHECK(fs.NumFrames() == 100,
               "expected 100 random frames, got " << fs.NumFrames());

  const MelConfig mel_cfg;
  const FeatureMatrix lm = LogMel(fs, mel_cfg);
  const FeatureMatrix mf = Mfcc(fs, 30, mel_cfg);
  const auto bank = ffsv_oracle::OracleMelBank(mel_cfg.n_mels, mel_cfg.n_fft, 16000,
                                               mel_cfg.fmin_hz, mel_cfg.fmax_hz);
  for (int t = 0; t < fs.NumFrames(); t++) {
    const auto power = ffsv_oracle::OraclePowerSpectrum(fs.frames[t], mel_cfg.n_fft);
    std::vector<double> oracle_logmel(mel_cfg.n_mels);
    for (int i = 0; i < mel_cfg.n_mels; i++) {
      double e = 0.0;
      for (size_t k = 0; k < power.size(); k++) e += bank[i][k] * power[k];
      oracle_logmel[i] = std::log(std::max(e, mel_cfg.log_floor));
      const double got = lm.At(t, i);
      ACCEPT_CHECK(std::abs(got - oracle_logmel[i]) <=
                       1e-6 * std::abs(oracle_logmel[i]) + 1e-9,
                   "logmel frame " << t << " mel " << i << ": " << got << " vs "
                   << oracle_logmel[i]);
    }
    const auto oracle_mfcc = ffsv_oracle::OracleDct(oracle_logmel, 30);
    for (int k = 0; k < 30; k++)
      ACCEPT_CHECK(std::abs(mf.At(t, k) - oracle_mfcc[k]) <=
                       1e-6 * std::abs(oracle_mfcc[k]) + 1e-8,
                   "mfcc frame " << t << " coef " << k);
  }

  Waveform one_second;
  one_second.sample_rate = 16000;
  one_second.samples.assign(16000, 0.1);
  ACCEPT_CHECK(FrameSignal(one_second).NumFrames() == 98,
               "16000 samples gave " << FrameSignal(one_second).NumFrames()
               << " frames, want 98");
}

// ---------------------------------------------------------------------------
// 8. End-to-end desk-scale far-field experiment.

void Criterion8() {
  const int spk = 20, n_train = 10, n_enroll = 2, n_test = 4, n_channels = 4;
  SynthConfig sc;
  sc.n_speakers = spk;
  sc.utts_per_speaker = 16;
  sc.seed = 42;

  std::vector<std::vector<Waveform>> clean(spk);
  for (int s = 0; s < spk; s++)
    for (int u = 0; u < sc.utts_per_speaker; u++)
      clean[s].push_back(SynthUtterance(s, u, sc));
  const auto bank = SynthNoiseBank(sc);

  // Far-field test copies from the 4-microphone circular array.
  RoomSimConfig array_cfg;
  array_cfg.num_mics = n_channels;
  std::vector<std::vector<std::vector<Waveform>>> far(spk);
  for (int s = 0; s < spk; s++) {
    far[s].resize(n_test);
    for (int u = 0; u < n_test; u++) {
      Rng rng(DeriveSeed(42, "sim_" + std::to_string(s) + "_" + std::to_string(u)));
      far[s][u] =
          Augment(clean[s][n_train + n_enroll + u], bank, array_cfg, &rng).channels;
    }
  }

  // Training set: clean train cuts plus one simulated far-field copy each.
  LabeledDataset data;
  RoomSimConfig train_cfg;
  for (int s = 0; s < spk; s++)
    for (int u = 0; u < n_train; u++) {
      data.features.push_back(Featurize(clean[s][u]));
      data.labels.push_back(s);
      Rng rng(DeriveSeed(43, "aug_" + std::to_string(s) + "_" + std::to_string(u)));
      data.features.push_back(
          Featurize(Augment(clean[s][u], bank, train_cfg, &rng).channels[0]));
      data.labels.push_back(s);
    }

  NetworkConfig cfg = NetworkConfig::Resnet34(spk);
  cfg.width_num = 1;
  cfg.width_den = 8;
  cfg.block_counts = {1, 1, 1, 1};
  cfg.embedding_dim = 32;
  Rng init_rng(42);
  auto model = std::make_unique<EmbedNet>(cfg, &init_rng);

  TrainSchedule sched;
  sched.initial_lr = 0.1;
  sched.epochs = 40;
  sched.decay_every = 16;
  sched.decay_factor = 0.1;
  TrainOptions opts;
  opts.batch_size = 16;
  opts.crop_frames = 80;
  opts.seed = 42;
  const auto train_start = Clock::now();
  Train(model.get(), data, sched, opts);
  const double train_seconds = SecondsSince(train_start);
  ACCEPT_CHECK(train_seconds < 300.0,
               "training took " << train_seconds << " s, budget 300 s");

  // Embedding archive: speaker-level enrollments (equal-weight average of
  // the clean enrollment cuts) and per-channel far-field test embeddings.
  std::map<std::string, std::vector<double>> embeddings;
  for (int s = 0; s < spk; s++) {
    std::vector<std::vector<double>> enroll;
    for (int u = 0; u < n_enroll; u++)
      enroll.push_back(
          ExtractEmbedding(model.get(), Featurize(clean[s][n_train + u])));
    embeddings["spk" + std::to_string(s)] = AverageEmbeddings(enroll);
    for (int u = 0; u < n_test; u++)
      for (int c = 0; c < n_channels; c++)
        embeddings["t" + std::to_string(s) + "_" + std::to_string(u) + "_c" +
                   std::to_string(c)] =
            ExtractEmbedding(model.get(), Featurize(far[s][u][c]));
  }

  std::vector<Trial> trials;
  for (int es = 0; es < spk; es++)
    for (int ts = 0; ts < spk; ts++)
      for (int tu = 0; tu < n_test; tu++) {
        Trial t;
        t.enroll_id = "spk" + std::to_string(es);
        for (int c = 0; c < n_channels; c++)
          t.test_ids.push_back("t" + std::to_string(ts) + "_" + std::to_string(tu) +
                               "_c" + std::to_string(c));
        t.label = (es == ts) ? TrialLabel::kTarget : TrialLabel::kNontarget;
        trials.push_back(std::move(t));
      }

  const PairScorer cosine = [](const std::vector<double> &a,
                               const std::vector<double> &b) {
    return CosineScore(a, b);
  };
  auto eer_of = [&](const FusionMode &fusion) {
    const auto scores = ScoreTrials(trials, embeddings, cosine, fusion);
    return ComputeEer(JoinScoresWithLabels(trials, scores));
  };

  const double eer_multi = eer_of(FusionMode::Multi());
  double mean_single = 0.0;
  for (int c = 0; c < n_channels; c++) mean_single += eer_of(FusionMode::Single(c));
  mean_single /= n_channels;

  std::printf("        [e2e] train %.0f s, EER multi %.4f, mean single %.4f\n",
              train_seconds, eer_multi, mean_single);
  ACCEPT_CHECK(eer_multi < 0.15,
               "held-out multi-channel EER " << eer_multi << " >= 0.15");
  ACCEPT_CHECK(eer_multi <= mean_single,
               "multi EER " << eer_multi << " > mean single-channel EER "
               << mean_single);

  // Train the boosted VAD on far-field copies with clean energy-VAD labels;
  // the EDA criterion reuses it together with the embedding model.
  std::vector<FeatureMatrix> vad_feats;
  std::vector<FrameMask> vad_labels;
  int64_t vad_frames = 0;
  for (int s = 0; s < spk && vad_frames < 40000; s++)
    for (int u = 0; u < n_train && vad_frames < 40000; u += 2) {
      Rng rng(DeriveSeed(44, "gvad_" + std::to_string(s) + "_" + std::to_string(u)));
      const Waveform sim = Augment(clean[s][u], bank, train_cfg, &rng).channels[0];
      const FrameSet fs = FrameSignal(PreEmphasize(sim, 0.97));
      vad_feats.push_back(BuildVadFeatures(LogMel(fs), fs.log_energy_db));
      vad_labels.push_back(EnergyVad(FrameSignal(PreEmphasize(clean[s][u], 0.97))));
      vad_frames += vad_feats.back().num_frames;
    }
  GvadModel gvad = GvadTrain(vad_feats, vad_labels, GvadConfig());

  g_e2e = E2eArtifacts{};
  g_e2e->model = std::move(model);
  g_e2e->gvad = std::move(gvad);
  g_e2e->enroll_clean = clean[0][n_train];
  g_e2e->test_farfield = far[1][0][0];
}

// ---------------------------------------------------------------------------
// 9. Learning-rate schedules.

void Criterion9() {
  TrainSchedule sched;
  sched.initial_lr = 0.1;
  sched.epochs = 50;
  sched.decay_every = 20;
  sched.decay_factor = 0.1;
  ACCEPT_CHECK(std::abs(sched.LrAt(0) - 0.1) <= 1e-13, "lr(0) = " << sched.LrAt(0));
  ACCEPT_CHECK(std::abs(sched.LrAt(20) - 0.01) <= 1e-13, "lr(20) = " << sched.LrAt(20));
  ACCEPT_CHECK(std::abs(sched.LrAt(40) - 0.001) <= 1e-13, "lr(40) = " << sched.LrAt(40));

  // Fine-tuning holds the rate at 0.001 for every epoch.
  NetworkConfig cfg = NetworkConfig::Resnet34(2);
  cfg.width_num = 1;
  cfg.width_den = 16;
  cfg.block_counts = {1, 1, 1, 1};
  cfg.embedding_dim = 8;
  Rng rng(11);
  EmbedNet net(cfg, &rng);
  LabeledDataset data;
  Rng frng(12);
  for (int s = 0; s < 2; s++)
    for (int u = 0; u < 3; u++) {
      FeatureMatrix f;
      f.num_frames = 12;
      f.dim = 64;
      f.data.resize(12 * 64);
      for (auto &v : f.data) v = (s ? 1.0 : -1.0) + 0.3 * frng.Gaussian();
      data.features.push_back(std::move(f));
      data.labels.push_back(s);
    }
  TrainOptions opts;
  opts.batch_size = 6;
  opts.crop_frames = 8;
  const auto log = FineTune(&net, data, 0.001, 4, opts);
  ACCEPT_CHECK(log.size() == 4, "fine-tune epoch count");
  for (const auto &e : log)
    ACCEPT_CHECK(e.lr == 0.001, "fine-tune lr at epoch " << e.epoch << " = " << e.lr);
}

// ---------------------------------------------------------------------------
// 10. Enrollment data augmentation contract.

void Criterion10() {
  ACCEPT_CHECK(g_e2e.has_value(), "depends on criterion 8 artifacts");
  EmbedNet *model = g_e2e->model.get();
  const Waveform &enroll = g_e2e->enroll_clean;
  const Waveform &test = g_e2e->test_farfield;
  const Featurizer featurize = [](const Waveform &w) { return Featurize(w); };

  // Component check: the result equals the equal-weight average of the
  // original and simulated enrollment embeddings, recomputed independently.
  EdaConfig eda_cfg;
  Rng rng(505);
  const EdaResult r =
      EnrollWithEda(enroll, test, model, g_e2e->gvad, featurize, eda_cfg, &rng);
  ACCEPT_CHECK(!r.fallback, "expected non-speech in the far-field test utterance");
  const FrameSet fs = FrameSignal(test);
  const FrameMask mask =
      GvadPredict(g_e2e->gvad, BuildVadFeatures(LogMel(fs), fs.log_energy_db));
  const Waveform noise = ExtractNonSpeech(test, mask, fs.hop);
  const auto e_orig = ExtractEmbedding(model, featurize(enroll));
  const auto e_sim =
      ExtractEmbedding(model, featurize(MixNoise(enroll, noise, r.snr_db)));
  ACCEPT_CHECK(e_orig.size() == r.embedding.size(), "embedding size mismatch");
  for (size_t i = 0; i < e_orig.size(); i++)
    ACCEPT_CHECK(r.embedding[i] == 0.5 * (e_orig[i] + e_sim[i]),
                 "component mismatch at dim " << i);

  // Fallback: with no detected non-speech the original embedding is returned.
  GvadModel always_speech;
  always_speech.bias = 4.0;
  always_speech.input_dim = 65;
  Rng rng2(506);
  const EdaResult fb =
      EnrollWithEda(enroll, test, model, always_speech, featurize, eda_cfg, &rng2);
  ACCEPT_CHECK(fb.fallback, "fallback flag not set");
  ACCEPT_CHECK(fb.embedding == fb.e_orig, "fallback embedding differs from e_orig");
  ACCEPT_CHECK(fb.embedding == e_orig, "fallback embedding differs from recomputed");

  // Determinism.
  Rng ra(507), rb(507);
  const EdaResult a =
      EnrollWithEda(enroll, test, model, g_e2e->gvad, featurize, eda_cfg, &ra);
  const EdaResult b =
      EnrollWithEda(enroll, test, model, g_e2e->gvad, featurize, eda_cfg, &rb);
  ACCEPT_CHECK(a.embedding == b.embedding && a.snr_db == b.snr_db,
               "same seed gave different results");
}

// ---------------------------------------------------------------------------
// 11. Boosted-tree VAD training behavior.

void Criterion11() {
  // Loss non-increasing per round on an XOR problem.
  Rng rng(2200);
  std::vector<std::vector<double>> xor_rows;
  std::vector<bool> xor_bits;
  for (int i = 0; i < 800; i++) {
    const double x = (i & 1 ? 1.0 : -1.0) + 0.3 * rng.Gaussian();
    const double y = (i & 2 ? 1.0 : -1.0) + 0.3 * rng.Gaussian();
    xor_rows.push_back({x, y});
    xor_bits.push_back((x > 0.0) != (y > 0.0));
  }
  std::vector<FeatureMatrix> xor_feats = {MakeFrames(xor_rows)};
  FrameMask xor_mask;
  xor_mask.mask = xor_bits;
  std::vector<FrameMask> xor_labels = {xor_mask};

  auto accuracy = [](const GvadModel &m, const FeatureMatrix &f,
                     const FrameMask &labels) {
    const FrameMask pred = GvadPredict(m, f);
    int correct = 0;
    for (int t = 0; t < pred.NumFrames(); t++)
      if (pred.mask[t] == labels.mask[t]) correct++;
    return static_cast<double>(correct) / pred.NumFrames();
  };

  GvadConfig deep;
  deep.n_trees = 100;
  deep.max_depth = 2;
  std::vector<double> loss;
  const GvadModel xor_model = GvadTrain(xor_feats, xor_labels, deep, &loss);
  for (size_t i = 1; i < loss.size(); i++)
    ACCEPT_CHECK(loss[i] <= loss[i - 1] + 1e-12, "loss rose at round " << i);
  const double xor_acc = accuracy(xor_model, xor_feats[0], xor_labels[0]);
  ACCEPT_CHECK(xor_acc >= 0.95, "XOR accuracy with depth 2: " << xor_acc);

  // Negative control: one-split stumps cannot express XOR.
  GvadConfig stumps;
  stumps.n_trees = 100;
  stumps.max_depth = 1;
  const double stump_acc = accuracy(GvadTrain(xor_feats, xor_labels, stumps),
                                    xor_feats[0], xor_labels[0]);
  ACCEPT_CHECK(stump_acc <= 0.75, "XOR accuracy with stumps: " << stump_acc);

  // Linearly separable frames.
  Rng rng2(2300);
  std::vector<std::vector<double>> sep_rows;
  std::vector<bool> sep_bits;
  for (int i = 0; i < 600; i++) {
    const bool positive = i % 2 == 0;
    sep_rows.push_back(
        {(positive ? 2.0 : -2.0) + 0.5 * rng2.Gaussian(), rng2.Gaussian()});
    sep_bits.push_back(positive);
  }
  std::vector<FeatureMatrix> sep_feats = {MakeFrames(sep_rows)};
  FrameMask sep_mask;
  sep_mask.mask = sep_bits;
  std::vector<FrameMask> sep_labels = {sep_mask};
  GvadConfig sep_cfg;
  sep_cfg.n_trees = 50;
  sep_cfg.max_depth = 2;
  const double sep_acc = accuracy(GvadTrain(sep_feats, sep_labels, sep_cfg),
                                  sep_feats[0], sep_labels[0]);
  ACCEPT_CHECK(sep_acc >= 0.99, "separable accuracy: " << sep_acc);
}

struct CriterionEntry {
  int number;
  const char *description;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<CriterionEntry> criteria = {
      {1, "EER/minDCF match the exhaustive-threshold oracle on 1000 random sets",
       Criterion1},
      {2, "hand-checkable score sets (EER 1/3, minDCF, perfect separation)",
       Criterion2},
      {3, "backprop matches central finite differences below 1e-4", Criterion3},
      {4, "reference-scale network shapes (encodings 512/2048, embeddings 128/1024)",
       Criterion4},
      {5, "PLDA EM recovery, monotone log-likelihood, density-oracle ranking",
       Criterion5},
      {6, "room simulator: anechoic tap, order-1 images, convolution, SNR mixing",
       Criterion6},
      {7, "log-mel and MFCC match direct DFT/DCT oracles on 100 frames", Criterion7},
      {8, "end-to-end far-field experiment: EER < 15%, multi <= mean single",
       Criterion8},
      {9, "learning-rate schedules (0.1/20-epoch decay, constant 0.001 fine-tune)",
       Criterion9},
      {10, "enrollment augmentation: equal-weight average, fallback, determinism",
       Criterion10},
      {11, "boosted VAD: monotone loss, separable >= 99%, XOR depth control",
       Criterion11},
  };

  int failures = 0;
  for (const auto &criterion : criteria) {
    const auto start = Clock::now();
    try {
      criterion.run();
      std::printf("PASS  %2d  %s (%.1f s)\n", criterion.number,
                  criterion.description, SecondsSince(start));
    } catch (const std::exception &e) {
      std::printf("FAIL  %2d  %s: %s\n", criterion.number, criterion.description,
                  e.what());
      failures++;
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failures,
                criteria.size());
  }
  return failures;
}
