// ffsv/backend.hpp

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

#ifndef FFSV_BACKEND_HPP_
#define FFSV_BACKEND_HPP_

#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/embed_net.hpp"
#include "ffsv/linalg.hpp"
#include "ffsv/room_sim.hpp"
#include "ffsv/vad.hpp"
#include "ffsv/wav.hpp"

namespace ffsv {

struct EmbeddingEntry {
  std::string id;
  std::vector<double> vec;
};

inline double CosineScore(const std::vector<double> &a, const std::vector<double> &b) {
  FFSV_CHECK(a.size() == b.size(), "embedding dimensions differ: " << a.size()
             << " vs " << b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  FFSV_CHECK(na > 0.0 && nb > 0.0, "cosine score of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<double> AverageEmbeddings(
    const std::vector<std::vector<double>> &embs) {
  FFSV_CHECK(!embs.empty(), "cannot average an empty embedding list");
  std::vector<double> mean(embs[0].size(), 0.0);
  for (const auto &e : embs) {
    FFSV_CHECK(e.size() == mean.size(), "embedding dimensions differ");
    for (size_t i = 0; i < e.size(); i++) mean[i] += e[i];
  }
  for (auto &v : mean) v /= static_cast<double>(embs.size());
  return mean;
}

// --- PLDA ----------------------------------------------------------------
//
// Two-covariance model x = mu + y + e with y ~ N(0, B), e ~ N(0, W), fitted
// by EM on centered, whitened, length-normalized embeddings.  The model mean
// in that processed space is zero by construction (whitening centers the
// data exactly), so only the raw-space mean needs to be stored.

struct PldaModel {
  Vector mu;         // raw-space global mean
  Matrix whitener;   // rows scale the total-covariance eigenvectors
  Matrix between;    // B in the processed space
  Matrix within;     // W in the processed space
  bool within_floored = false;

  // Scoring cache: transform with T W T^T = I and T B T^T = diag(psi).
  Matrix diag_transform;
  Vector psi;

  int Dim() const { return static_cast<int>(mu.size()); }
};

namespace plda_internal {

constexpr double kWithinFloor = 1e-6;

// Clamps eigenvalues of a symmetric matrix at the floor; returns whether any
// clamping happened.
inline bool FloorEigenvalues(Matrix *m, double floor) {
  Vector evals;
  Matrix evecs;
  SymmetricEig(*m, &evals, &evecs);
  bool floored = false;
  for (auto &v : evals)
    if (v < floor) {
      v = floor;
      floored = true;
    }
  if (floored) {
    Matrix scaled = evecs;
    for (int i = 0; i < m->rows; i++)
      for (int j = 0; j < m->cols; j++) scaled(i, j) = evecs(i, j) * evals[j];
    *m = MatMul(scaled, Transpose(evecs));
    for (int i = 0; i < m->rows; i++)
      for (int j = 0; j < i; j++) {
        const double s = 0.5 * ((*m)(i, j) + (*m)(j, i));
        (*m)(i, j) = (*m)(j, i) = s;
      }
  }
  return floored;
}

struct SpeakerStats {
  Vector mean;      // x-bar
  Matrix scatter;   // sum_j (x_j - x-bar)(x_j - x-bar)^T
  int count = 0;
};

inline std::vector<SpeakerStats> CollectStats(
    const std::vector<std::vector<Vector>> &by_speaker, int dim) {
  std::vector<SpeakerStats> stats;
  for (const auto &group : by_speaker) {
    FFSV_CHECK(!group.empty(), "speaker with no embeddings");
    SpeakerStats s;
    s.count = static_cast<int>(group.size());
    s.mean.assign(dim, 0.0);
    for (const auto &x : group) {
      FFSV_CHECK(static_cast<int>(x.size()) == dim, "inconsistent embedding dim");
      for (int d = 0; d < dim; d++) s.mean[d] += x[d];
    }
    for (auto &v : s.mean) v /= s.count;
    s.scatter = Matrix(dim, dim);
    for (const auto &x : group)
      for (int i = 0; i < dim; i++)
        for (int j = 0; j < dim; j++)
          s.scatter(i, j) += (x[i] - s.mean[i]) * (x[j] - s.mean[j]);
    stats.push_back(std::move(s));
  }
  return stats;
}

}  // namespace plda_internal

struct TwoCovEmResult {
  Matrix between;
  Matrix within;
  std::vector<double> loglik;  // evaluated before each EM update
  bool within_floored = false;
};

// EM for the two-covariance model on centered data grouped by speaker.
// Starts from the moment estimates; each iteration records the total
// marginal log-likelihood of the current parameters before updating them,
// so the sequence is non-decreasing.
inline TwoCovEmResult TwoCovarianceEm(
    const std::vector<std::vector<Vector>> &by_speaker, int n_iters) {
  FFSV_CHECK(by_speaker.size() >= 2, "need at least two speakers for PLDA");
  const int dim = static_cast<int>(by_speaker[0][0].size());
  auto stats = plda_internal::CollectStats(by_speaker, dim);

  int total = 0;
  for (const auto &s : stats) total += s.count;
  FFSV_CHECK(total >= dim, "fewer samples (" << total << ") than dimensions ("
             << dim << ")");

  TwoCovEmResult r;
  // Moment initialization.
  r.within = Matrix(dim, dim);
  r.between = Matrix(dim, dim);
  for (const auto &s : stats) {
    for (int i = 0; i < dim; i++)
      for (int j = 0; j < dim; j++) {
        r.within(i, j) += s.scatter(i, j);
        r.between(i, j) += s.mean[i] * s.mean[j];
      }
  }
  for (auto &v : r.within.data) v /= total;
  for (auto &v : r.between.data) v /= static_cast<double>(stats.size());
  r.within_floored |=
      plda_internal::FloorEigenvalues(&r.within, plda_internal::kWithinFloor);

  const double log2pi = std::log(2.0 * M_PI);
  for (int iter = 0; iter < n_iters; iter++) {
    const Matrix chol_w = CholeskyFactor(r.within);
    const Matrix w_inv = SpdInverse(r.within);
    const double logdet_w = LogDetFromCholesky(chol_w);

    // Factorizations of (W + n B) and (B + W/n), cached per group size.
    std::map<int, Matrix> chol_wnb;
    std::map<int, Matrix> bwn_inv;
    for (const auto &s : stats) {
      if (chol_wnb.count(s.count)) continue;
      Matrix wnb = r.within;
      Matrix bwn = r.between;
      for (int i = 0; i < dim; i++)
        for (int j = 0; j < dim; j++) {
          wnb(i, j) += s.count * r.between(i, j);
          bwn(i, j) += r.within(i, j) / s.count;
        }
      chol_wnb.emplace(s.count, CholeskyFactor(wnb));
      bwn_inv.emplace(s.count, SpdInverse(bwn));
    }

    // Marginal log-likelihood of the current parameters.
    double ll = 0.0;
    for (const auto &s : stats) {
      const Matrix &cw = chol_wnb.at(s.count);
      double quad_w = 0.0;
      for (int i = 0; i < dim; i++)
        for (int j = 0; j < dim; j++) quad_w += w_inv(i, j) * s.scatter(i, j);
      const Vector solved = CholeskySolve(cw, s.mean);
      const double quad_m = s.count * Dot(s.mean, solved);
      ll += -0.5 * (s.count * dim * log2pi + (s.count - 1) * logdet_w +
                    LogDetFromCholesky(cw) + quad_w + quad_m);
    }
    r.loglik.push_back(ll);

    // E then M.
    Matrix new_b(dim, dim), new_w(dim, dim);
    for (const auto &s : stats) {
      const Matrix &bwn = bwn_inv.at(s.count);
      // m = B (B + W/n)^{-1} x-bar;  C = B - B (B + W/n)^{-1} B
      const Matrix bp = MatMul(r.between, bwn);
      const Vector m = MatVec(bp, s.mean);
      const Matrix c_sub = MatMul(bp, r.between);
      for (int i = 0; i < dim; i++)
        for (int j = 0; j < dim; j++) {
          const double c_ij = r.between(i, j) - c_sub(i, j);
          new_b(i, j) += m[i] * m[j] + c_ij;
          new_w(i, j) += s.scatter(i, j) +
                         s.count * ((s.mean[i] - m[i]) * (s.mean[j] - m[j]) + c_ij);
        }
    }
    for (auto &v : new_b.data) v /= static_cast<double>(stats.size());
    for (auto &v : new_w.data) v /= total;
    // Symmetrize to kill accumulation drift.
    for (int i = 0; i < dim; i++)
      for (int j = 0; j < i; j++) {
        new_b(i, j) = new_b(j, i) = 0.5 * (new_b(i, j) + new_b(j, i));
        new_w(i, j) = new_w(j, i) = 0.5 * (new_w(i, j) + new_w(j, i));
      }
    r.between = new_b;
    r.within = new_w;
    r.within_floored |=
        plda_internal::FloorEigenvalues(&r.within, plda_internal::kWithinFloor);
  }
  return r;
}

// Centered, whitened, length-normalized view of a raw embedding.
inline Vector PldaPreprocess(const PldaModel &m, const std::vector<double> &x) {
  FFSV_CHECK(static_cast<int>(x.size()) == m.Dim(),
             "embedding dim " << x.size() << " does not match PLDA dim " << m.Dim());
  Vector centered(x.size());
  for (size_t i = 0; i < x.size(); i++) centered[i] = x[i] - m.mu[i];
  Vector y = MatVec(m.whitener, centered);
  const double norm = std::sqrt(Dot(y, y));
  if (norm > 1e-30) {
    const double scale = std::sqrt(static_cast<double>(y.size())) / norm;
    for (auto &v : y) v *= scale;
  }
  return y;
}

// Builds the simultaneous diagonalizer used for scoring; called after
// training and after loading from file.
inline void FinalizePlda(PldaModel *m) {
  const Matrix chol_w = CholeskyFactor(m->within);
  const Matrix l_inv = LowerTriangularInverse(chol_w);
  const Matrix mid = MatMul(MatMul(l_inv, m->between), Transpose(l_inv));
  Vector evals;
  Matrix evecs;
  SymmetricEig(mid, &evals, &evecs);
  m->psi.resize(evals.size());
  for (size_t i = 0; i < evals.size(); i++) m->psi[i] = std::max(0.0, evals[i]);
  m->diag_transform = MatMul(Transpose(evecs), l_inv);
}

// Trains the full pipeline: center, whiten (total-covariance eigenvectors),
// length-normalize, then EM for B and W.  loglik, when non-null, receives
// the per-iteration log-likelihoods.
inline PldaModel PldaTrain(const std::vector<std::vector<double>> &embeddings,
                           const std::vector<int> &speaker_ids, int n_iters = 20,
                           std::vector<double> *loglik = nullptr) {
  FFSV_CHECK(!embeddings.empty(), "empty PLDA training set");
  FFSV_CHECK(embeddings.size() == speaker_ids.size(), "labels/embeddings mismatch");
  const int dim = static_cast<int>(embeddings[0].size());
  FFSV_CHECK(embeddings.size() >= static_cast<size_t>(dim),
             "PLDA needs at least D=" << dim << " embeddings, got " << embeddings.size());

  PldaModel model;
  model.mu.assign(dim, 0.0);
  for (const auto &x : embeddings) {
    FFSV_CHECK(static_cast<int>(x.size()) == dim, "inconsistent embedding dim");
    for (int d = 0; d < dim; d++) model.mu[d] += x[d];
  }
  for (auto &v : model.mu) v /= static_cast<double>(embeddings.size());

  Matrix total_cov(dim, dim);
  for (const auto &x : embeddings)
    for (int i = 0; i < dim; i++)
      for (int j = 0; j < dim; j++)
        total_cov(i, j) += (x[i] - model.mu[i]) * (x[j] - model.mu[j]);
  for (auto &v : total_cov.data) v /= static_cast<double>(embeddings.size());

  Vector evals;
  Matrix evecs;
  SymmetricEig(total_cov, &evals, &evecs);
  const double max_eval = evals.back();
  FFSV_CHECK(max_eval > 0.0, "total covariance is zero");
  for (int i = 0; i < dim; i++)
    FFSV_CHECK(evals[i] > 1e-10 * max_eval,
               "singular total covariance: eigenvalue " << i << " is " << evals[i]
               << " against maximum " << max_eval
               << "; embeddings do not span the space");
  model.whitener = Matrix(dim, dim);
  for (int i = 0; i < dim; i++)
    for (int j = 0; j < dim; j++)
      model.whitener(i, j) = evecs(j, i) / std::sqrt(evals[i]);

  // Group processed embeddings by speaker.
  std::map<int, std::vector<Vector>> groups;
  for (size_t i = 0; i < embeddings.size(); i++)
    groups[speaker_ids[i]].push_back(PldaPreprocess(model, embeddings[i]));
  FFSV_CHECK(groups.size() >= 2, "PLDA needs at least two speakers, got "
             << groups.size());
  std::vector<std::vector<Vector>> by_speaker;
  for (auto &[id, g] : groups) by_speaker.push_back(std::move(g));

  TwoCovEmResult em = TwoCovarianceEm(by_speaker, n_iters);
  model.between = em.between;
  model.within = em.within;
  model.within_floored = em.within_floored;
  if (model.within_floored)
    std::cerr << "ffsv: PLDA within-speaker covariance hit the eigenvalue floor "
              << "(degenerate within-speaker scatter)\n";
  if (loglik) *loglik = em.loglik;
  FinalizePlda(&model);
  return model;
}

// Log-likelihood ratio log p(e,t | same) - log p(e,t | different) in the
// diagonalized space (W = I, B = diag(psi)), per-dimension closed form.
inline double PldaScore(const PldaModel &m, const std::vector<double> &enroll,
                        const std::vector<double> &test) {
  const Vector u = MatVec(m.diag_transform, PldaPreprocess(m, enroll));
  const Vector v = MatVec(m.diag_transform, PldaPreprocess(m, test));
  double llr = 0.0;
  for (size_t d = 0; d < u.size(); d++) {
    const double psi = m.psi[d];
    const double uu = u[d] * u[d], vv = v[d] * v[d], uv = u[d] * v[d];
    const double det_same = 1.0 + 2.0 * psi;
    const double quad_same = ((1.0 + psi) * (uu + vv) - 2.0 * psi * uv) / det_same;
    const double quad_diff = (uu + vv) / (1.0 + psi);
    llr += -0.5 * (std::log(det_same) + quad_same) +
           0.5 * (2.0 * std::log(1.0 + psi) + quad_diff);
  }
  return llr;
}

// --- PLDA model file -----------------------------------------------------
//
// Layout: magic "FFSVPLDA", version u32, D u32, then f64 little-endian:
// mu (D), B (DxD), W (DxD), whitener (DxD), all row-major.

inline void WritePldaModel(const std::string &path, const PldaModel &m) {
  std::ofstream os(path, std::ios::binary);
  FFSV_CHECK(os.is_open(), "cannot create PLDA model file " << path);
  os.write("FFSVPLDA", 8);
  WriteRaw<uint32_t>(os, 1);
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(m.Dim()));
  for (double v : m.mu) WriteRaw<double>(os, v);
  for (double v : m.between.data) WriteRaw<double>(os, v);
  for (double v : m.within.data) WriteRaw<double>(os, v);
  for (double v : m.whitener.data) WriteRaw<double>(os, v);
  FFSV_CHECK(os.good(), "write failed for " << path);
}

inline PldaModel ReadPldaModel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open PLDA model file " << path);
  ExpectMagic(is, "FFSVPLDA");
  const uint32_t version = ReadRaw<uint32_t>(is);
  FFSV_CHECK(version == 1, "unsupported PLDA model version " << version);
  const int dim = static_cast<int>(ReadRaw<uint32_t>(is));
  PldaModel m;
  m.mu.resize(dim);
  m.between = Matrix(dim, dim);
  m.within = Matrix(dim, dim);
  m.whitener = Matrix(dim, dim);
  for (auto &v : m.mu) v = ReadRaw<double>(is);
  for (auto &v : m.between.data) v = ReadRaw<double>(is);
  for (auto &v : m.within.data) v = ReadRaw<double>(is);
  for (auto &v : m.whitener.data) v = ReadRaw<double>(is);
  FinalizePlda(&m);
  return m;
}

// --- embedding archive ---------------------------------------------------
//
// Layout: magic "FFSVEMBD", version u32, dim u32, count u32, then records
// of (id string, dim f32 little-endian).

inline void WriteEmbeddingArchive(const std::string &path,
                                  const std::vector<EmbeddingEntry> &entries) {
  FFSV_CHECK(!entries.empty(), "refusing to write an empty embedding archive");
  std::ofstream os(path, std::ios::binary);
  FFSV_CHECK(os.is_open(), "cannot create embedding archive " << path);
  os.write("FFSVEMBD", 8);
  WriteRaw<uint32_t>(os, 1);
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(entries[0].vec.size()));
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(entries.size()));
  for (const auto &e : entries) {
    FFSV_CHECK(e.vec.size() == entries[0].vec.size(), "inconsistent embedding dim");
    WriteString(os, e.id);
    for (double v : e.vec) WriteRaw<float>(os, static_cast<float>(v));
  }
  FFSV_CHECK(os.good(), "write failed for " << path);
}

inline std::vector<EmbeddingEntry> ReadEmbeddingArchive(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open embedding archive " << path);
  ExpectMagic(is, "FFSVEMBD");
  const uint32_t version = ReadRaw<uint32_t>(is);
  FFSV_CHECK(version == 1, "unsupported embedding archive version " << version);
  const uint32_t dim = ReadRaw<uint32_t>(is);
  const uint32_t count = ReadRaw<uint32_t>(is);
  std::vector<EmbeddingEntry> entries(count);
  for (auto &e : entries) {
    e.id = ReadString(is);
    e.vec.resize(dim);
    for (auto &v : e.vec) v = ReadRaw<float>(is);
  }
  return entries;
}

// --- enrollment data augmentation -----------------------------------------

struct EdaConfig {
  std::array<double, 2> snr_range_db = {5.0, 15.0};
  double min_noise_seconds = 0.2;
};

struct EdaResult {
  std::vector<double> embedding;        // final enrollment embedding
  std::vector<double> e_orig, e_sim;    // components; e_sim empty on fallback
  bool fallback = false;
  double snr_db = 0.0;
};

using Featurizer = std::function<FeatureMatrix(const Waveform &)>;

// Simulates a test-matched enrollment: GVAD finds the test utterance's
// non-speech parts, which are mixed into the enrollment recording; the final
// embedding equally weights the original and simulated enrollments.  Falls
// back to the original embedding when the extracted noise is missing or
// shorter than min_noise_seconds.
inline EdaResult EnrollWithEda(const Waveform &enroll_w, const Waveform &test_w,
                               EmbedNet *model, const GvadModel &vad_model,
                               const Featurizer &featurize,
                               const EdaConfig &cfg, Rng *rng) {
  FrameSet test_frames = FrameSignal(test_w);
  FeatureMatrix test_logmel = LogMel(test_frames);
  FeatureMatrix vad_feats = BuildVadFeatures(test_logmel, test_frames.log_energy_db);
  FrameMask speech = GvadPredict(vad_model, vad_feats);
  Waveform noise = ExtractNonSpeech(test_w, speech, test_frames.hop);

  EdaResult r;
  r.e_orig = ExtractEmbedding(model, featurize(enroll_w));
  const double min_samples = cfg.min_noise_seconds * test_w.sample_rate;
  if (static_cast<double>(noise.samples.size()) < min_samples) {
    r.embedding = r.e_orig;
    r.fallback = true;
    return r;
  }

  r.snr_db = rng->Uniform(cfg.snr_range_db[0], cfg.snr_range_db[1]);
  Waveform simulated = MixNoise(enroll_w, noise, r.snr_db);
  r.e_sim = ExtractEmbedding(model, featurize(simulated));
  r.embedding.resize(r.e_orig.size());
  for (size_t i = 0; i < r.embedding.size(); i++)
    r.embedding[i] = 0.5 * (r.e_orig[i] + r.e_sim[i]);
  return r;
}

}  // namespace ffsv

#endif  // FFSV_BACKEND_HPP_
