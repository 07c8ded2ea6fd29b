// ffsv/vad.hpp

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

#ifndef FFSV_VAD_HPP_
#define FFSV_VAD_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "ffsv/common.hpp"
#include "ffsv/features.hpp"

namespace ffsv {

// One boolean per feature frame; true = speech.
struct FrameMask {
  std::vector<bool> mask;
  double frame_shift = 0.01;

  int NumFrames() const { return static_cast<int>(mask.size()); }
  int CountSpeech() const {
    return static_cast<int>(std::count(mask.begin(), mask.end(), true));
  }
};

struct EnergyVadConfig {
  double relative_db = 30.0;   // speech iff above max - relative_db
  double floor_db = -80.0;     // and above this absolute power floor
  int median_window = 5;
};

namespace vad_internal {

// Majority vote in a centered window; edges are handled by replicating the
// boundary values so every vote covers exactly `window` frames.
inline std::vector<bool> MedianFilter(const std::vector<bool> &in, int window) {
  if (window <= 1 || in.empty()) return in;
  const int n = static_cast<int>(in.size());
  const int half = window / 2;
  std::vector<bool> out(in.size());
  for (int t = 0; t < n; t++) {
    int votes = 0;
    for (int j = -half; j <= half; j++) {
      int k = std::clamp(t + j, 0, n - 1);
      votes += in[k] ? 1 : 0;
    }
    out[t] = 2 * votes > window;
  }
  return out;
}

}  // namespace vad_internal

// Frame t is speech iff its log energy is within relative_db of the
// per-utterance maximum and above the absolute floor, followed by median
// smoothing.  Scaling the waveform shifts max and frame values equally, so
// the relative rule is scale-invariant.
inline FrameMask EnergyVad(const std::vector<double> &log_energy_db,
                           double frame_shift,
                           const EnergyVadConfig &cfg = EnergyVadConfig()) {
  FFSV_CHECK(!log_energy_db.empty(), "energy VAD needs at least one frame");
  const double max_db = *std::max_element(log_energy_db.begin(), log_energy_db.end());
  std::vector<bool> raw(log_energy_db.size());
  for (size_t t = 0; t < log_energy_db.size(); t++)
    raw[t] = log_energy_db[t] > max_db - cfg.relative_db &&
             log_energy_db[t] > cfg.floor_db;
  FrameMask out;
  out.mask = vad_internal::MedianFilter(raw, cfg.median_window);
  out.frame_shift = frame_shift;
  return out;
}

inline FrameMask EnergyVad(const FrameSet &fs,
                           const EnergyVadConfig &cfg = EnergyVadConfig()) {
  return EnergyVad(fs.log_energy_db, fs.FrameShift(), cfg);
}

// Concatenates the hop-sized sample chunks of the frames marked non-speech.
// Chunk t covers samples [t*hop, (t+1)*hop), so speech and non-speech parts
// partition the hop-aligned span exactly.  An empty result is valid.
inline Waveform ExtractNonSpeech(const Waveform &w, const FrameMask &mask, int hop) {
  FFSV_CHECK(hop > 0, "hop must be positive");
  FFSV_CHECK(static_cast<size_t>(mask.NumFrames()) * hop <= w.samples.size() + hop,
             "mask does not align with the waveform framing");
  Waveform out;
  out.sample_rate = w.sample_rate;
  for (int t = 0; t < mask.NumFrames(); t++) {
    if (mask.mask[t]) continue;
    const size_t start = static_cast<size_t>(t) * hop;
    const size_t stop = std::min(start + hop, w.samples.size());
    out.samples.insert(out.samples.end(), w.samples.begin() + start,
                       w.samples.begin() + stop);
  }
  return out;
}

// --- gradient-boosted VAD ----------------------------------------------------

struct GvadConfig {
  int n_trees = 100;
  int max_depth = 3;
  double shrinkage = 0.1;
  double min_gain = 1e-12;
};

struct GvadNode {
  bool leaf = true;
  uint32_t feature = 0;
  double threshold = 0.0;
  double value = 0.0;
  int32_t left = -1;   // x[feature] <= threshold
  int32_t right = -1;  // x[feature] >  threshold
};

struct GvadTree {
  std::vector<GvadNode> nodes;

  double Eval(const double *x) const {
    int32_t i = 0;
    while (!nodes[i].leaf)
      i = (x[nodes[i].feature] > nodes[i].threshold) ? nodes[i].right : nodes[i].left;
    return nodes[i].value;
  }

  int Depth() const { return DepthFrom(0); }

 private:
  int DepthFrom(int32_t i) const {
    if (nodes[i].leaf) return 0;
    return 1 + std::max(DepthFrom(nodes[i].left), DepthFrom(nodes[i].right));
  }
};

struct GvadModel {
  double shrinkage = 0.1;
  double bias = 0.0;
  int input_dim = -1;  // -1 when loaded from file; then only a lower bound is known
  std::vector<GvadTree> trees;

  double Score(const double *x) const {
    double s = 0.0;
    for (const auto &t : trees) s += t.Eval(x);
    return bias + shrinkage * s;
  }

  int MinInputDim() const {
    uint32_t d = 0;
    for (const auto &t : trees)
      for (const auto &n : t.nodes)
        if (!n.leaf) d = std::max(d, n.feature + 1);
    return static_cast<int>(d);
  }
};

namespace vad_internal {

// Frame table for boosting: n rows by dim columns plus a 0/1 label per row.
struct FrameTable {
  std::vector<double> x;  // row-major
  std::vector<uint8_t> y;
  int dim = 0;
  size_t n = 0;

  const double *Row(size_t i) const { return x.data() + i * dim; }
};

struct SplitChoice {
  bool found = false;
  uint32_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Grows one least-squares regression tree on the residuals, level by level.
// Split search walks pre-sorted feature columns once per level, keeping
// running sums per active node, so a level costs O(n * dim).
inline GvadTree FitTree(const FrameTable &data,
                        const std::vector<std::vector<uint32_t>> &sorted_idx,
                        const std::vector<double> &residual,
                        const std::vector<double> &hessian,
                        const GvadConfig &cfg) {
  GvadTree tree;
  tree.nodes.push_back(GvadNode{});
  std::vector<int32_t> node_of(data.n, 0);

  struct NodeStats {
    double sum = 0.0;
    size_t count = 0;
  };

  std::vector<int32_t> active = {0};
  for (int depth = 0; depth < cfg.max_depth && !active.empty(); depth++) {
    const int32_t max_node = *std::max_element(active.begin(), active.end());
    std::vector<NodeStats> total(max_node + 1);
    std::vector<bool> is_active(max_node + 1, false);
    for (int32_t a : active) is_active[a] = true;
    for (size_t i = 0; i < data.n; i++) {
      int32_t nd = node_of[i];
      if (nd <= max_node && is_active[nd]) {
        total[nd].sum += residual[i];
        total[nd].count++;
      }
    }

    std::vector<SplitChoice> best(max_node + 1);
    std::vector<NodeStats> left(max_node + 1);
    std::vector<double> last_value(max_node + 1);
    std::vector<bool> has_last(max_node + 1);
    for (int f = 0; f < data.dim; f++) {
      std::fill(left.begin(), left.end(), NodeStats{});
      std::fill(has_last.begin(), has_last.end(), false);
      for (uint32_t i : sorted_idx[f]) {
        const int32_t nd = node_of[i];
        if (nd > max_node || !is_active[nd]) continue;
        const double v = data.Row(i)[f];
        if (has_last[nd] && v > last_value[nd] && left[nd].count > 0 &&
            left[nd].count < total[nd].count) {
          const double rsum = total[nd].sum - left[nd].sum;
          const size_t rcnt = total[nd].count - left[nd].count;
          const double gain = left[nd].sum * left[nd].sum / left[nd].count +
                              rsum * rsum / rcnt -
                              total[nd].sum * total[nd].sum / total[nd].count;
          if (gain > best[nd].gain + cfg.min_gain) {
            best[nd].found = true;
            best[nd].feature = static_cast<uint32_t>(f);
            best[nd].threshold = 0.5 * (last_value[nd] + v);
            best[nd].gain = gain;
          }
        }
        left[nd].sum += residual[i];
        left[nd].count++;
        last_value[nd] = v;
        has_last[nd] = true;
      }
    }

    std::vector<int32_t> next_active;
    for (int32_t nd : active) {
      if (!best[nd].found) continue;
      const auto left_idx = static_cast<int32_t>(tree.nodes.size());
      tree.nodes.push_back(GvadNode{});
      const auto right_idx = static_cast<int32_t>(tree.nodes.size());
      tree.nodes.push_back(GvadNode{});
      GvadNode &node = tree.nodes[nd];  // taken after any reallocation
      node.leaf = false;
      node.feature = best[nd].feature;
      node.threshold = best[nd].threshold;
      node.left = left_idx;
      node.right = right_idx;
      next_active.push_back(left_idx);
      next_active.push_back(right_idx);
    }
    if (next_active.empty()) break;
    for (size_t i = 0; i < data.n; i++) {
      const GvadNode &node = tree.nodes[node_of[i]];
      if (node.leaf) continue;
      node_of[i] = (data.Row(i)[node.feature] > node.threshold) ? node.right : node.left;
    }
    active = std::move(next_active);
  }

  // Newton leaf values: sum of residuals over sum of hessians.
  std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
  for (size_t i = 0; i < data.n; i++) {
    num[node_of[i]] += residual[i];
    den[node_of[i]] += hessian[i];
  }
  for (size_t k = 0; k < tree.nodes.size(); k++) {
    if (!tree.nodes[k].leaf) continue;
    double v = num[k] / (den[k] + 1e-9);
    tree.nodes[k].value = std::clamp(v, -20.0, 20.0);
  }
  return tree;
}

inline double MeanLogisticLoss(const std::vector<double> &score,
                               const std::vector<uint8_t> &y) {
  double loss = 0.0;
  for (size_t i = 0; i < score.size(); i++) {
    const double f = score[i];
    const double softplus = (f > 0.0) ? f + std::log1p(std::exp(-f))
                                      : std::log1p(std::exp(f));
    loss += softplus - (y[i] ? f : 0.0);
  }
  return loss / static_cast<double>(score.size());
}

}  // namespace vad_internal

// Gradient boosting on logistic loss.  The bias is the log-odds of the
// positive prior; each round fits a depth-limited regression tree to the
// negative gradients with Newton leaf values.  Single-class labels give a
// bias-only model with zero trees.  round_loss, when non-null, receives the
// mean training loss after every boosting round.
inline GvadModel GvadTrain(const std::vector<FeatureMatrix> &features,
                           const std::vector<FrameMask> &labels,
                           const GvadConfig &cfg = GvadConfig(),
                           std::vector<double> *round_loss = nullptr) {
  FFSV_CHECK(!features.empty(), "empty GVAD training set");
  FFSV_CHECK(features.size() == labels.size(),
             "features/labels count mismatch: " << features.size() << " vs "
             << labels.size());

  vad_internal::FrameTable data;
  data.dim = features[0].dim;
  for (size_t u = 0; u < features.size(); u++) {
    FFSV_CHECK(features[u].dim == data.dim, "inconsistent feature dims in training set");
    FFSV_CHECK(features[u].num_frames == labels[u].NumFrames(),
               "utterance " << u << ": " << features[u].num_frames
               << " frames vs " << labels[u].NumFrames() << " labels");
    for (int t = 0; t < features[u].num_frames; t++) {
      data.x.insert(data.x.end(), features[u].Row(t), features[u].Row(t) + data.dim);
      data.y.push_back(labels[u].mask[t] ? 1 : 0);
    }
  }
  data.n = data.y.size();
  FFSV_CHECK(data.n > 0, "GVAD training set has no frames");

  const double pos = std::accumulate(data.y.begin(), data.y.end(), 0.0);
  const double prior = std::clamp(pos / static_cast<double>(data.n), 1e-6, 1.0 - 1e-6);

  GvadModel model;
  model.shrinkage = cfg.shrinkage;
  model.bias = std::log(prior / (1.0 - prior));
  model.input_dim = data.dim;
  if (pos == 0.0 || pos == static_cast<double>(data.n)) return model;  // degenerate

  std::vector<std::vector<uint32_t>> sorted_idx(data.dim);
  for (int f = 0; f < data.dim; f++) {
    sorted_idx[f].resize(data.n);
    std::iota(sorted_idx[f].begin(), sorted_idx[f].end(), 0u);
    std::stable_sort(sorted_idx[f].begin(), sorted_idx[f].end(),
                     [&](uint32_t a, uint32_t b) { return data.Row(a)[f] < data.Row(b)[f]; });
  }

  std::vector<double> score(data.n, model.bias);
  std::vector<double> residual(data.n), hessian(data.n);
  for (int round = 0; round < cfg.n_trees; round++) {
    for (size_t i = 0; i < data.n; i++) {
      const double p = 1.0 / (1.0 + std::exp(-score[i]));
      residual[i] = static_cast<double>(data.y[i]) - p;
      hessian[i] = p * (1.0 - p);
    }
    GvadTree tree = vad_internal::FitTree(data, sorted_idx, residual, hessian, cfg);
    for (size_t i = 0; i < data.n; i++)
      score[i] += cfg.shrinkage * tree.Eval(data.Row(i));
    model.trees.push_back(std::move(tree));
    if (round_loss)
      round_loss->push_back(vad_internal::MeanLogisticLoss(score, data.y));
  }
  return model;
}

// Frame is speech iff sigmoid(score) > 0.5, i.e. score strictly positive;
// ties resolve to non-speech.
inline FrameMask GvadPredict(const GvadModel &m, const FeatureMatrix &f) {
  const int need = (m.input_dim >= 0) ? m.input_dim : m.MinInputDim();
  FFSV_CHECK((m.input_dim >= 0) ? (f.dim == need) : (f.dim >= need),
             "GVAD dimension mismatch: features have " << f.dim
             << ", model needs " << need);
  FrameMask out;
  out.frame_shift = f.frame_shift;
  out.mask.resize(f.num_frames);
  for (int t = 0; t < f.num_frames; t++) out.mask[t] = m.Score(f.Row(t)) > 0.0;
  return out;
}

// Log-mel frames plus the frame log-energy, the GVAD input representation.
inline FeatureMatrix BuildVadFeatures(const FeatureMatrix &logmel,
                                      const std::vector<double> &log_energy_db) {
  FFSV_CHECK(static_cast<size_t>(logmel.num_frames) == log_energy_db.size(),
             "log-mel / energy frame count mismatch");
  FeatureMatrix out;
  out.num_frames = logmel.num_frames;
  out.dim = logmel.dim + 1;
  out.frame_shift = logmel.frame_shift;
  out.data.resize(static_cast<size_t>(out.num_frames) * out.dim);
  for (int t = 0; t < out.num_frames; t++) {
    std::copy(logmel.Row(t), logmel.Row(t) + logmel.dim, out.Row(t));
    out.At(t, logmel.dim) = log_energy_db[t];
  }
  return out;
}

// --- model file --------------------------------------------------------------
//
// Layout: magic "FFSVGVAD", version u32, shrinkage f64, bias f64, tree count
// u32, then each tree in preorder: node flag u8 (0 leaf, 1 internal);
// internal nodes carry split feature u32 + threshold f64, leaves the value
// f64.

namespace vad_internal {

inline void WriteNode(std::ostream &os, const GvadTree &t, int32_t i) {
  const GvadNode &n = t.nodes[i];
  WriteRaw<uint8_t>(os, n.leaf ? 0 : 1);
  if (n.leaf) {
    WriteRaw<double>(os, n.value);
  } else {
    WriteRaw<uint32_t>(os, n.feature);
    WriteRaw<double>(os, n.threshold);
    WriteNode(os, t, n.left);
    WriteNode(os, t, n.right);
  }
}

inline int32_t ReadNode(std::istream &is, GvadTree *t, int depth) {
  FFSV_CHECK(depth < 64, "GVAD tree implausibly deep");
  const int32_t idx = static_cast<int32_t>(t->nodes.size());
  t->nodes.push_back(GvadNode{});
  const uint8_t flag = ReadRaw<uint8_t>(is);
  if (flag == 0) {
    t->nodes[idx].value = ReadRaw<double>(is);
  } else {
    FFSV_CHECK(flag == 1, "corrupt GVAD model: bad node flag " << int(flag));
    t->nodes[idx].leaf = false;
    t->nodes[idx].feature = ReadRaw<uint32_t>(is);
    t->nodes[idx].threshold = ReadRaw<double>(is);
    t->nodes[idx].left = ReadNode(is, t, depth + 1);
    t->nodes[idx].right = ReadNode(is, t, depth + 1);
  }
  return idx;
}

}  // namespace vad_internal

inline void WriteGvadModel(const std::string &path, const GvadModel &m) {
  std::ofstream os(path, std::ios::binary);
  FFSV_CHECK(os.is_open(), "cannot create GVAD model file " << path);
  os.write("FFSVGVAD", 8);
  WriteRaw<uint32_t>(os, 1);
  WriteRaw<double>(os, m.shrinkage);
  WriteRaw<double>(os, m.bias);
  WriteRaw<uint32_t>(os, static_cast<uint32_t>(m.trees.size()));
  for (const auto &t : m.trees) vad_internal::WriteNode(os, t, 0);
  FFSV_CHECK(os.good(), "write failed for " << path);
}

inline GvadModel ReadGvadModel(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  FFSV_CHECK(is.is_open(), "cannot open GVAD model file " << path);
  ExpectMagic(is, "FFSVGVAD");
  const uint32_t version = ReadRaw<uint32_t>(is);
  FFSV_CHECK(version == 1, "unsupported GVAD model version " << version);
  GvadModel m;
  m.shrinkage = ReadRaw<double>(is);
  m.bias = ReadRaw<double>(is);
  const uint32_t n_trees = ReadRaw<uint32_t>(is);
  m.trees.resize(n_trees);
  for (auto &t : m.trees) vad_internal::ReadNode(is, &t, 0);
  m.input_dim = -1;
  return m;
}

}  // namespace ffsv

#endif  // FFSV_VAD_HPP_
