// ffsv/eval.hpp

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

#ifndef FFSV_EVAL_HPP_
#define FFSV_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ffsv/common.hpp"

namespace ffsv {

struct LabeledScore {
  double score = 0.0;
  bool target = false;
};

struct DetPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

struct DetMetrics {
  double eer = 0.0;
  double min_dcf = 0.0;
  double dcf_threshold = 0.0;
  std::vector<DetPoint> points;
};

namespace eval_internal {

// Operating points swept over every distinct score plus the accept-all and
// reject-all endpoints, in ascending threshold order.  Convention: a trial
// is accepted iff score >= threshold, so P_miss(t) = frac(targets < t) and
// P_fa(t) = frac(nontargets >= t).
inline std::vector<DetPoint> SweepPoints(const std::vector<LabeledScore> &scores) {
  std::vector<double> targets, nontargets;
  for (const auto &s : scores) (s.target ? targets : nontargets).push_back(s.score);
  FFSV_CHECK(!targets.empty(), "score set has no target trials");
  FFSV_CHECK(!nontargets.empty(), "score set has no nontarget trials");
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());

  std::vector<double> thresholds;
  for (const auto &s : scores) thresholds.push_back(s.score);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  std::vector<DetPoint> points;
  points.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  for (double th : thresholds) {
    const auto miss = std::lower_bound(targets.begin(), targets.end(), th) -
                      targets.begin();
    const auto fa = nontargets.end() -
                    std::lower_bound(nontargets.begin(), nontargets.end(), th);
    points.push_back({th, static_cast<double>(miss) / nt,
                      static_cast<double>(fa) / nn});
  }
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return points;
}

}  // namespace eval_internal

// Equal error rate: the common value of P_miss and P_fa at their crossing,
// linearly interpolated between adjacent sweep vertices when no threshold
// hits the crossing exactly.
inline double ComputeEer(const std::vector<LabeledScore> &scores) {
  const auto points = eval_internal::SweepPoints(scores);
  for (size_t i = 0; i + 1 < points.size(); i++) {
    const double d0 = points[i].p_miss - points[i].p_fa;
    const double d1 = points[i + 1].p_miss - points[i + 1].p_fa;
    if (d0 > 0.0) break;       // crossing was before this vertex
    if (d0 == 0.0) return points[i].p_miss;
    if (d1 < 0.0) continue;    // still below the crossing
    const double denom = d1 - d0;
    const double t = (denom > 0.0) ? -d0 / denom : 0.0;
    return points[i].p_miss + t * (points[i + 1].p_miss - points[i].p_miss);
  }
  FFSV_ERR("EER crossing not found (internal error)");
}

// Minimum normalized detection cost over all thresholds including the
// accept-all and reject-all endpoints; ties resolve to the lowest threshold.
inline std::pair<double, double> ComputeMinDcf(const std::vector<LabeledScore> &scores,
                                               double p_target = 0.01,
                                               double c_miss = 1.0,
                                               double c_fa = 1.0) {
  FFSV_CHECK(p_target > 0.0 && p_target < 1.0, "p_target must be in (0, 1)");
  const auto points = eval_internal::SweepPoints(scores);
  const double norm = std::min(c_miss * p_target, c_fa * (1.0 - p_target));
  double best = std::numeric_limits<double>::infinity();
  double best_threshold = 0.0;
  for (const auto &pt : points) {
    const double dcf = (c_miss * p_target * pt.p_miss +
                        c_fa * (1.0 - p_target) * pt.p_fa) / norm;
    if (dcf < best) {
      best = dcf;
      best_threshold = pt.threshold;
    }
  }
  return {best, best_threshold};
}

inline DetMetrics ComputeDetMetrics(const std::vector<LabeledScore> &scores,
                                    double p_target = 0.01, double c_miss = 1.0,
                                    double c_fa = 1.0) {
  DetMetrics m;
  m.points = eval_internal::SweepPoints(scores);
  m.eer = ComputeEer(scores);
  auto [dcf, threshold] = ComputeMinDcf(scores, p_target, c_miss, c_fa);
  m.min_dcf = dcf;
  m.dcf_threshold = threshold;
  return m;
}

// "eer=<pct to 2 decimals> minDCF=<3 decimals> threshold=<6 decimals>"
inline std::string FormatMetricsReport(const DetMetrics &m) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "eer=%.2f minDCF=%.3f threshold=%.6f",
                100.0 * m.eer, m.min_dcf, m.dcf_threshold);
  return buf;
}

// --- trials and score files ------------------------------------------------

enum class TrialLabel { kTarget, kNontarget, kUnknown };

// One comparison: an enrollment identity against one or more test channels
// (multi-array trials list every channel).
struct Trial {
  std::string enroll_id;
  std::vector<std::string> test_ids;
  TrialLabel label = TrialLabel::kUnknown;
};

struct TrialScore {
  std::string enroll_id;
  std::vector<std::string> test_ids;
  double score = 0.0;
};

namespace eval_internal {

inline std::vector<std::string> SplitChar(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string JoinIds(const std::vector<std::string> &ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); i++) {
    if (i) out += ',';
    out += ids[i];
  }
  return out;
}

}  // namespace eval_internal

// Lines of "enroll_id<TAB>test_id[,test_id...]<TAB>{target|nontarget|unknown}".
inline std::vector<Trial> LoadTrials(const std::string &path) {
  std::ifstream is(path);
  FFSV_CHECK(is.is_open(), "cannot open trial file " << path);
  std::vector<Trial> trials;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    line_no++;
    if (line.empty()) continue;
    const auto fields = eval_internal::SplitChar(line, '\t');
    FFSV_CHECK(fields.size() == 3, path << ":" << line_no
               << ": expected 3 tab-separated fields, got " << fields.size());
    Trial t;
    t.enroll_id = fields[0];
    t.test_ids = eval_internal::SplitChar(fields[1], ',');
    FFSV_CHECK(!t.enroll_id.empty(), path << ":" << line_no << ": empty enroll id");
    FFSV_CHECK(t.test_ids.size() <= 16, path << ":" << line_no << ": "
               << t.test_ids.size() << " test ids exceeds 4 arrays x 4 channels");
    for (const auto &id : t.test_ids)
      FFSV_CHECK(!id.empty(), path << ":" << line_no << ": empty test id");
    if (fields[2] == "target") {
      t.label = TrialLabel::kTarget;
    } else if (fields[2] == "nontarget") {
      t.label = TrialLabel::kNontarget;
    } else if (fields[2] == "unknown") {
      t.label = TrialLabel::kUnknown;
    } else {
      FFSV_ERR(path << ":" << line_no << ": bad label \"" << fields[2] << "\"");
    }
    const std::string key = t.enroll_id + "\t" + eval_internal::JoinIds(t.test_ids);
    FFSV_CHECK(seen.insert(key).second, path << ":" << line_no
               << ": duplicate trial (" << key << ")");
    trials.push_back(std::move(t));
  }
  return trials;
}

// Lines of "enroll_id<TAB>test_id_list<TAB>score", score at 6 decimals.
inline void WriteScores(const std::string &path, const std::vector<TrialScore> &scores) {
  std::ofstream os(path);
  FFSV_CHECK(os.is_open(), "cannot create score file " << path);
  for (const auto &s : scores) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", s.score);
    os << s.enroll_id << '\t' << eval_internal::JoinIds(s.test_ids) << '\t'
       << buf << '\n';
  }
  FFSV_CHECK(os.good(), "write failed for " << path);
}

inline std::vector<TrialScore> LoadScores(const std::string &path) {
  std::ifstream is(path);
  FFSV_CHECK(is.is_open(), "cannot open score file " << path);
  std::vector<TrialScore> scores;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    line_no++;
    if (line.empty()) continue;
    const auto fields = eval_internal::SplitChar(line, '\t');
    FFSV_CHECK(fields.size() == 3, path << ":" << line_no
               << ": expected 3 tab-separated fields, got " << fields.size());
    TrialScore s;
    s.enroll_id = fields[0];
    s.test_ids = eval_internal::SplitChar(fields[1], ',');
    try {
      size_t used = 0;
      s.score = std::stod(fields[2], &used);
      FFSV_CHECK(used == fields[2].size(), "trailing characters");
    } catch (const std::exception &) {
      FFSV_ERR(path << ":" << line_no << ": bad score \"" << fields[2] << "\"");
    }
    const std::string key = s.enroll_id + "\t" + eval_internal::JoinIds(s.test_ids);
    FFSV_CHECK(seen.insert(key).second, path << ":" << line_no
               << ": duplicate trial (" << key << ")");
    scores.push_back(std::move(s));
  }
  return scores;
}

// --- trial scoring -----------------------------------------------------------

// multi: average the embeddings of every listed test channel, then score.
// single: score against test channel `channel` only.
struct FusionMode {
  bool multi = true;
  int channel = 0;

  static FusionMode Multi() { return {true, 0}; }
  static FusionMode Single(int k) { return {false, k}; }
};

using PairScorer = std::function<double(const std::vector<double> &,
                                        const std::vector<double> &)>;
// Per-trial enrollment embedding override (enrollment augmentation hooks in
// here); the default looks the enrollment up in the archive.
using EnrollProvider = std::function<std::vector<double>(const Trial &)>;

inline std::vector<TrialScore> ScoreTrials(
    const std::vector<Trial> &trials,
    const std::map<std::string, std::vector<double>> &embeddings,
    const PairScorer &scorer, const FusionMode &fusion,
    const EnrollProvider &enroll_provider = nullptr) {
  std::set<std::string> missing;
  for (const auto &t : trials) {
    if (!enroll_provider && !embeddings.count(t.enroll_id)) missing.insert(t.enroll_id);
    for (const auto &id : t.test_ids)
      if (!embeddings.count(id)) missing.insert(id);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    for (const auto &id : missing) os << " " << id;
    FFSV_ERR("missing embeddings for" << os.str());
  }

  std::vector<TrialScore> out;
  for (const auto &t : trials) {
    std::vector<double> enroll = enroll_provider ? enroll_provider(t)
                                                 : embeddings.at(t.enroll_id);
    std::vector<double> test;
    if (fusion.multi) {
      std::vector<std::vector<double>> chans;
      for (const auto &id : t.test_ids) chans.push_back(embeddings.at(id));
      std::vector<double> mean(chans[0].size(), 0.0);
      for (const auto &c : chans)
        for (size_t i = 0; i < mean.size(); i++) mean[i] += c[i];
      for (auto &v : mean) v /= static_cast<double>(chans.size());
      test = std::move(mean);
    } else {
      FFSV_CHECK(fusion.channel >= 0 &&
                 fusion.channel < static_cast<int>(t.test_ids.size()),
                 "trial " << t.enroll_id << ": channel " << fusion.channel
                 << " out of range (trial has " << t.test_ids.size()
                 << " test channels)");
      test = embeddings.at(t.test_ids[static_cast<size_t>(fusion.channel)]);
    }
    out.push_back({t.enroll_id, t.test_ids, scorer(enroll, test)});
  }
  return out;
}

// Joins scores with trial labels for metric computation; unknown-label
// trials are excluded.
inline std::vector<LabeledScore> JoinScoresWithLabels(
    const std::vector<Trial> &trials, const std::vector<TrialScore> &scores) {
  std::map<std::string, double> by_key;
  for (const auto &s : scores)
    by_key[s.enroll_id + "\t" + eval_internal::JoinIds(s.test_ids)] = s.score;
  std::vector<LabeledScore> out;
  for (const auto &t : trials) {
    if (t.label == TrialLabel::kUnknown) continue;
    const std::string key = t.enroll_id + "\t" + eval_internal::JoinIds(t.test_ids);
    auto it = by_key.find(key);
    FFSV_CHECK(it != by_key.end(), "no score for trial " << key);
    out.push_back({it->second, t.label == TrialLabel::kTarget});
  }
  return out;
}

}  // namespace ffsv

#endif  // FFSV_EVAL_HPP_
