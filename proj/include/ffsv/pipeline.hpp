// ffsv/pipeline.hpp

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

#ifndef FFSV_PIPELINE_HPP_
#define FFSV_PIPELINE_HPP_

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ffsv/backend.hpp"
#include "ffsv/common.hpp"
#include "ffsv/embed_net.hpp"
#include "ffsv/eval.hpp"
#include "ffsv/features.hpp"
#include "ffsv/room_sim.hpp"
#include "ffsv/synth.hpp"
#include "ffsv/vad.hpp"
#include "ffsv/wav.hpp"

namespace ffsv {

// Raised for malformed invocations (unknown config keys, bad flag values);
// the CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- run configuration -------------------------------------------------------
//
// Plain key=value text.  Every key has a default; unknown keys are rejected.

class RunConfig {
 public:
  RunConfig() : values_(Defaults()) {}

  static const std::map<std::string, std::string> &Defaults() {
    static const std::map<std::string, std::string> defaults = {
        {"seed", "42"},
        {"feature.kind", "logmel"},
        {"feature.n_mels", "64"},
        {"feature.n_coef", "30"},
        {"room.width_range", "6,8"},
        {"room.depth_range", "6,8"},
        {"room.height_range", "2.7,3.5"},
        {"absorption_range", "0.2,0.7"},
        {"max_order", "6"},
        {"snr_range", "0,20"},
        {"num_mics", "1"},
        {"mic_radius", "0.05"},
        {"vad.n_trees", "100"},
        {"vad.max_depth", "3"},
        {"vad.shrinkage", "0.1"},
        {"vad.max_frames", "60000"},
        {"net.variant", "resnet34"},
        {"net.width", "1/1"},
        {"net.embedding_dim", "0"},  // 0 = variant default
        {"net.crop_frames", "300"},
        {"net.batch_size", "16"},
        {"train.lr", "0.1"},
        {"train.epochs", "50"},
        {"train.decay_every", "20"},
        {"train.decay_factor", "0.1"},
        {"train.momentum", "0.9"},
        {"train.weight_decay", "0.0001"},
        {"finetune.lr", "0.001"},
        {"finetune.epochs", "10"},
        {"plda.iters", "20"},
        {"eda.snr_range", "5,15"},
        {"dcf.p_target", "0.01"},
        {"dcf.c_miss", "1"},
        {"dcf.c_fa", "1"},
        {"synth.speakers", "20"},
        {"synth.utts_per_speaker", "16"},
        {"synth.seconds", "2.2"},
        {"synth.noises", "6"},
    };
    return defaults;
  }

  void Set(const std::string &key, const std::string &value) {
    if (!Defaults().count(key))
      throw UsageError("unknown config key \"" + key + "\"");
    values_[key] = value;
  }

  void LoadFile(const std::string &path) {
    std::ifstream is(path);
    FFSV_CHECK(is.is_open(), "cannot open config file " << path);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      line_no++;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
        line.pop_back();
      if (line.empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError(path + ":" + std::to_string(line_no) +
                         ": expected key=value");
      Set(line.substr(0, eq), line.substr(eq + 1));
    }
  }

  const std::string &Get(const std::string &key) const {
    auto it = values_.find(key);
    FFSV_CHECK(it != values_.end(), "no config key " << key);
    return it->second;
  }

  int64_t GetInt(const std::string &key) const {
    try {
      return std::stoll(Get(key));
    } catch (const std::exception &) {
      throw UsageError("config " + key + "=" + Get(key) + " is not an integer");
    }
  }

  double GetDouble(const std::string &key) const {
    try {
      return std::stod(Get(key));
    } catch (const std::exception &) {
      throw UsageError("config " + key + "=" + Get(key) + " is not a number");
    }
  }

  std::array<double, 2> GetRange(const std::string &key) const {
    const std::string &v = Get(key);
    const size_t comma = v.find(',');
    if (comma == std::string::npos)
      throw UsageError("config " + key + "=" + v + " is not a \"lo,hi\" range");
    try {
      return {std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1))};
    } catch (const std::exception &) {
      throw UsageError("config " + key + "=" + v + " is not a \"lo,hi\" range");
    }
  }

  uint64_t Seed() const { return static_cast<uint64_t>(GetInt("seed")); }

  RoomSimConfig Room() const {
    RoomSimConfig r;
    r.width_range = GetRange("room.width_range");
    r.depth_range = GetRange("room.depth_range");
    r.height_range = GetRange("room.height_range");
    r.absorption_range = GetRange("absorption_range");
    r.snr_range_db = GetRange("snr_range");
    r.max_order = static_cast<int>(GetInt("max_order"));
    r.num_mics = static_cast<int>(GetInt("num_mics"));
    r.mic_radius = GetDouble("mic_radius");
    return r;
  }

  GvadConfig Gvad() const {
    GvadConfig g;
    g.n_trees = static_cast<int>(GetInt("vad.n_trees"));
    g.max_depth = static_cast<int>(GetInt("vad.max_depth"));
    g.shrinkage = GetDouble("vad.shrinkage");
    return g;
  }

  NetworkConfig Net(int n_classes) const {
    const std::string variant = Get("net.variant");
    NetworkConfig c;
    if (variant == "resnet34") {
      c = NetworkConfig::Resnet34(n_classes);
    } else if (variant == "resnet50") {
      c = NetworkConfig::Resnet50(n_classes);
    } else {
      throw UsageError("net.variant must be resnet34 or resnet50");
    }
    const std::string width = Get("net.width");
    const size_t slash = width.find('/');
    try {
      if (slash == std::string::npos) {
        c.width_num = static_cast<uint32_t>(std::stoul(width));
        c.width_den = 1;
      } else {
        c.width_num = static_cast<uint32_t>(std::stoul(width.substr(0, slash)));
        c.width_den = static_cast<uint32_t>(std::stoul(width.substr(slash + 1)));
      }
    } catch (const std::exception &) {
      throw UsageError("net.width must be \"num\" or \"num/den\"");
    }
    const int emb = static_cast<int>(GetInt("net.embedding_dim"));
    if (emb > 0) c.embedding_dim = emb;
    if (Get("feature.kind") == "mfcc")
      c.input_dim = static_cast<int>(GetInt("feature.n_coef"));
    else
      c.input_dim = static_cast<int>(GetInt("feature.n_mels"));
    return c;
  }

  TrainSchedule Schedule() const {
    TrainSchedule s;
    s.initial_lr = GetDouble("train.lr");
    s.epochs = static_cast<int>(GetInt("train.epochs"));
    s.decay_every = static_cast<int>(GetInt("train.decay_every"));
    s.decay_factor = GetDouble("train.decay_factor");
    s.momentum = GetDouble("train.momentum");
    s.weight_decay = GetDouble("train.weight_decay");
    return s;
  }

  TrainOptions TrainOpts() const {
    TrainOptions o;
    o.batch_size = static_cast<int>(GetInt("net.batch_size"));
    o.crop_frames = static_cast<int>(GetInt("net.crop_frames"));
    o.seed = Seed();
    return o;
  }

  SynthConfig Synth() const {
    SynthConfig s;
    s.n_speakers = static_cast<int>(GetInt("synth.speakers"));
    s.utts_per_speaker = static_cast<int>(GetInt("synth.utts_per_speaker"));
    s.utt_seconds = GetDouble("synth.seconds");
    s.n_noises = static_cast<int>(GetInt("synth.noises"));
    s.seed = Seed();
    return s;
  }

  const std::map<std::string, std::string> &Values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// --- manifest ------------------------------------------------------------
//
// Tab-separated rows: utt_id, speaker_id, path, channel, visit, condition.

struct ManifestRow {
  std::string utt_id;
  std::string speaker_id;
  std::string path;
  int channel = 0;
  std::string visit = "synthetic";
  std::string condition = "clean";
};

inline std::vector<ManifestRow> LoadManifest(const std::string &path) {
  std::ifstream is(path);
  FFSV_CHECK(is.is_open(), "cannot open manifest " << path);
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    line_no++;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = eval_internal::SplitChar(line, '\t');
    FFSV_CHECK(fields.size() == 6, path << ":" << line_no
               << ": expected 6 tab-separated fields, got " << fields.size());
    ManifestRow r;
    r.utt_id = fields[0];
    r.speaker_id = fields[1];
    r.path = fields[2];
    try {
      r.channel = std::stoi(fields[3]);
    } catch (const std::exception &) {
      FFSV_ERR(path << ":" << line_no << ": bad channel \"" << fields[3] << "\"");
    }
    r.visit = fields[4];
    r.condition = fields[5];
    FFSV_CHECK(seen.insert(r.utt_id).second,
               path << ":" << line_no << ": duplicate utt id " << r.utt_id);
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(),
            [](const ManifestRow &a, const ManifestRow &b) { return a.utt_id < b.utt_id; });
  return rows;
}

inline void WriteManifest(const std::string &path, std::vector<ManifestRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ManifestRow &a, const ManifestRow &b) { return a.utt_id < b.utt_id; });
  std::ofstream os(path);
  FFSV_CHECK(os.is_open(), "cannot create manifest " << path);
  for (const auto &r : rows)
    os << r.utt_id << '\t' << r.speaker_id << '\t' << r.path << '\t' << r.channel
       << '\t' << r.visit << '\t' << r.condition << '\n';
  FFSV_CHECK(os.good(), "write failed for " << path);
}

// --- run log ---------------------------------------------------------------

class RunLog {
 public:
  RunLog(std::string command, const RunConfig &config)
      : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
    for (const auto &[k, v] : config.Values())
      lines_.push_back("config " + k + "=" + v);
  }

  void Input(const std::string &path) {
    char digest[19];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(FileDigest(path)));
    lines_.push_back("input " + path + " fnv1a=" + digest);
  }

  void Note(const std::string &line) { lines_.push_back(line); }

  // Writes <artifact>.log.
  void Finish(const std::string &artifact_path) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    std::ofstream os(artifact_path + ".log");
    FFSV_CHECK(os.is_open(), "cannot create log for " << artifact_path);
    os << "command " << command_ << "\n";
    for (const auto &l : lines_) os << l << "\n";
    os << "artifact " << artifact_path << "\n";
    os << "wall_time_ms " << elapsed.count() << "\n";
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> lines_;
};

// --- shared pipeline pieces -------------------------------------------------

inline MelConfig MelFromConfig(const RunConfig &cfg) {
  MelConfig m;
  m.n_mels = static_cast<int>(cfg.GetInt("feature.n_mels"));
  return m;
}

// The standard feature path: resample to 16 kHz, pre-emphasize, frame,
// log-mel or MFCC, per-utterance mean normalization.
inline FeatureMatrix ComputeFeatures(const Waveform &w, const RunConfig &cfg) {
  Waveform x = Resample(w, 16000);
  x = PreEmphasize(x, 0.97);
  FrameSet frames = FrameSignal(x);
  const MelConfig mel = MelFromConfig(cfg);
  FeatureMatrix f = (cfg.Get("feature.kind") == "mfcc")
                        ? Mfcc(frames, static_cast<int>(cfg.GetInt("feature.n_coef")), mel)
                        : LogMel(frames, mel);
  return MeanNormalize(f);
}

// GVAD input features (un-normalized log-mel + frame log energy).
inline FeatureMatrix ComputeVadFeatures(const Waveform &w) {
  Waveform x = Resample(w, 16000);
  x = PreEmphasize(x, 0.97);
  FrameSet frames = FrameSignal(x);
  return BuildVadFeatures(LogMel(frames), frames.log_energy_db);
}

inline std::vector<Waveform> LoadNoiseBank(const std::string &noise_dir,
                                           const RunConfig &cfg) {
  if (noise_dir.empty() || noise_dir == "synth") return SynthNoiseBank(cfg.Synth());
  std::vector<std::string> paths;
  for (const auto &entry : std::filesystem::directory_iterator(noise_dir))
    if (entry.path().extension() == ".wav") paths.push_back(entry.path().string());
  FFSV_CHECK(!paths.empty(), "no .wav files in noise directory " << noise_dir);
  std::sort(paths.begin(), paths.end());
  std::vector<Waveform> bank;
  for (const auto &p : paths) bank.push_back(Resample(ReadWavMono(p), 16000));
  return bank;
}

// --- commands -----------------------------------------------------------------
//
// Each command reads the artifacts of the previous stage, writes exactly one
// artifact plus a .log, and returns a process exit code (0 ok, 1 any row
// failed).

inline int CmdSynthDataset(const std::string &out_dir, const RunConfig &cfg) {
  const SynthConfig sc = cfg.Synth();
  std::filesystem::create_directories(out_dir);
  RunLog log("synth-dataset", cfg);

  std::vector<ManifestRow> rows;
  for (int s = 0; s < sc.n_speakers; s++) {
    for (int u = 0; u < sc.utts_per_speaker; u++) {
      char utt_id[64], spk_id[32];
      std::snprintf(spk_id, sizeof(spk_id), "spk%02d", s);
      std::snprintf(utt_id, sizeof(utt_id), "spk%02d_utt%02d", s, u);
      const std::string path = out_dir + "/" + utt_id + ".wav";
      WriteWav(path, SynthUtterance(s, u, sc));
      rows.push_back({utt_id, spk_id, path, 0, "synthetic", "clean"});
    }
  }
  const std::string manifest = out_dir + "/manifest.tsv";
  WriteManifest(manifest, rows);
  log.Note("rows " + std::to_string(rows.size()));
  log.Finish(manifest);
  std::cout << "synth-dataset: wrote " << rows.size() << " utterances to "
            << out_dir << "\n";
  return 0;
}

// Far-field copies of every manifest row.  Deterministic per (seed, utt_id);
// failures are reported per row and the command exits nonzero if any row
// failed.
inline int CmdSimulate(const std::string &manifest_path, const std::string &noise_dir,
                       const std::string &out_dir, const RunConfig &cfg) {
  const auto rows = LoadManifest(manifest_path);
  const auto bank = LoadNoiseBank(noise_dir, cfg);
  const RoomSimConfig room_cfg = cfg.Room();
  std::filesystem::create_directories(out_dir);

  RunLog log("simulate", cfg);
  log.Input(manifest_path);

  std::vector<ManifestRow> out_rows;
  int failures = 0;
  for (const auto &row : rows) {
    try {
      const Waveform clean = Resample(ReadWavMono(row.path), 16000);
      Rng rng(DeriveSeed(cfg.Seed(), row.utt_id));
      AugmentOutput aug = Augment(clean, bank, room_cfg, &rng);
      for (size_t ch = 0; ch < aug.channels.size(); ch++) {
        const std::string utt_id = row.utt_id + "_ch" + std::to_string(ch);
        const std::string path = out_dir + "/" + utt_id + ".wav";
        WriteWav(path, aug.channels[ch]);
        out_rows.push_back({utt_id, row.speaker_id, path, static_cast<int>(ch),
                            row.visit, "farfield"});
      }
    } catch (const Error &e) {
      std::cerr << "simulate: row " << row.utt_id << " failed: " << e.what() << "\n";
      failures++;
    }
  }
  const std::string manifest = out_dir + "/manifest.tsv";
  WriteManifest(manifest, out_rows);
  log.Note("rows_in " + std::to_string(rows.size()));
  log.Note("rows_out " + std::to_string(out_rows.size()));
  log.Note("failures " + std::to_string(failures));
  log.Finish(manifest);
  std::cout << "simulate: " << rows.size() << " rows -> " << out_rows.size()
            << " channels, " << failures << " failures\n";
  return failures ? 1 : 0;
}

inline int CmdExtractFeatures(const std::string &manifest_path,
                              const std::string &out_path, const RunConfig &cfg) {
  const auto rows = LoadManifest(manifest_path);
  RunLog log("extract-features", cfg);
  log.Input(manifest_path);

  std::vector<std::pair<std::string, FeatureMatrix>> entries;
  int failures = 0;
  for (const auto &row : rows) {
    try {
      entries.emplace_back(row.utt_id, ComputeFeatures(ReadWavMono(row.path), cfg));
    } catch (const Error &e) {
      std::cerr << "extract-features: row " << row.utt_id << " failed: "
                << e.what() << "\n";
      failures++;
    }
  }
  WriteFeatureArchive(out_path, entries);
  log.Note("utterances " + std::to_string(entries.size()));
  log.Note("failures " + std::to_string(failures));
  log.Finish(out_path);
  std::cout << "extract-features: wrote " << entries.size() << " utterances to "
            << out_path << "\n";
  return failures ? 1 : 0;
}

// Trains the boosted-tree VAD: inputs are the simulated far-field features,
// labels come from the energy VAD on the clean source rows (index-aligned,
// since simulation preserves length).
inline int CmdTrainVad(const std::string &clean_manifest_path,
                       const std::string &farfield_manifest_path,
                       const std::string &out_model, const RunConfig &cfg) {
  const auto clean_rows = LoadManifest(clean_manifest_path);
  const auto far_rows = LoadManifest(farfield_manifest_path);
  RunLog log("train-vad", cfg);
  log.Input(clean_manifest_path);
  log.Input(farfield_manifest_path);

  std::map<std::string, FrameMask> labels_by_source;
  for (const auto &row : clean_rows) {
    Waveform w = Resample(ReadWavMono(row.path), 16000);
    labels_by_source.emplace(row.utt_id, EnergyVad(FrameSignal(w)));
  }

  const int64_t max_frames = cfg.GetInt("vad.max_frames");
  std::vector<FeatureMatrix> features;
  std::vector<FrameMask> labels;
  int64_t total_frames = 0;
  for (const auto &row : far_rows) {
    if (total_frames >= max_frames) break;
    // Far-field rows are named <source>_ch<k>.
    const size_t pos = row.utt_id.rfind("_ch");
    FFSV_CHECK(pos != std::string::npos, "far-field utt id " << row.utt_id
               << " does not carry a _ch<k> suffix");
    const std::string source = row.utt_id.substr(0, pos);
    auto it = labels_by_source.find(source);
    FFSV_CHECK(it != labels_by_source.end(), "no clean source row for " << row.utt_id);

    FeatureMatrix f = ComputeVadFeatures(ReadWavMono(row.path));
    FrameMask mask = it->second;
    FFSV_CHECK(mask.NumFrames() == f.num_frames,
               "label/feature frame mismatch for " << row.utt_id << ": "
               << mask.NumFrames() << " vs " << f.num_frames);
    total_frames += f.num_frames;
    features.push_back(std::move(f));
    labels.push_back(std::move(mask));
  }

  std::vector<double> round_loss;
  GvadModel model = GvadTrain(features, labels, cfg.Gvad(), &round_loss);
  WriteGvadModel(out_model, model);
  log.Note("train_utterances " + std::to_string(features.size()));
  log.Note("train_frames " + std::to_string(total_frames));
  for (size_t i = 0; i < round_loss.size(); i++)
    log.Note("round " + std::to_string(i) + " loss " + std::to_string(round_loss[i]));
  log.Finish(out_model);
  std::cout << "train-vad: " << model.trees.size() << " trees on " << total_frames
            << " frames -> " << out_model << "\n";
  return 0;
}

namespace pipeline_internal {

// Joins a feature archive with manifest speaker labels; class indices follow
// the sorted order of distinct speaker ids.
inline LabeledDataset BuildDataset(
    const std::vector<std::pair<std::string, FeatureMatrix>> &archive,
    const std::vector<ManifestRow> &rows,
    std::map<std::string, int> *speaker_to_class) {
  std::map<std::string, const ManifestRow *> by_utt;
  for (const auto &r : rows) by_utt[r.utt_id] = &r;

  std::set<std::string> speakers;
  for (const auto &[id, f] : archive) {
    auto it = by_utt.find(id);
    if (it != by_utt.end()) speakers.insert(it->second->speaker_id);
  }
  speaker_to_class->clear();
  int next = 0;
  for (const auto &s : speakers) (*speaker_to_class)[s] = next++;

  LabeledDataset data;
  for (const auto &[id, f] : archive) {
    auto it = by_utt.find(id);
    if (it == by_utt.end()) continue;
    data.features.push_back(f);
    data.labels.push_back((*speaker_to_class)[it->second->speaker_id]);
  }
  FFSV_CHECK(!data.features.empty(), "no archive utterances matched the manifest");
  return data;
}

inline void AppendEpochLines(RunLog *log, const std::vector<EpochStats> &stats) {
  for (const auto &e : stats) {
    char line[96];
    std::snprintf(line, sizeof(line), "%d\t%.10g\t%.10g", e.epoch, e.lr, e.loss);
    log->Note(line);
  }
}

}  // namespace pipeline_internal

inline int CmdTrain(const std::vector<std::string> &features_paths,
                    const std::vector<std::string> &manifest_paths,
                    const std::string &out_model, const RunConfig &cfg) {
  RunLog log("train", cfg);
  std::vector<std::pair<std::string, FeatureMatrix>> archive;
  for (const auto &path : features_paths) {
    log.Input(path);
    auto part = ReadFeatureArchive(path);
    std::move(part.begin(), part.end(), std::back_inserter(archive));
  }
  std::vector<ManifestRow> rows;
  for (const auto &path : manifest_paths) {
    log.Input(path);
    auto part = LoadManifest(path);
    std::move(part.begin(), part.end(), std::back_inserter(rows));
  }

  std::map<std::string, int> speaker_to_class;
  LabeledDataset data = pipeline_internal::BuildDataset(archive, rows, &speaker_to_class);

  Rng rng(cfg.Seed());
  EmbedNet model(cfg.Net(static_cast<int>(speaker_to_class.size())), &rng);
  const auto stats = Train(&model, data, cfg.Schedule(), cfg.TrainOpts());
  WriteModel(out_model, &model);

  log.Note("speakers " + std::to_string(speaker_to_class.size()));
  log.Note("utterances " + std::to_string(data.Size()));
  pipeline_internal::AppendEpochLines(&log, stats);
  log.Finish(out_model);
  std::cout << "train: " << data.Size() << " utterances, "
            << speaker_to_class.size() << " speakers, final loss "
            << (stats.empty() ? 0.0 : stats.back().loss) << " -> " << out_model << "\n";
  return 0;
}

inline int CmdFinetune(const std::vector<std::string> &features_paths,
                       const std::vector<std::string> &manifest_paths,
                       const std::string &in_model, const std::string &out_model,
                       const RunConfig &cfg) {
  RunLog log("finetune", cfg);
  std::vector<std::pair<std::string, FeatureMatrix>> archive;
  for (const auto &path : features_paths) {
    log.Input(path);
    auto part = ReadFeatureArchive(path);
    std::move(part.begin(), part.end(), std::back_inserter(archive));
  }
  std::vector<ManifestRow> rows;
  for (const auto &path : manifest_paths) {
    log.Input(path);
    auto part = LoadManifest(path);
    std::move(part.begin(), part.end(), std::back_inserter(rows));
  }
  log.Input(in_model);

  std::map<std::string, int> speaker_to_class;
  LabeledDataset data = pipeline_internal::BuildDataset(archive, rows, &speaker_to_class);

  auto model = ReadModel(in_model);
  const auto stats = FineTune(model.get(), data, cfg.GetDouble("finetune.lr"),
                              static_cast<int>(cfg.GetInt("finetune.epochs")),
                              cfg.TrainOpts());
  WriteModel(out_model, model.get());

  pipeline_internal::AppendEpochLines(&log, stats);
  log.Finish(out_model);
  std::cout << "finetune: " << data.Size() << " utterances -> " << out_model << "\n";
  return 0;
}

inline int CmdExtractEmbeddings(const std::string &features_path,
                                const std::string &model_path,
                                const std::string &out_path, const RunConfig &cfg) {
  const auto archive = ReadFeatureArchive(features_path);
  auto model = ReadModel(model_path);
  RunLog log("extract-embeddings", cfg);
  log.Input(features_path);
  log.Input(model_path);

  std::vector<EmbeddingEntry> entries;
  int failures = 0;
  for (const auto &[id, f] : archive) {
    try {
      entries.push_back({id, ExtractEmbedding(model.get(), f)});
    } catch (const Error &e) {
      std::cerr << "extract-embeddings: " << id << " failed: " << e.what() << "\n";
      failures++;
    }
  }
  WriteEmbeddingArchive(out_path, entries);
  log.Note("embeddings " + std::to_string(entries.size()));
  log.Note("failures " + std::to_string(failures));
  log.Finish(out_path);
  std::cout << "extract-embeddings: " << entries.size() << " vectors -> "
            << out_path << "\n";
  return failures ? 1 : 0;
}

inline int CmdTrainPlda(const std::string &embeddings_path,
                        const std::string &manifest_path,
                        const std::string &out_model, const RunConfig &cfg) {
  const auto entries = ReadEmbeddingArchive(embeddings_path);
  const auto rows = LoadManifest(manifest_path);
  RunLog log("train-plda", cfg);
  log.Input(embeddings_path);
  log.Input(manifest_path);

  std::map<std::string, std::string> speaker_of;
  for (const auto &r : rows) speaker_of[r.utt_id] = r.speaker_id;
  std::map<std::string, int> speaker_to_class;
  std::vector<std::vector<double>> embs;
  std::vector<int> labels;
  for (const auto &e : entries) {
    auto it = speaker_of.find(e.id);
    if (it == speaker_of.end()) continue;
    if (!speaker_to_class.count(it->second)) {
      const int next = static_cast<int>(speaker_to_class.size());
      speaker_to_class[it->second] = next;
    }
    embs.push_back(e.vec);
    labels.push_back(speaker_to_class[it->second]);
  }

  std::vector<double> loglik;
  PldaModel model = PldaTrain(embs, labels, static_cast<int>(cfg.GetInt("plda.iters")),
                              &loglik);
  WritePldaModel(out_model, model);
  for (size_t i = 0; i < loglik.size(); i++)
    log.Note("em_iter " + std::to_string(i) + " loglik " + std::to_string(loglik[i]));
  log.Finish(out_model);
  std::cout << "train-plda: " << embs.size() << " embeddings, "
            << speaker_to_class.size() << " speakers -> " << out_model << "\n";
  return 0;
}

struct ScoreOptions {
  std::string scorer = "cosine";      // cosine | plda
  std::string plda_model_path;
  bool multi = true;
  int channel = 0;
  bool eda = false;
  std::string manifest_path;          // EDA: to locate waveforms
  std::string model_path;             // EDA: embedding net
  std::string gvad_model_path;        // EDA: VAD model
};

inline int CmdScore(const std::string &trials_path,
                    const std::vector<std::string> &embeddings_paths,
                    const std::string &out_scores, const ScoreOptions &opts,
                    const RunConfig &cfg) {
  const auto trials = LoadTrials(trials_path);
  RunLog log("score", cfg);
  log.Input(trials_path);

  std::map<std::string, std::vector<double>> embeddings;
  for (const auto &path : embeddings_paths) {
    log.Input(path);
    for (auto &e : ReadEmbeddingArchive(path)) embeddings[e.id] = std::move(e.vec);
  }

  PairScorer scorer;
  PldaModel plda;
  if (opts.scorer == "cosine") {
    scorer = [](const std::vector<double> &a, const std::vector<double> &b) {
      return CosineScore(a, b);
    };
  } else if (opts.scorer == "plda") {
    FFSV_CHECK(!opts.plda_model_path.empty(), "plda scoring needs --plda-model");
    log.Input(opts.plda_model_path);
    plda = ReadPldaModel(opts.plda_model_path);
    scorer = [&plda](const std::vector<double> &a, const std::vector<double> &b) {
      return PldaScore(plda, a, b);
    };
  } else {
    throw UsageError("scorer must be cosine or plda");
  }

  EnrollProvider enroll_provider = nullptr;
  std::unique_ptr<EmbedNet> net;
  GvadModel gvad;
  std::map<std::string, std::string> wav_of;
  int eda_fallbacks = 0;
  if (opts.eda) {
    FFSV_CHECK(!opts.manifest_path.empty() && !opts.model_path.empty() &&
               !opts.gvad_model_path.empty(),
               "EDA needs --manifest, --model and --gvad-model");
    log.Input(opts.manifest_path);
    log.Input(opts.model_path);
    log.Input(opts.gvad_model_path);
    for (const auto &r : LoadManifest(opts.manifest_path)) wav_of[r.utt_id] = r.path;
    net = ReadModel(opts.model_path);
    gvad = ReadGvadModel(opts.gvad_model_path);
    EdaConfig eda_cfg;
    eda_cfg.snr_range_db = cfg.GetRange("eda.snr_range");
    const uint64_t seed = cfg.Seed();
    Featurizer featurize = [&cfg](const Waveform &w) { return ComputeFeatures(w, cfg); };
    enroll_provider = [&, eda_cfg, seed, featurize](const Trial &t) {
      auto enroll_it = wav_of.find(t.enroll_id);
      FFSV_CHECK(enroll_it != wav_of.end(), "no waveform for enrollment " << t.enroll_id);
      auto test_it = wav_of.find(t.test_ids[0]);
      FFSV_CHECK(test_it != wav_of.end(), "no waveform for test " << t.test_ids[0]);
      Rng rng(DeriveSeed(seed, t.enroll_id + "|" + t.test_ids[0]));
      EdaResult r = EnrollWithEda(Resample(ReadWavMono(enroll_it->second), 16000),
                                  Resample(ReadWavMono(test_it->second), 16000),
                                  net.get(), gvad, featurize, eda_cfg, &rng);
      if (r.fallback) eda_fallbacks++;
      return r.embedding;
    };
  }

  const FusionMode fusion = opts.multi ? FusionMode::Multi()
                                       : FusionMode::Single(opts.channel);
  const auto scores = ScoreTrials(trials, embeddings, scorer, fusion, enroll_provider);
  WriteScores(out_scores, scores);
  log.Note("trials " + std::to_string(scores.size()));
  if (opts.eda) log.Note("eda_fallbacks " + std::to_string(eda_fallbacks));
  log.Finish(out_scores);
  std::cout << "score: " << scores.size() << " trials -> " << out_scores << "\n";
  return 0;
}

inline int CmdEvaluate(const std::string &trials_path, const std::string &scores_path,
                       const RunConfig &cfg) {
  const auto trials = LoadTrials(trials_path);
  const auto scores = LoadScores(scores_path);
  RunLog log("evaluate", cfg);
  log.Input(trials_path);
  log.Input(scores_path);

  const auto labeled = JoinScoresWithLabels(trials, scores);
  const DetMetrics metrics = ComputeDetMetrics(labeled, cfg.GetDouble("dcf.p_target"),
                                               cfg.GetDouble("dcf.c_miss"),
                                               cfg.GetDouble("dcf.c_fa"));
  const std::string report = FormatMetricsReport(metrics);

  const std::string out_path = scores_path + ".metrics";
  std::ofstream os(out_path);
  FFSV_CHECK(os.is_open(), "cannot create " << out_path);
  os << report << "\n";
  log.Note("labeled_trials " + std::to_string(labeled.size()));
  log.Finish(out_path);
  std::cout << report << "\n";
  return 0;
}

}  // namespace ffsv

#endif  // FFSV_PIPELINE_HPP_
