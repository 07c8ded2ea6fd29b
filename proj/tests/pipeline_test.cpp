// tests/pipeline_test.cpp

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

#include "ffsv/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace ffsv;
namespace fs = std::filesystem;

namespace {

std::string FreshDir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string ReadFileText(const std::string &path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Small configuration so the whole pipeline runs in seconds.
RunConfig TinyConfig() {
  RunConfig cfg;
  cfg.Set("synth.speakers", "4");
  cfg.Set("synth.utts_per_speaker", "5");
  cfg.Set("synth.seconds", "1.2");
  cfg.Set("synth.noises", "3");
  cfg.Set("net.width", "1/16");
  cfg.Set("net.embedding_dim", "8");
  cfg.Set("net.crop_frames", "40");
  cfg.Set("net.batch_size", "8");
  cfg.Set("train.lr", "0.02");
  cfg.Set("train.epochs", "2");
  cfg.Set("train.decay_every", "0");
  cfg.Set("vad.n_trees", "10");
  cfg.Set("vad.max_frames", "3000");
  cfg.Set("plda.iters", "5");
  cfg.Set("max_order", "3");
  return cfg;
}

}  // namespace

TEST(RunConfig, UnknownKeyRejected) {
  RunConfig cfg;
  EXPECT_THROW(cfg.Set("no.such.key", "1"), UsageError);
}

TEST(RunConfig, FileLoadAndOverride) {
  const std::string path = FreshDir("ffsv_cfg") + "/run.cfg";
  std::ofstream(path) << "# comment\nseed=7\nsnr_range=5,15\n";
  RunConfig cfg;
  cfg.LoadFile(path);
  EXPECT_EQ(7u, cfg.Seed());
  const auto range = cfg.GetRange("snr_range");
  EXPECT_DOUBLE_EQ(5.0, range[0]);
  EXPECT_DOUBLE_EQ(15.0, range[1]);
  cfg.Set("seed", "9");
  EXPECT_EQ(9u, cfg.Seed());
}

TEST(RunConfig, BadValueDiagnosed) {
  RunConfig cfg;
  cfg.Set("seed", "not_a_number");
  EXPECT_THROW(cfg.Seed(), UsageError);
  cfg.Set("snr_range", "5");
  EXPECT_THROW(cfg.GetRange("snr_range"), UsageError);
}

TEST(Manifest, RoundTripAndDuplicateDetection) {
  const std::string dir = FreshDir("ffsv_manifest");
  const std::string path = dir + "/m.tsv";
  WriteManifest(path, {{"b_utt", "spk1", "/tmp/b.wav", 0, "synthetic", "clean"},
                       {"a_utt", "spk0", "/tmp/a.wav", 1, "F", "farfield"}});
  const auto rows = LoadManifest(path);
  ASSERT_EQ(2u, rows.size());
  EXPECT_EQ("a_utt", rows[0].utt_id);  // canonical order
  EXPECT_EQ(1, rows[0].channel);
  EXPECT_EQ("farfield", rows[0].condition);

  std::ofstream(path, std::ios::app) << "a_utt\tspk0\t/tmp/a.wav\t0\tF\tclean\n";
  EXPECT_THROW(LoadManifest(path), Error);
}

TEST(Synth, UtteranceDeterministicAndSpeakerDependent) {
  SynthConfig sc;
  sc.seed = 5;
  const Waveform a = SynthUtterance(0, 0, sc);
  const Waveform b = SynthUtterance(0, 0, sc);
  EXPECT_EQ(a.samples, b.samples);
  const Waveform c = SynthUtterance(1, 0, sc);
  EXPECT_NE(a.samples, c.samples);
}

TEST(Pipeline, EndToEndTinyRun) {
  const std::string dir = FreshDir("ffsv_e2e");
  RunConfig cfg = TinyConfig();

  ASSERT_EQ(0, CmdSynthDataset(dir + "/clean", cfg));
  const std::string clean_manifest = dir + "/clean/manifest.tsv";
  ASSERT_TRUE(fs::exists(clean_manifest));
  ASSERT_TRUE(fs::exists(clean_manifest + ".log"));
  EXPECT_EQ(20u, LoadManifest(clean_manifest).size());

  // Logs carry the resolved config, seed, input digests and wall time.
  const std::string synth_log = ReadFileText(clean_manifest + ".log");
  EXPECT_NE(synth_log.find("config seed=42"), std::string::npos) << synth_log;
  EXPECT_NE(synth_log.find("config synth.speakers=4"), std::string::npos);
  EXPECT_NE(synth_log.find("wall_time_ms"), std::string::npos);

  ASSERT_EQ(0, CmdSimulate(clean_manifest, "", dir + "/far", cfg));
  const std::string far_manifest = dir + "/far/manifest.tsv";
  EXPECT_EQ(20u, LoadManifest(far_manifest).size());
  const std::string sim_log = ReadFileText(far_manifest + ".log");
  EXPECT_NE(sim_log.find("input " + clean_manifest + " fnv1a="), std::string::npos)
      << sim_log;

  ASSERT_EQ(0, CmdExtractFeatures(clean_manifest, dir + "/clean.feat", cfg));
  ASSERT_EQ(0, CmdExtractFeatures(far_manifest, dir + "/far.feat", cfg));

  ASSERT_EQ(0, CmdTrainVad(clean_manifest, far_manifest, dir + "/gvad.mdl", cfg));
  ASSERT_TRUE(fs::exists(dir + "/gvad.mdl"));

  ASSERT_EQ(0, CmdTrain({dir + "/clean.feat"}, {clean_manifest}, dir + "/net.mdl", cfg));
  // The training log carries one epoch<TAB>lr<TAB>loss line per epoch.
  const std::string train_log = ReadFileText(dir + "/net.mdl.log");
  EXPECT_NE(train_log.find("0\t0.02\t"), std::string::npos) << train_log;

  cfg.Set("finetune.epochs", "1");
  ASSERT_EQ(0, CmdFinetune({dir + "/far.feat"}, {far_manifest}, dir + "/net.mdl",
                           dir + "/net_ft.mdl", cfg));

  ASSERT_EQ(0, CmdExtractEmbeddings(dir + "/clean.feat", dir + "/net.mdl",
                                    dir + "/clean.emb", cfg));
  ASSERT_EQ(0, CmdExtractEmbeddings(dir + "/far.feat", dir + "/net.mdl",
                                    dir + "/far.emb", cfg));

  ASSERT_EQ(0, CmdTrainPlda(dir + "/clean.emb", clean_manifest,
                            dir + "/plda.mdl", cfg));

  // Trials: clean enrollments against far-field tests.
  const auto clean_rows = LoadManifest(clean_manifest);
  const auto far_rows = LoadManifest(far_manifest);
  const std::string trials = dir + "/trials.tsv";
  {
    std::ofstream os(trials);
    for (size_t i = 0; i < 4; i++)
      for (size_t j = 0; j < far_rows.size(); j += 5) {
        const auto &e = clean_rows[i * 5];
        const auto &t = far_rows[j];
        os << e.utt_id << '\t' << t.utt_id << '\t'
           << (e.speaker_id == t.speaker_id ? "target" : "nontarget") << '\n';
      }
  }

  ScoreOptions sopts;
  ASSERT_EQ(0, CmdScore(trials, {dir + "/clean.emb", dir + "/far.emb"},
                        dir + "/scores.tsv", sopts, cfg));

  ScoreOptions plda_opts;
  plda_opts.scorer = "plda";
  plda_opts.plda_model_path = dir + "/plda.mdl";
  ASSERT_EQ(0, CmdScore(trials, {dir + "/clean.emb", dir + "/far.emb"},
                        dir + "/scores_plda.tsv", plda_opts, cfg));

  ScoreOptions eda_opts;
  eda_opts.eda = true;
  eda_opts.manifest_path = dir + "/eda_manifest.tsv";
  eda_opts.model_path = dir + "/net.mdl";
  eda_opts.gvad_model_path = dir + "/gvad.mdl";
  {
    std::vector<ManifestRow> all = clean_rows;
    all.insert(all.end(), far_rows.begin(), far_rows.end());
    WriteManifest(eda_opts.manifest_path, all);
  }
  ASSERT_EQ(0, CmdScore(trials, {dir + "/clean.emb", dir + "/far.emb"},
                        dir + "/scores_eda.tsv", eda_opts, cfg));

  ASSERT_EQ(0, CmdEvaluate(trials, dir + "/scores.tsv", cfg));
  const std::string metrics = ReadFileText(dir + "/scores.tsv.metrics");
  EXPECT_EQ(0u, metrics.find("eer="));
  EXPECT_NE(metrics.find("minDCF="), std::string::npos);

  // A second simulate run with the same seed must be byte-identical.
  ASSERT_EQ(0, CmdSimulate(clean_manifest, "", dir + "/far2", cfg));
  for (const auto &row : LoadManifest(far_manifest)) {
    const std::string again = dir + "/far2/" + fs::path(row.path).filename().string();
    ASSERT_EQ(FileDigest(row.path), FileDigest(again)) << row.utt_id;
  }
}

TEST(Pipeline, SingleChannelFusionEqualsMultiOnSingleChannelData) {
  const std::string dir = FreshDir("ffsv_fusion");
  RunConfig cfg = TinyConfig();
  cfg.Set("synth.speakers", "3");
  cfg.Set("synth.utts_per_speaker", "3");

  ASSERT_EQ(0, CmdSynthDataset(dir + "/clean", cfg));
  const std::string manifest = dir + "/clean/manifest.tsv";
  ASSERT_EQ(0, CmdExtractFeatures(manifest, dir + "/c.feat", cfg));
  ASSERT_EQ(0, CmdTrain({dir + "/c.feat"}, {manifest}, dir + "/net.mdl", cfg));
  ASSERT_EQ(0, CmdExtractEmbeddings(dir + "/c.feat", dir + "/net.mdl",
                                    dir + "/c.emb", cfg));

  const auto rows = LoadManifest(manifest);
  const std::string trials = dir + "/trials.tsv";
  {
    std::ofstream os(trials);
    os << rows[0].utt_id << '\t' << rows[1].utt_id << "\ttarget\n";
    os << rows[0].utt_id << '\t' << rows[4].utt_id << "\tnontarget\n";
  }
  ScoreOptions multi;
  ASSERT_EQ(0, CmdScore(trials, {dir + "/c.emb"}, dir + "/multi.tsv", multi, cfg));
  ScoreOptions single;
  single.multi = false;
  single.channel = 0;
  ASSERT_EQ(0, CmdScore(trials, {dir + "/c.emb"}, dir + "/single.tsv", single, cfg));

  const auto a = LoadScores(dir + "/multi.tsv");
  const auto b = LoadScores(dir + "/single.tsv");
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); i++) ASSERT_DOUBLE_EQ(a[i].score, b[i].score);
}

TEST(Pipeline, SimulateReportsPerRowFailures) {
  const std::string dir = FreshDir("ffsv_simfail");
  RunConfig cfg = TinyConfig();
  // One good row, one row pointing at a missing file.
  const Waveform good = SynthUtterance(0, 0, cfg.Synth());
  WriteWav(dir + "/good.wav", good);
  WriteManifest(dir + "/m.tsv",
                {{"good", "spk0", dir + "/good.wav", 0, "synthetic", "clean"},
                 {"missing", "spk1", dir + "/nope.wav", 0, "synthetic", "clean"}});
  EXPECT_EQ(1, CmdSimulate(dir + "/m.tsv", "", dir + "/out", cfg));
  // The good row still produced output.
  EXPECT_EQ(1u, LoadManifest(dir + "/out/manifest.tsv").size());
}

TEST(Pipeline, EvaluatePrintsHandCaseReport) {
  const std::string dir = FreshDir("ffsv_eval_cmd");
  const std::string trials = dir + "/trials.tsv";
  const std::string scores = dir + "/scores.tsv";
  {
    std::ofstream ts(trials);
    std::ofstream ss(scores);
    const double t_scores[3] = {0.9, 0.8, 0.4};
    const double n_scores[3] = {0.5, 0.2, 0.1};
    for (int i = 0; i < 3; i++) {
      ts << "e" << i << "\tt" << i << "\ttarget\n";
      ss << "e" << i << "\tt" << i << "\t" << t_scores[i] << "\n";
    }
    for (int i = 0; i < 3; i++) {
      ts << "e" << i << "\tn" << i << "\tnontarget\n";
      ss << "e" << i << "\tn" << i << "\t" << n_scores[i] << "\n";
    }
  }
  RunConfig cfg;
  ASSERT_EQ(0, CmdEvaluate(trials, scores, cfg));
  const std::string report = ReadFileText(scores + ".metrics");
  EXPECT_EQ(0u, report.find("eer=33.33 minDCF=0.333 threshold=0.800000")) << report;
}

TEST(Cli, BinarySmokeTest) {
  const std::string dir = FreshDir("ffsv_cli");
  const std::string bin = FFSV_CLI_PATH;
  ASSERT_TRUE(fs::exists(bin)) << bin;

  const std::string synth_cmd =
      bin + " --set synth.speakers=2 --set synth.utts_per_speaker=2" +
      " --set synth.seconds=1.0 synth-dataset --out " + dir + "/clean > /dev/null";
  EXPECT_EQ(0, std::system(synth_cmd.c_str()));
  EXPECT_TRUE(fs::exists(dir + "/clean/manifest.tsv"));

  // Unknown config key is a usage error: exit code 2.
  const std::string bad_cmd =
      bin + " --set bogus.key=1 synth-dataset --out " + dir + "/x 2> /dev/null";
  EXPECT_EQ(2, WEXITSTATUS(std::system(bad_cmd.c_str())));

  // Missing upstream artifact: exit code 1.
  const std::string missing_cmd = bin + " evaluate --trials " + dir +
                                  "/nope.tsv --scores " + dir +
                                  "/nope_scores.tsv 2> /dev/null";
  EXPECT_EQ(1, WEXITSTATUS(std::system(missing_cmd.c_str())));
}
