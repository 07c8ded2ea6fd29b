// tools/ffsv.cpp

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

// Far-field speaker verification pipeline driver.  Typical flow:
//
//   ffsv synth-dataset --out data/clean
//   ffsv simulate --manifest data/clean/manifest.tsv --out data/far
//   ffsv extract-features --manifest data/clean/manifest.tsv --out clean.feat
//   ffsv train-vad --clean-manifest ... --farfield-manifest ... --out gvad.mdl
//   ffsv train --features clean.feat --manifest ... --out net.mdl
//   ffsv extract-embeddings --features far.feat --model net.mdl --out far.emb
//   ffsv train-plda --embeddings train.emb --manifest ... --out plda.mdl
//   ffsv score --trials trials.tsv --embeddings far.emb --out scores.tsv
//   ffsv evaluate --trials trials.tsv --scores scores.tsv

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffsv/pipeline.hpp"

namespace {

ffsv::RunConfig BuildConfig(const std::string &config_path,
                            const std::vector<std::string> &overrides) {
  ffsv::RunConfig cfg;
  if (!config_path.empty()) cfg.LoadFile(config_path);
  for (const auto &kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ffsv::UsageError("--set expects key=value, got \"" + kv + "\"");
    cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"far-field speaker verification pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--set", overrides, "config override key=value (repeatable)");

  // synth-dataset
  auto *synth = app.add_subcommand("synth-dataset", "generate the toy corpus");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();

  // simulate
  auto *simulate = app.add_subcommand("simulate", "far-field augmentation of a manifest");
  std::string sim_manifest, sim_noise_dir, sim_out;
  simulate->add_option("--manifest", sim_manifest, "input manifest")->required();
  simulate->add_option("--noise-dir", sim_noise_dir,
                       "directory of noise .wav files (default: built-in synthetic bank)");
  simulate->add_option("--out", sim_out, "output directory")->required();

  // extract-features
  auto *extract = app.add_subcommand("extract-features", "feature archive from a manifest");
  std::string feat_manifest, feat_out;
  extract->add_option("--manifest", feat_manifest, "input manifest")->required();
  extract->add_option("--out", feat_out, "output feature archive")->required();

  // train-vad
  auto *train_vad = app.add_subcommand("train-vad", "train the boosted-tree VAD");
  std::string vad_clean, vad_far, vad_out;
  train_vad->add_option("--clean-manifest", vad_clean, "clean source manifest")->required();
  train_vad->add_option("--farfield-manifest", vad_far, "simulated manifest")->required();
  train_vad->add_option("--out", vad_out, "output model file")->required();

  // train
  auto *train = app.add_subcommand("train", "train the speaker embedding network");
  std::vector<std::string> train_features, train_manifest;
  std::string train_out;
  train->add_option("--features", train_features, "feature archive (repeatable)")->required();
  train->add_option("--manifest", train_manifest,
                    "manifest with speaker labels (repeatable)")->required();
  train->add_option("--out", train_out, "output model file")->required();

  // finetune
  auto *finetune = app.add_subcommand("finetune", "fine-tune a trained network");
  std::vector<std::string> ft_features, ft_manifest;
  std::string ft_in, ft_out;
  finetune->add_option("--features", ft_features, "feature archive (repeatable)")->required();
  finetune->add_option("--manifest", ft_manifest,
                       "manifest with speaker labels (repeatable)")->required();
  finetune->add_option("--model", ft_in, "input model file")->required();
  finetune->add_option("--out", ft_out, "output model file")->required();

  // extract-embeddings
  auto *embed = app.add_subcommand("extract-embeddings", "embed a feature archive");
  std::string emb_features, emb_model, emb_out;
  embed->add_option("--features", emb_features, "feature archive")->required();
  embed->add_option("--model", emb_model, "embedding network model")->required();
  embed->add_option("--out", emb_out, "output embedding archive")->required();

  // train-plda
  auto *train_plda = app.add_subcommand("train-plda", "train the PLDA backend");
  std::string plda_embeddings, plda_manifest, plda_out;
  train_plda->add_option("--embeddings", plda_embeddings, "embedding archive")->required();
  train_plda->add_option("--manifest", plda_manifest, "manifest with speaker labels")->required();
  train_plda->add_option("--out", plda_out, "output PLDA model")->required();

  // score
  auto *score = app.add_subcommand("score", "score a trial list");
  std::string score_trials, score_out, fusion_arg = "multi";
  std::vector<std::string> score_embeddings;
  ffsv::ScoreOptions sopts;
  score->add_option("--trials", score_trials, "trial list")->required();
  score->add_option("--embeddings", score_embeddings,
                    "embedding archive (repeatable)")->required();
  score->add_option("--out", score_out, "output score file")->required();
  score->add_option("--scorer", sopts.scorer, "cosine or plda (default cosine)");
  score->add_option("--plda-model", sopts.plda_model_path, "PLDA model for --scorer plda");
  score->add_option("--fusion", fusion_arg, "multi or single=<channel> (default multi)");
  score->add_flag("--eda", sopts.eda, "enrollment data augmentation");
  score->add_option("--manifest", sopts.manifest_path, "manifest with waveform paths (EDA)");
  score->add_option("--model", sopts.model_path, "embedding network model (EDA)");
  score->add_option("--gvad-model", sopts.gvad_model_path, "GVAD model (EDA)");

  // evaluate
  auto *evaluate = app.add_subcommand("evaluate", "EER / minDCF of a score file");
  std::string eval_trials, eval_scores;
  evaluate->add_option("--trials", eval_trials, "trial list with labels")->required();
  evaluate->add_option("--scores", eval_scores, "score file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ffsv::RunConfig cfg = BuildConfig(config_path, overrides);
    if (synth->parsed()) return ffsv::CmdSynthDataset(synth_out, cfg);
    if (simulate->parsed()) return ffsv::CmdSimulate(sim_manifest, sim_noise_dir, sim_out, cfg);
    if (extract->parsed()) return ffsv::CmdExtractFeatures(feat_manifest, feat_out, cfg);
    if (train_vad->parsed()) return ffsv::CmdTrainVad(vad_clean, vad_far, vad_out, cfg);
    if (train->parsed()) return ffsv::CmdTrain(train_features, train_manifest, train_out, cfg);
    if (finetune->parsed())
      return ffsv::CmdFinetune(ft_features, ft_manifest, ft_in, ft_out, cfg);
    if (embed->parsed())
      return ffsv::CmdExtractEmbeddings(emb_features, emb_model, emb_out, cfg);
    if (train_plda->parsed())
      return ffsv::CmdTrainPlda(plda_embeddings, plda_manifest, plda_out, cfg);
    if (score->parsed()) {
      if (fusion_arg == "multi") {
        sopts.multi = true;
      } else if (fusion_arg.rfind("single=", 0) == 0) {
        sopts.multi = false;
        sopts.channel = std::stoi(fusion_arg.substr(7));
      } else {
        throw ffsv::UsageError("--fusion must be multi or single=<channel>");
      }
      return ffsv::CmdScore(score_trials, score_embeddings, score_out, sopts, cfg);
    }
    if (evaluate->parsed()) return ffsv::CmdEvaluate(eval_trials, eval_scores, cfg);
  } catch (const ffsv::UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
