// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Five-model comparison on the synthetic corpus:
//   1. baseline phonetic      - phonetic head, phonetic set, keyword scorer
//   2. phrase-specific        - discriminative head, discriminative set only
//   3. phrase-specific (init) - as 2, trunk initialised from model 1
//   4. MTL phonetic           - phonetic head of the jointly trained model
//   5. MTL phrase-specific    - discriminative head of the same model

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vtd/data.hpp"
#include "vtd/eval.hpp"
#include "vtd/nnet.hpp"
#include "vtd/scorer.hpp"
#include "vtd/trainer.hpp"

namespace vtd {

struct ExperimentConfig {
  SynthSpec synth;
  int hidden_dim = 32;
  int num_layers = 2;
  TrainConfig train;        // baseline and MTL runs
  int phrase_epochs = 40;   // discriminative-only runs (scratch and fine-tuned)
  std::vector<double> fa_targets = {0.5, 1.0, 2.0, 5.0};
  bool length_normalized = true;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;

  void validate() const;
  /// Fans the root seed out to the synthetic corpus and every training run.
  void apply_root_seed();
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
nlohmann::json to_json(const SynthSpec& s);
nlohmann::json to_json(const TrainConfig& c);
void from_json(const nlohmann::json& j, SynthSpec& s);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Scores one utterance. The phonetic head scores `keyword`; the
/// discriminative head scores {TRIGGER}.
DetectionScore score_input(const MtlModel& model, Head head, const Matrix& input,
                           const KeywordSpec& keyword);

/// Scores every example; labels/durations come from the matching synthetic
/// utterances (same order).
std::vector<ScoredSegment> score_test_set(const MtlModel& model, Head head,
                                          const std::vector<Example>& examples,
                                          const std::vector<SynthUtterance>& meta,
                                          const KeywordSpec& keyword, bool length_normalized);

struct ModelReport {
  std::string label;
  DetCurve curve;
  std::vector<double> fr_at_targets;
  std::vector<ScoredSegment> scores;
};

struct DemoReport {
  std::vector<double> fa_targets;
  double negative_hours = 0.0;
  std::vector<ModelReport> models;
  std::vector<double> final_train_loss;  // per trained model: baseline, phrase, finetune, mtl

  const ModelReport& model(const std::string& label) const;
};

inline const char* const kBaselineLabel = "baseline phonetic";
inline const char* const kPhraseLabel = "phrase-specific (scratch)";
inline const char* const kFinetuneLabel = "phrase-specific (init from baseline)";
inline const char* const kMtlPhoneticLabel = "MTL phonetic";
inline const char* const kMtlPhraseLabel = "MTL phrase-specific";

/// Trains the four networks, scores the test set with all five scorers and,
/// when cfg.out_dir is set, writes per-model CSVs, det.svg and report.md.
DemoReport run_demo(const ExperimentConfig& cfg,
                    const std::function<void(const std::string&)>& log = {});

/// Markdown table of FR at each FA target.
std::string format_report(const DemoReport& report);

}  // namespace vtd
