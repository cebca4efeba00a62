// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Joint training of the phonetic and discriminative heads over a shared
// trunk:  C_MTL = C_P + lambda * C_D  (lambda = 1 unless overridden).
//
// C_P is the mean phonetic CTC loss over the phonetic sub-batch. C_D is the
// mean over the discriminative sub-batch of CTC({TRIGGER}) for positives and
// the blank cross-entropy -sum_t log y_t(blank) for negatives.
//
// Synchronous data parallelism: each step's utterances are split into
// contiguous per-worker shards, workers back-propagate against the same
// read-only parameters, and one reducer sums their gradients in worker order
// before a single clip + Adam update.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vtd/data.hpp"
#include "vtd/nnet.hpp"
#include "vtd/optim.hpp"

namespace vtd {

struct TrainConfig {
  double learning_rate = 0.0032;
  std::size_t batch_size_per_worker = 16;
  int workers = 1;
  double grad_clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Fraction of each MTL step's utterances drawn from the discriminative set.
  double mtl_mix = 0.25;
  double discriminative_weight = 1.0;
  int epochs = 10;
  bool halve_lr_on_plateau = false;
  bool bucketing = true;
  std::uint64_t seed = 1;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  std::size_t step_batch_size() const {
    return batch_size_per_worker * static_cast<std::size_t>(workers);
  }
};

enum class TrainMode {
  kBaseline,  // phonetic head on the phonetic set
  kMtl,       // both heads, both sets
  kFinetune,  // discriminative set only, trunk initialised from a baseline
  kPhrase,    // discriminative set only, from scratch
};

TrainMode parse_train_mode(const std::string& s);
const char* to_string(TrainMode m);

/// One utterance ready for the network.
struct Example {
  std::string id;
  Matrix input;          // T' x D' stacked windows
  LabelSequence target;  // phone string, {TRIGGER}, or empty
};

/// Phonetic example from a transcript.
Example phonetic_example(std::string id, const FeatureSequence& feats,
                         LabelSequence transcript, int context = 3, int factor = 3);
/// Discriminative example: target {TRIGGER} when positive, empty otherwise.
Example discriminative_example(std::string id, const FeatureSequence& feats,
                               bool positive, int context = 3, int factor = 3);

/// Loads every manifest entry's features (features_path, or audio_path run
/// through the frontend) and builds examples of the matching kind.
std::vector<Example> load_examples(const Manifest& manifest,
                                   const std::filesystem::path& base_dir,
                                   const FrontendConfig& frontend = {});

struct MtlLoss {
  double c_p = 0.0;
  double c_d = 0.0;
  double c_mtl = 0.0;
};

struct GradientResult {
  MtlLoss loss;
  MtlModel grads;
  std::size_t used_phonetic = 0;
  std::size_t used_discriminative = 0;
  std::size_t skipped = 0;  // infeasible targets
};

/// Losses and gradients of C_MTL on one step's sub-batches, using
/// `cfg.workers` threads. Either span may be empty (that term is then 0).
GradientResult compute_gradients(const MtlModel& model,
                                 std::span<const Example* const> phonetic,
                                 std::span<const Example* const> discriminative,
                                 const TrainConfig& cfg);

struct StepStats {
  MtlLoss loss;
  double grad_norm = 0.0;  // before clipping
  std::size_t skipped = 0;
  bool applied = false;
};

/// compute_gradients -> clip -> Adam. Steps whose targets are all
/// infeasible are skipped (applied = false). NaN loss throws NumericError.
StepStats mtl_step(MtlModel& model, Adam& adam,
                   std::span<const Example* const> phonetic,
                   std::span<const Example* const> discriminative,
                   const TrainConfig& cfg);

struct LossLogRow {
  std::int64_t step = 0;
  int epoch = 0;
  double c_p = 0.0;
  double c_d = 0.0;
  double c_mtl = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  MtlModel model;
  std::vector<LossLogRow> log;
  std::vector<double> epoch_loss;  // mean c_mtl over each epoch's steps
};

struct TrainOptions {
  // When set: ckpt_epoch_<k>.vtdm per epoch, final.vtdm and loss_log.csv.
  std::filesystem::path out_dir;
  std::function<void(const std::string&)> warn;
};

TrainResult train(MtlModel model, std::span<const Example> phonetic,
                  std::span<const Example> discriminative, const TrainConfig& cfg,
                  TrainMode mode, const TrainOptions& options = {});

/// "step,c_p,c_d,c_mtl,grad_norm" with %.17g values.
void write_loss_log(const std::filesystem::path& path, const std::vector<LossLogRow>& log);

}  // namespace vtd
