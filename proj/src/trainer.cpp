// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "vtd/audio_io.hpp"
#include "vtd/checkpoint.hpp"
#include "vtd/ctc.hpp"
#include "vtd/errors.hpp"

namespace vtd {
namespace {

struct Partial {
  MtlModel grads;
  double sum_p = 0.0;
  double sum_d = 0.0;
};

bool feasible(const Example& e) {
  return min_frames_for(e.target) <= static_cast<int>(e.input.rows()) && e.input.rows() > 0;
}

void add_into(MtlModel& dst, const MtlModel& src) {
  std::vector<std::span<const double>> from;
  for_each_tensor(src, [&](const std::string&, std::span<const double> s) { from.push_back(s); });
  std::size_t i = 0;
  for_each_tensor(dst, [&](const std::string&, std::span<double> s) {
    const auto f = from[i++];
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += f[k];
  });
}

// Loss and dLoss/dlogits (scaled) for one example on one head.
double example_loss(const Matrix& log_probs, const Example& e, bool discriminative,
                    int blank, double scale, Matrix& d_logits) {
  if (discriminative && e.target.empty()) {
    d_logits = log_probs.array().exp().matrix();
    d_logits.col(blank).array() -= 1.0;
    d_logits *= scale;
    return blank_only_loss(log_probs, blank);
  }
  CtcResult r = ctc_loss(log_probs, e.target, blank, true);
  d_logits = std::move(r.grad_logits) * scale;
  return r.loss;
}

void run_shard(const MtlModel& model, std::span<const Example* const> phon,
               std::span<const Example* const> disc, double scale_p, double scale_d,
               Partial& out) {
  out.grads = model.zeros_like();
  const int phon_blank = model.config.phonetic_alphabet.blank;
  const int disc_blank = Alphabet::discriminative().blank;
  Matrix d_logits;
  for (const Example* e : phon) {
    ModelTape tape(model);
    tape.forward(e->input);
    out.sum_p += example_loss(tape.log_probs(Head::kPhonetic), *e, false, phon_blank, scale_p,
                              d_logits);
    tape.backward(&d_logits, nullptr, out.grads);
  }
  for (const Example* e : disc) {
    ModelTape tape(model);
    tape.forward(e->input);
    out.sum_d +=
        example_loss(tape.log_probs(Head::kDiscriminative), *e, true, disc_blank, scale_d,
                     d_logits);
    tape.backward(nullptr, &d_logits, out.grads);
  }
}

template <typename T>
std::span<const T> shard(std::span<const T> all, int w, int workers) {
  const std::size_t n = all.size();
  const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
  return all.subspan(lo, hi - lo);
}

Example make_example(std::string id, const FeatureSequence& feats, LabelSequence target,
                     int context, int factor) {
  return {std::move(id), stack_and_subsample(feats, context, factor).windows,
          std::move(target)};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size_per_worker < 1) throw ConfigError("batch_size_per_worker must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(mtl_mix >= 0.0 && mtl_mix <= 1.0)) throw ConfigError("mtl_mix must lie in [0, 1]");
  if (!(discriminative_weight >= 0.0)) throw ConfigError("discriminative_weight must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "baseline") return TrainMode::kBaseline;
  if (s == "mtl") return TrainMode::kMtl;
  if (s == "finetune") return TrainMode::kFinetune;
  if (s == "phrase") return TrainMode::kPhrase;
  throw ConfigError("unknown training mode '" + s + "'");
}

const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kMtl: return "mtl";
    case TrainMode::kFinetune: return "finetune";
    case TrainMode::kPhrase: return "phrase";
  }
  return "baseline";
}

Example phonetic_example(std::string id, const FeatureSequence& feats,
                         LabelSequence transcript, int context, int factor) {
  return make_example(std::move(id), feats, std::move(transcript), context, factor);
}

Example discriminative_example(std::string id, const FeatureSequence& feats, bool positive,
                               int context, int factor) {
  return make_example(std::move(id), feats,
                      positive ? LabelSequence{kTriggerSymbol} : LabelSequence{}, context,
                      factor);
}

std::vector<Example> load_examples(const Manifest& manifest,
                                   const std::filesystem::path& base_dir,
                                   const FrontendConfig& frontend) {
  std::vector<Example> out;
  out.reserve(manifest.size());
  for (const Utterance& u : manifest) {
    u.validate();
    FeatureSequence feats;
    if (!u.features_path.empty())
      feats = read_features(resolve_path(base_dir, u.features_path));
    else if (!u.audio_path.empty())
      feats = compute_features(read_audio(resolve_path(base_dir, u.audio_path)), frontend);
    else
      throw DataError("utterance " + u.id + " has neither features_path nor audio_path");
    out.push_back(u.transcript ? phonetic_example(u.id, feats, *u.transcript)
                               : discriminative_example(u.id, feats, *u.binary_label));
  }
  return out;
}

GradientResult compute_gradients(const MtlModel& model,
                                 std::span<const Example* const> phonetic,
                                 std::span<const Example* const> discriminative,
                                 const TrainConfig& cfg) {
  if (!phonetic.empty() && !model.phonetic)
    throw ConfigError("phonetic batch given but the model has no phonetic head");
  if (!discriminative.empty() && !model.discriminative)
    throw ConfigError("discriminative batch given but the model has no discriminative head");

  GradientResult result;
  std::vector<const Example*> phon, disc;
  for (const Example* e : phonetic) (feasible(*e) ? phon.push_back(e) : void(++result.skipped));
  for (const Example* e : discriminative)
    (feasible(*e) ? disc.push_back(e) : void(++result.skipped));
  result.used_phonetic = phon.size();
  result.used_discriminative = disc.size();

  const double scale_p = phon.empty() ? 0.0 : 1.0 / static_cast<double>(phon.size());
  const double scale_d =
      disc.empty() ? 0.0 : cfg.discriminative_weight / static_cast<double>(disc.size());

  const int workers = std::max(1, cfg.workers);
  std::vector<Partial> partials(workers);
  const std::span<const Example* const> all_p(phon), all_d(disc);
  if (workers == 1) {
    run_shard(model, all_p, all_d, scale_p, scale_d, partials[0]);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        run_shard(model, shard(all_p, w, workers), shard(all_d, w, workers), scale_p,
                  scale_d, partials[w]);
      });
    for (auto& t : pool) t.join();
  }

  // Fixed-order reduction.
  result.grads = std::move(partials[0].grads);
  double sum_p = partials[0].sum_p, sum_d = partials[0].sum_d;
  for (int w = 1; w < workers; ++w) {
    add_into(result.grads, partials[w].grads);
    sum_p += partials[w].sum_p;
    sum_d += partials[w].sum_d;
  }
  result.loss.c_p = phon.empty() ? 0.0 : sum_p / static_cast<double>(phon.size());
  result.loss.c_d = disc.empty() ? 0.0 : sum_d / static_cast<double>(disc.size());
  result.loss.c_mtl = result.loss.c_p + cfg.discriminative_weight * result.loss.c_d;
  return result;
}

StepStats mtl_step(MtlModel& model, Adam& adam, std::span<const Example* const> phonetic,
                   std::span<const Example* const> discriminative, const TrainConfig& cfg) {
  GradientResult g = compute_gradients(model, phonetic, discriminative, cfg);
  StepStats stats;
  stats.loss = g.loss;
  stats.skipped = g.skipped;
  if (g.used_phonetic + g.used_discriminative == 0) return stats;
  if (!std::isfinite(g.loss.c_mtl))
    throw NumericError("non-finite loss at step " + std::to_string(adam.steps() + 1) +
                       " (c_p=" + fmt(g.loss.c_p) + ", c_d=" + fmt(g.loss.c_d) + ")");
  stats.grad_norm = clip_gradient(g.grads, cfg.grad_clip_norm);
  if (!std::isfinite(stats.grad_norm))
    throw NumericError("non-finite gradient norm at step " + std::to_string(adam.steps() + 1));
  adam.step(model, g.grads);
  stats.applied = true;
  return stats;
}

TrainResult train(MtlModel model, std::span<const Example> phonetic,
                  std::span<const Example> discriminative, const TrainConfig& cfg,
                  TrainMode mode, const TrainOptions& options) {
  cfg.validate();
  const bool use_phon = mode == TrainMode::kBaseline || mode == TrainMode::kMtl;
  const bool use_disc = mode != TrainMode::kBaseline;
  if (use_phon && phonetic.empty()) throw ConfigError("phonetic dataset is empty");
  if (use_disc && discriminative.empty())
    throw ConfigError(std::string("discriminative dataset is empty in ") + to_string(mode) +
                      " mode");
  if (use_phon && !model.phonetic) throw ConfigError("model lacks a phonetic head");
  if (use_disc && !model.discriminative) throw ConfigError("model lacks a discriminative head");

  const std::size_t step_batch = cfg.step_batch_size();
  std::size_t disc_per_step = 0, phon_per_step = 0;
  if (mode == TrainMode::kMtl) {
    if (step_batch < 2) throw ConfigError("mtl mode needs at least 2 utterances per step");
    if (cfg.mtl_mix > 0.0)
      disc_per_step = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(cfg.mtl_mix * static_cast<double>(step_batch))),
          1, step_batch - 1);
    phon_per_step = step_batch - disc_per_step;
  } else if (mode == TrainMode::kBaseline) {
    phon_per_step = step_batch;
  } else {
    disc_per_step = step_batch;
  }

  auto lengths = [](std::span<const Example> set) {
    std::vector<std::size_t> l;
    for (const auto& e : set) l.push_back(static_cast<std::size_t>(e.input.rows()));
    return l;
  };
  std::optional<BatchIterator> phon_iter, disc_iter;
  if (phon_per_step > 0)
    phon_iter.emplace(lengths(phonetic), phon_per_step, cfg.seed, cfg.bucketing);
  if (disc_per_step > 0)
    disc_iter.emplace(lengths(discriminative), disc_per_step, cfg.seed + 7919, cfg.bucketing);

  // In MTL mode the phonetic set defines the epoch; the discriminative set is
  // cycled through its own permutations.
  std::vector<std::vector<std::size_t>> disc_batches;
  std::size_t disc_pos = 0;
  std::uint64_t disc_epoch = 0;
  auto next_disc = [&]() -> const std::vector<std::size_t>& {
    if (disc_pos >= disc_batches.size()) {
      disc_batches = disc_iter->epoch(disc_epoch++);
      disc_pos = 0;
    }
    return disc_batches[disc_pos++];
  };

  Adam adam(model, cfg.adam());
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto main_batches = phon_iter ? phon_iter->epoch(static_cast<std::uint64_t>(epoch))
                                        : std::vector<std::vector<std::size_t>>{};
    const std::size_t n_steps = phon_iter ? main_batches.size() : disc_iter->batches_per_epoch();
    double epoch_sum = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t s = 0; s < n_steps; ++s) {
      std::vector<const Example*> pb, db;
      if (phon_iter)
        for (std::size_t i : main_batches[s]) pb.push_back(&phonetic[i]);
      if (disc_iter)
        for (std::size_t i : next_disc()) db.push_back(&discriminative[i]);

      const StepStats st = mtl_step(model, adam, pb, db, cfg);
      if (st.skipped > 0 && options.warn)
        options.warn("step " + std::to_string(adam.steps()) + ": skipped " +
                     std::to_string(st.skipped) + " utterance(s) with infeasible targets");
      if (!st.applied) {
        if (options.warn) options.warn("step skipped: every target in the batch is infeasible");
        continue;
      }
      result.log.push_back(
          {adam.steps(), epoch, st.loss.c_p, st.loss.c_d, st.loss.c_mtl, st.grad_norm});
      epoch_sum += st.loss.c_mtl;
      ++epoch_steps;
    }
    const double mean = epoch_steps ? epoch_sum / static_cast<double>(epoch_steps) : 0.0;
    result.epoch_loss.push_back(mean);
    if (!options.out_dir.empty())
      save_checkpoint(options.out_dir / ("ckpt_epoch_" + std::to_string(epoch + 1) + ".vtdm"),
                      model);
    if (cfg.halve_lr_on_plateau) {
      if (mean >= best) adam.set_learning_rate(adam.config().learning_rate / 2.0);
      best = std::min(best, mean);
    }
  }
  if (!options.out_dir.empty()) {
    save_checkpoint(options.out_dir / "final.vtdm", model);
    write_loss_log(options.out_dir / "loss_log.csv", result.log);
  }
  result.model = std::move(model);
  return result;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossLogRow>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "step,c_p,c_d,c_mtl,grad_norm\n";
  for (const auto& r : log)
    out << r.step << ',' << fmt(r.c_p) << ',' << fmt(r.c_d) << ',' << fmt(r.c_mtl) << ','
        << fmt(r.grad_norm) << '\n';
}

}  // namespace vtd
