// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vtd/checkpoint.hpp"
#include "vtd/errors.hpp"

namespace vtd {
namespace {

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  // splitmix64 finalizer over (root, stream).
  std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<Example> to_examples(const std::vector<SynthUtterance>& set) {
  std::vector<Example> out;
  out.reserve(set.size());
  for (const auto& u : set)
    out.push_back(u.meta.transcript
                      ? phonetic_example(u.meta.id, u.features, *u.meta.transcript)
                      : discriminative_example(u.meta.id, u.features, *u.meta.binary_label));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  synth.validate();
  train.validate();
  if (hidden_dim < 1 || num_layers < 1) throw ConfigError("bad model size");
  if (phrase_epochs < 1) throw ConfigError("phrase_epochs must be >= 1");
  for (double f : fa_targets)
    if (!(f >= 0.0)) throw ConfigError("FA targets must be >= 0");
}

namespace {

// Rejects keys that no field reads, so that typos do not silently fall back
// to defaults.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
  }
}

}  // namespace

void ExperimentConfig::apply_root_seed() {
  synth.seed = mix_seed(seed, 1);
  train.seed = mix_seed(seed, 2);
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
  check_keys(j,
             {"n_phones", "keyword", "n_confusables", "phonetic_count",
              "discriminative_positive", "discriminative_negative", "test_positive",
              "test_negative", "confusable_fraction", "feature_dim", "min_phone_frames",
              "max_phone_frames", "min_utterance_phones", "max_utterance_phones",
              "template_scale", "twin_distance", "clean_noise", "device_noise",
              "device_channel", "phonetic_device_fraction", "variant_rate",
              "variant_distance", "seed"},
             "synth");
  s.n_phones = j.value("n_phones", s.n_phones);
  s.keyword = j.value("keyword", s.keyword);
  s.n_confusables = j.value("n_confusables", s.n_confusables);
  s.phonetic_count = j.value("phonetic_count", s.phonetic_count);
  s.discriminative_positive = j.value("discriminative_positive", s.discriminative_positive);
  s.discriminative_negative = j.value("discriminative_negative", s.discriminative_negative);
  s.test_positive = j.value("test_positive", s.test_positive);
  s.test_negative = j.value("test_negative", s.test_negative);
  s.confusable_fraction = j.value("confusable_fraction", s.confusable_fraction);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.min_phone_frames = j.value("min_phone_frames", s.min_phone_frames);
  s.max_phone_frames = j.value("max_phone_frames", s.max_phone_frames);
  s.min_utterance_phones = j.value("min_utterance_phones", s.min_utterance_phones);
  s.max_utterance_phones = j.value("max_utterance_phones", s.max_utterance_phones);
  s.template_scale = j.value("template_scale", s.template_scale);
  s.twin_distance = j.value("twin_distance", s.twin_distance);
  s.clean_noise = j.value("clean_noise", s.clean_noise);
  s.device_noise = j.value("device_noise", s.device_noise);
  s.device_channel = j.value("device_channel", s.device_channel);
  s.phonetic_device_fraction = j.value("phonetic_device_fraction", s.phonetic_device_fraction);
  s.variant_rate = j.value("variant_rate", s.variant_rate);
  s.variant_distance = j.value("variant_distance", s.variant_distance);
  s.seed = j.value("seed", s.seed);
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"n_phones", s.n_phones},
          {"keyword", s.keyword},
          {"n_confusables", s.n_confusables},
          {"phonetic_count", s.phonetic_count},
          {"discriminative_positive", s.discriminative_positive},
          {"discriminative_negative", s.discriminative_negative},
          {"test_positive", s.test_positive},
          {"test_negative", s.test_negative},
          {"confusable_fraction", s.confusable_fraction},
          {"feature_dim", s.feature_dim},
          {"min_phone_frames", s.min_phone_frames},
          {"max_phone_frames", s.max_phone_frames},
          {"min_utterance_phones", s.min_utterance_phones},
          {"max_utterance_phones", s.max_utterance_phones},
          {"template_scale", s.template_scale},
          {"twin_distance", s.twin_distance},
          {"clean_noise", s.clean_noise},
          {"device_noise", s.device_noise},
          {"device_channel", s.device_channel},
          {"phonetic_device_fraction", s.phonetic_device_fraction},
          {"variant_rate", s.variant_rate},
          {"variant_distance", s.variant_distance},
          {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  check_keys(j,
             {"learning_rate", "batch_size_per_worker", "workers", "grad_clip_norm",
              "beta1", "beta2", "epsilon", "mtl_mix", "discriminative_weight", "epochs",
              "halve_lr_on_plateau", "bucketing", "seed"},
             "train");
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size_per_worker = j.value("batch_size_per_worker", c.batch_size_per_worker);
  c.workers = j.value("workers", c.workers);
  c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.mtl_mix = j.value("mtl_mix", c.mtl_mix);
  c.discriminative_weight = j.value("discriminative_weight", c.discriminative_weight);
  c.epochs = j.value("epochs", c.epochs);
  c.halve_lr_on_plateau = j.value("halve_lr_on_plateau", c.halve_lr_on_plateau);
  c.bucketing = j.value("bucketing", c.bucketing);
  c.seed = j.value("seed", c.seed);
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size_per_worker", c.batch_size_per_worker},
          {"workers", c.workers},
          {"grad_clip_norm", c.grad_clip_norm},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"mtl_mix", c.mtl_mix},
          {"discriminative_weight", c.discriminative_weight},
          {"epochs", c.epochs},
          {"halve_lr_on_plateau", c.halve_lr_on_plateau},
          {"bucketing", c.bucketing},
          {"seed", c.seed}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  check_keys(j,
             {"synth", "train", "hidden_dim", "num_layers", "phrase_epochs", "fa_targets",
              "length_normalized", "seed", "out_dir"},
             "experiment config");
  try {
    if (j.contains("synth")) from_json(j["synth"], c.synth);
    if (j.contains("train")) from_json(j["train"], c.train);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.phrase_epochs = j.value("phrase_epochs", c.phrase_epochs);
    c.fa_targets = j.value("fa_targets", c.fa_targets);
    c.length_normalized = j.value("length_normalized", c.length_normalized);
    c.seed = j.value("seed", c.seed);
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"synth", to_json(c.synth)},
          {"train", to_json(c.train)},
          {"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers},
          {"phrase_epochs", c.phrase_epochs},
          {"fa_targets", c.fa_targets},
          {"length_normalized", c.length_normalized},
          {"seed", c.seed},
          {"out_dir", c.out_dir.string()}};
}

DetectionScore score_input(const MtlModel& model, Head head, const Matrix& input,
                           const KeywordSpec& keyword) {
  ModelTape tape(model);
  tape.forward(input);
  const PosteriorGram post = tape.posteriors(head);
  return head == Head::kPhonetic ? score_keyword(post, keyword) : score_discriminative(post);
}

std::vector<ScoredSegment> score_test_set(const MtlModel& model, Head head,
                                          const std::vector<Example>& examples,
                                          const std::vector<SynthUtterance>& meta,
                                          const KeywordSpec& keyword, bool length_normalized) {
  if (examples.size() != meta.size()) throw ShapeError("examples/metadata size mismatch");
  std::vector<ScoredSegment> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const DetectionScore s = score_input(model, head, examples[i].input, keyword);
    out.push_back({examples[i].id, length_normalized ? s.length_normalized : s.log_prob,
                   meta[i].meta.binary_label.value_or(false),
                   meta[i].meta.duration_s.value_or(0.0)});
  }
  return out;
}

const ModelReport& DemoReport::model(const std::string& label) const {
  for (const auto& m : models)
    if (m.label == label) return m;
  throw ConfigError("no model labelled '" + label + "' in the report");
}

DemoReport run_demo(const ExperimentConfig& config,
                    const std::function<void(const std::string&)>& log) {
  ExperimentConfig cfg = config;
  cfg.apply_root_seed();
  cfg.validate();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  auto stage = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error&) {
      say(std::string("stage failed: ") + name);
      throw;
    }
  };

  const SynthCorpus corpus = stage("synth", [&] { return generate_synthetic_corpus(cfg.synth); });
  const auto phon = to_examples(corpus.phonetic);
  const auto disc = to_examples(corpus.discriminative);
  const auto test = to_examples(corpus.test);
  say("synthetic corpus: " + std::to_string(phon.size()) + " phonetic, " +
      std::to_string(disc.size()) + " discriminative, " + std::to_string(test.size()) +
      " test utterances");

  ModelConfig mc;
  mc.input_dim = static_cast<int>(phon.front().input.cols());
  mc.hidden_dim = cfg.hidden_dim;
  mc.num_layers = cfg.num_layers;
  mc.phonetic_alphabet = corpus.alphabet;

  TrainOptions opts;
  opts.warn = [&](const std::string& w) { say("warning: " + w); };
  auto out_sub = [&](const char* name) {
    return cfg.out_dir.empty() ? std::filesystem::path{} : cfg.out_dir / name;
  };

  DemoReport report;
  report.fa_targets = cfg.fa_targets;

  // 1. Baseline phonetic model.
  ModelConfig base_cfg = mc;
  base_cfg.has_discriminative_head = false;
  opts.out_dir = out_sub("baseline");
  say("training baseline phonetic model");
  TrainResult base = stage("train baseline", [&] {
    return train(MtlModel::initialized(base_cfg, mix_seed(cfg.seed, 10)), phon, {}, cfg.train,
                 TrainMode::kBaseline, opts);
  });

  TrainConfig phrase_train = cfg.train;
  phrase_train.epochs = cfg.phrase_epochs;

  // 2. Phrase-specific model from scratch.
  ModelConfig phrase_cfg = mc;
  phrase_cfg.has_phonetic_head = false;
  opts.out_dir = out_sub("phrase");
  say("training phrase-specific model from scratch");
  TrainResult phrase = stage("train phrase", [&] {
    return train(MtlModel::initialized(phrase_cfg, mix_seed(cfg.seed, 11)), {}, disc,
                 phrase_train, TrainMode::kPhrase, opts);
  });

  // 3. Phrase-specific model initialised from the baseline trunk.
  MtlModel ft_init = MtlModel::initialized(phrase_cfg, mix_seed(cfg.seed, 12));
  ft_init.trunk = base.model.trunk;
  opts.out_dir = out_sub("finetune");
  say("fine-tuning phrase-specific model from the baseline");
  TrainResult finetune = stage("train finetune", [&] {
    return train(std::move(ft_init), {}, disc, phrase_train, TrainMode::kFinetune, opts);
  });

  // 4/5. Joint model.
  opts.out_dir = out_sub("mtl");
  say("training MTL model");
  TrainResult mtl = stage("train mtl", [&] {
    return train(MtlModel::initialized(mc, mix_seed(cfg.seed, 13)), phon, disc, cfg.train,
                 TrainMode::kMtl, opts);
  });
  for (const TrainResult* r : {&base, &phrase, &finetune, &mtl})
    report.final_train_loss.push_back(r->epoch_loss.back());

  const std::vector<std::pair<std::string, std::pair<const MtlModel*, Head>>> scorers = {
      {kBaselineLabel, {&base.model, Head::kPhonetic}},
      {kPhraseLabel, {&phrase.model, Head::kDiscriminative}},
      {kFinetuneLabel, {&finetune.model, Head::kDiscriminative}},
      {kMtlPhoneticLabel, {&mtl.model, Head::kPhonetic}},
      {kMtlPhraseLabel, {&mtl.model, Head::kDiscriminative}},
  };
  stage("score", [&] {
    for (const auto& [label, which] : scorers) {
      ModelReport m;
      m.label = label;
      m.scores = score_test_set(*which.first, which.second, test, corpus.test, corpus.keyword,
                                cfg.length_normalized);
      report.negative_hours = negative_hours(m.scores);
      m.curve = det_curve(m.scores, report.negative_hours);
      for (double fa : cfg.fa_targets) m.fr_at_targets.push_back(fr_at_fa(m.curve, fa));
      report.models.push_back(std::move(m));
    }
    return 0;
  });

  if (!cfg.out_dir.empty()) {
    stage("report", [&] {
      std::vector<LabeledCurve> curves;
      for (std::size_t i = 0; i < report.models.size(); ++i) {
        const auto& m = report.models[i];
        const std::string stem = "model" + std::to_string(i + 1);
        write_scored_segments(cfg.out_dir / (stem + "_scores.csv"), m.scores);
        write_det_csv(cfg.out_dir / (stem + "_det.csv"), m.curve);
        curves.push_back({m.label, m.curve});
      }
      write_det_svg(cfg.out_dir / "det.svg", curves);
      std::ofstream md(cfg.out_dir / "report.md", std::ios::trunc);
      md << format_report(report);
      std::ofstream js(cfg.out_dir / "config.json", std::ios::trunc);
      js << to_json(config).dump(2) << "\n";
      return 0;
    });
  }
  return report;
}

std::string format_report(const DemoReport& report) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", report.negative_hours);
  os << "False-reject proportion at fixed false alarms per hour (" << buf
     << " h of negative audio)\n\n| model |";
  for (double fa : report.fa_targets) {
    std::snprintf(buf, sizeof(buf), " FR @ %g FA/h |", fa);
    os << buf;
  }
  os << "\n|---|";
  for (std::size_t i = 0; i < report.fa_targets.size(); ++i) os << "---|";
  os << "\n";
  for (const auto& m : report.models) {
    os << "| " << m.label << " |";
    for (double fr : m.fr_at_targets) {
      std::snprintf(buf, sizeof(buf), " %.4f |", fr);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace vtd
