// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// vtd: synth | augment | featurize | train | score | eval-det | demo
//
// Exit codes: 0 success, 2 bad configuration or arguments, 3 bad or missing
// data, 4 numerical failure, 1 anything else.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vtd/audio_io.hpp"
#include "vtd/augment.hpp"
#include "vtd/checkpoint.hpp"
#include "vtd/data.hpp"
#include "vtd/errors.hpp"
#include "vtd/eval.hpp"
#include "vtd/experiment.hpp"
#include "vtd/frontend.hpp"
#include "vtd/manifest.hpp"
#include "vtd/scorer.hpp"
#include "vtd/trainer.hpp"

namespace fs = std::filesystem;
using namespace vtd;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

LabelSequence parse_phones(const std::string& s) {
  LabelSequence out;
  std::stringstream ss(s);
  for (std::string tok; ss >> tok;) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad phone index '" + tok + "' in keyword");
    }
  }
  if (out.empty()) throw ConfigError("keyword is empty");
  return out;
}

void log_line(const std::string& s) { std::cerr << s << "\n"; }

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string out_dir, config;
  std::uint64_t seed = 1;
  bool seed_set = false;
};

void run_synth(const SynthArgs& a) {
  SynthSpec spec;
  if (!a.config.empty()) {
    const auto j = read_json_file(a.config);
    try {
      from_json(j.contains("synth") ? j["synth"] : j, spec);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(a.config + ": " + e.what());
    }
  }
  if (a.seed_set) spec.seed = a.seed;
  spec.validate();
  const SynthCorpus corpus = generate_synthetic_corpus(spec);
  write_corpus(a.out_dir, corpus);
  std::ofstream(fs::path(a.out_dir) / "synth_spec.json") << to_json(spec).dump(2) << "\n";
  std::printf("wrote %zu phonetic, %zu discriminative, %zu test utterances to %s\n",
              corpus.phonetic.size(), corpus.discriminative.size(), corpus.test.size(),
              a.out_dir.c_str());
}

// ---- augment -------------------------------------------------------------

struct AugmentArgs {
  std::string manifest, out_dir, rir_dir, residual_dir;
  int n_rirs = 8, n_residuals = 4;
  double snr_min = -5.0, snr_max = 20.0;
  std::uint64_t seed = 1;
};

std::vector<fs::path> wav_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no .wav files in " + dir.string());
  return out;
}

void run_augment(const AugmentArgs& a) {
  AugmentConfig cfg;
  cfg.snr_min_db = a.snr_min;
  cfg.snr_max_db = a.snr_max;
  cfg.seed = a.seed;
  if (!(cfg.snr_min_db <= cfg.snr_max_db)) throw ConfigError("snr-min must be <= snr-max");
  if (a.rir_dir.empty() && a.n_rirs < 1) throw ConfigError("--n-rirs must be >= 1");
  if (a.residual_dir.empty() && a.n_residuals < 1)
    throw ConfigError("--n-residuals must be >= 1");

  require_file(a.manifest, "manifest");
  const fs::path base = fs::path(a.manifest).parent_path();
  const Manifest clean = read_manifest(a.manifest);
  if (clean.empty()) throw DataError("manifest is empty: " + a.manifest);
  std::vector<AudioClip> audio;
  for (const auto& u : clean) {
    if (u.audio_path.empty()) throw DataError("utterance " + u.id + " has no audio_path");
    audio.push_back(read_audio(resolve_path(base, u.audio_path)));
  }
  const int sr = audio.front().sample_rate_hz;

  std::map<std::string, ImpulseResponse> rirs;
  std::map<std::string, ResidualClip> residuals;
  std::mt19937_64 rng(a.seed ^ 0xA5A5A5A5ull);
  if (!a.rir_dir.empty()) {
    for (const auto& p : wav_files(a.rir_dir)) {
      const AudioClip c = read_wav(p);
      rirs[p.stem().string()] = {p.stem().string(), c.samples, c.sample_rate_hz};
    }
  } else {
    std::uniform_real_distribution<double> rt60(0.2, 0.8);
    for (int i = 0; i < a.n_rirs; ++i) {
      const std::string id = "rir" + std::to_string(i);
      rirs[id] = synthetic_rir(rng, sr, rt60(rng), id);
    }
  }
  if (!a.residual_dir.empty()) {
    for (const auto& p : wav_files(a.residual_dir))
      residuals[p.stem().string()] = {p.stem().string(), read_wav(p)};
  } else {
    for (int i = 0; i < a.n_residuals; ++i) {
      const std::string id = "residual" + std::to_string(i);
      residuals[id] = synthetic_residual(rng, sr, static_cast<std::size_t>(2 * sr), id);
    }
  }
  std::vector<std::string> rir_ids, residual_ids;
  for (const auto& [id, r] : rirs) rir_ids.push_back(id);
  for (const auto& [id, r] : residuals) residual_ids.push_back(id);

  const Manifest planned = build_augmented_set(clean, rir_ids, residual_ids, cfg);
  const fs::path out(a.out_dir);
  fs::create_directories(out / "augmented");
  Manifest written;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    Utterance u = planned[i];
    const AudioClip& src = audio[i / 3];
    const ImpulseResponse* rir = u.provenance.rir_id ? &rirs.at(*u.provenance.rir_id) : nullptr;
    const ResidualClip* res =
        u.provenance.residual_id ? &residuals.at(*u.provenance.residual_id) : nullptr;
    const AudioClip rendered = render_variant(src, u, rir, res);
    if (u.variant == Variant::kClean) {
      u.audio_path = fs::absolute(resolve_path(base, clean[i / 3].audio_path)).string();
    } else {
      write_wav(out / u.audio_path, rendered);
    }
    u.duration_s = static_cast<double>(rendered.samples.size()) / rendered.sample_rate_hz;
    written.push_back(std::move(u));
  }
  write_manifest(out / "augmented.jsonl", written);
  std::printf("wrote %zu utterances (%zu sources x 3 variants) to %s\n", written.size(),
              clean.size(), (out / "augmented.jsonl").c_str());
}

// ---- featurize -----------------------------------------------------------

struct FeaturizeArgs {
  std::string manifest, out_dir;
  FrontendConfig frontend;
};

void run_featurize(const FeaturizeArgs& a) {
  a.frontend.validate();
  require_file(a.manifest, "manifest");
  const fs::path base = fs::path(a.manifest).parent_path();
  Manifest m = read_manifest(a.manifest);
  for (const auto& u : m)
    if (u.audio_path.empty()) throw DataError("utterance " + u.id + " has no audio_path");
  const fs::path out(a.out_dir);
  fs::create_directories(out / "feats");
  for (auto& u : m) {
    const FeatureSequence f =
        compute_features(read_audio(resolve_path(base, u.audio_path)), a.frontend);
    u.features_path = "feats/" + u.id + ".vtdf";
    u.audio_path = fs::absolute(resolve_path(base, u.audio_path)).string();
    write_features(out / u.features_path, f);
  }
  write_manifest(out / "features.jsonl", m);
  std::printf("featurized %zu utterances into %s\n", m.size(), out.c_str());
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string mode = "mtl", phonetic_manifest, disc_manifest, config, out_dir, init;
  int hidden = 32, layers = 2, n_phones = 0, epochs = 0, workers = 0;
  std::uint64_t seed = 1;
  FrontendConfig frontend;
};

TrainConfig load_train_config(const std::string& path) {
  TrainConfig c;
  if (path.empty()) return c;
  const auto j = read_json_file(path);
  try {
    from_json(j.contains("train") ? j["train"] : j, c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

int infer_phone_count(const Manifest& m) {
  int mx = 0;
  for (const auto& u : m)
    if (u.transcript)
      for (int p : *u.transcript) mx = std::max(mx, p);
  return mx;
}

void run_train(const TrainArgs& a) {
  const TrainMode mode = parse_train_mode(a.mode);
  TrainConfig cfg = load_train_config(a.config);
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.workers > 0) cfg.workers = a.workers;
  cfg.seed = a.seed;
  cfg.validate();
  a.frontend.validate();

  const bool use_phon = mode == TrainMode::kBaseline || mode == TrainMode::kMtl;
  const bool use_disc = mode != TrainMode::kBaseline;
  if (use_phon && a.phonetic_manifest.empty())
    throw ConfigError(std::string(to_string(mode)) + " mode needs --phonetic-manifest");
  if (use_disc && a.disc_manifest.empty())
    throw ConfigError(std::string(to_string(mode)) + " mode needs --disc-manifest");
  if (mode == TrainMode::kFinetune && a.init.empty())
    throw ConfigError("finetune mode needs --init <baseline checkpoint>");
  if (use_phon) require_file(a.phonetic_manifest, "phonetic manifest");
  if (use_disc) require_file(a.disc_manifest, "discriminative manifest");
  if (!a.init.empty()) require_file(a.init, "init checkpoint");

  Manifest phon_m, disc_m;
  if (use_phon) phon_m = read_manifest(a.phonetic_manifest);
  if (use_disc) disc_m = read_manifest(a.disc_manifest);
  for (const auto& u : phon_m)
    if (!u.transcript) throw DataError("phonetic manifest entry " + u.id + " has no transcript");
  for (const auto& u : disc_m)
    if (!u.binary_label)
      throw DataError("discriminative manifest entry " + u.id + " has no binary_label");

  std::optional<MtlModel> init;
  if (!a.init.empty()) init = load_checkpoint(a.init);

  const auto phon = load_examples(phon_m, fs::path(a.phonetic_manifest).parent_path(), a.frontend);
  const auto disc = load_examples(disc_m, fs::path(a.disc_manifest).parent_path(), a.frontend);
  const int input_dim =
      static_cast<int>((phon.empty() ? disc.front() : phon.front()).input.cols());

  ModelConfig mc;
  mc.input_dim = input_dim;
  mc.hidden_dim = a.hidden;
  mc.num_layers = a.layers;
  int n_phones = a.n_phones > 0 ? a.n_phones : infer_phone_count(phon_m);
  if (init) {
    mc.hidden_dim = init->config.hidden_dim;
    mc.num_layers = init->config.num_layers;
    if (a.n_phones == 0) n_phones = init->config.phonetic_alphabet.size() - 1;
    if (init->config.input_dim != input_dim)
      throw ShapeError("init checkpoint expects " + std::to_string(init->config.input_dim) +
                       "-dim input, data has " + std::to_string(input_dim));
  }
  mc.phonetic_alphabet = Alphabet::phonetic(std::max(n_phones, 1));
  mc.has_phonetic_head = use_phon;
  mc.has_discriminative_head = use_disc;
  mc.validate();

  MtlModel model = MtlModel::initialized(mc, cfg.seed ^ 0x5EEDull);
  if (init) {
    model.trunk = init->trunk;
    if (model.phonetic && init->phonetic) model.phonetic = init->phonetic;
    if (mode != TrainMode::kFinetune && model.discriminative && init->discriminative)
      model.discriminative = init->discriminative;
  }

  TrainOptions opts;
  opts.out_dir = a.out_dir;
  opts.warn = [](const std::string& w) { log_line("warning: " + w); };
  fs::create_directories(a.out_dir);
  std::ofstream(fs::path(a.out_dir) / "train_config.json") << to_json(cfg).dump(2) << "\n";
  const TrainResult r = train(std::move(model), phon, disc, cfg, mode, opts);
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
    std::printf("epoch %zu  mean C_MTL %.6f\n", e + 1, r.epoch_loss[e]);
  std::printf("wrote %s\n", (fs::path(a.out_dir) / "final.vtdm").c_str());
}

// ---- score ---------------------------------------------------------------

struct ScoreArgs {
  std::string checkpoint, manifest, head = "auto", keyword, scores_csv;
  bool raw = false;
  FrontendConfig frontend;
};

void run_score(const ScoreArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.manifest, "manifest");
  a.frontend.validate();
  const MtlModel model = load_checkpoint(a.checkpoint);
  Head head;
  if (a.head == "phonetic") head = Head::kPhonetic;
  else if (a.head == "discriminative") head = Head::kDiscriminative;
  else if (a.head == "auto") head = model.discriminative ? Head::kDiscriminative : Head::kPhonetic;
  else throw ConfigError("--head must be phonetic, discriminative or auto");
  if (!model.has_head(head)) throw ConfigError("checkpoint lacks the requested head");
  KeywordSpec kw{"keyword", {}};
  if (head == Head::kPhonetic) {
    if (a.keyword.empty()) throw ConfigError("phonetic scoring needs --keyword \"p1 p2 ...\"");
    kw.phone_sequence = parse_phones(a.keyword);
    kw.validate(model.config.phonetic_alphabet);
  }

  const Manifest m = read_manifest(a.manifest);
  const auto examples = load_examples(m, fs::path(a.manifest).parent_path(), a.frontend);
  std::vector<ScoredSegment> segs;
  std::printf("# id\tlog_prob\tnormalized\n");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const DetectionScore s = score_input(model, head, examples[i].input, kw);
    std::printf("%s\t%.17g\t%.17g\n", examples[i].id.c_str(), s.log_prob, s.length_normalized);
    if (!a.scores_csv.empty()) {
      if (!m[i].binary_label)
        throw DataError("--scores-csv needs binary labels; " + m[i].id + " has none");
      segs.push_back({m[i].id, a.raw ? s.log_prob : s.length_normalized, *m[i].binary_label,
                      m[i].duration_s.value_or(static_cast<double>(examples[i].input.rows()) *
                                               3.0 / 100.0)});
    }
  }
  if (!a.scores_csv.empty()) write_scored_segments(a.scores_csv, segs);
}

// ---- eval-det ------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> scores;
  std::vector<std::string> labels;
  std::string out_dir;
  std::vector<double> fa_targets = {0.5, 1.0, 2.0, 5.0};
  double negative_hours = 0.0;
};

void run_eval(const EvalArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.scores.size())
    throw ConfigError("--label must be given once per --scores file");
  for (double f : a.fa_targets)
    if (!(f >= 0.0)) throw ConfigError("FA targets must be >= 0");
  for (const auto& s : a.scores) require_file(s, "scores file");

  std::vector<LabeledCurve> curves;
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    const auto segs = read_scored_segments(a.scores[i]);
    const double hours = a.negative_hours > 0.0 ? a.negative_hours : negative_hours(segs);
    const std::string label =
        a.labels.empty() ? fs::path(a.scores[i]).stem().string() : a.labels[i];
    curves.push_back({label, det_curve(segs, hours)});
  }
  fs::create_directories(a.out_dir);
  std::printf("model");
  for (double f : a.fa_targets) std::printf("\tFR@%gFA/h", f);
  std::printf("\n");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    write_det_csv(fs::path(a.out_dir) / (curves[i].label + "_det.csv"), curves[i].curve);
    std::printf("%s", curves[i].label.c_str());
    for (double f : a.fa_targets) std::printf("\t%.4f", fr_at_fa(curves[i].curve, f));
    std::printf("\n");
  }
  write_det_svg(fs::path(a.out_dir) / "det.svg", curves);
}

// ---- demo ----------------------------------------------------------------

struct DemoArgs {
  std::string config, out_dir;
  std::uint64_t seed = 1;
  bool seed_set = false;
  int workers = 0;
};

void run_demo_cmd(const DemoArgs& a) {
  ExperimentConfig cfg;
  if (!a.config.empty()) cfg = experiment_from_json(read_json_file(a.config));
  if (a.seed_set) cfg.seed = a.seed;
  if (a.workers > 0) cfg.train.workers = a.workers;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  cfg.validate();
  const DemoReport report = run_demo(cfg, log_line);
  std::printf("%s", format_report(report).c_str());
  if (!cfg.out_dir.empty()) std::printf("\noutputs in %s\n", cfg.out_dir.c_str());
}

void add_frontend_flags(CLI::App* cmd, FrontendConfig& f) {
  cmd->add_option("--sample-rate", f.sample_rate_hz, "expected audio sample rate (Hz)");
  cmd->add_option("--n-mels", f.n_mels, "Mel bands");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vtd: trigger phrase detection toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate the synthetic feature-domain corpus");
  c_synth->add_option("--out-dir", synth.out_dir)->required();
  c_synth->add_option("--config", synth.config, "JSON SynthSpec (or experiment config)");
  c_synth->add_option("--seed", synth.seed)->each([&](const std::string&) { synth.seed_set = true; });

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "triple an audio manifest (clean, reverb, reverb+echo)");
  c_aug->add_option("--manifest", aug.manifest)->required();
  c_aug->add_option("--out-dir", aug.out_dir)->required();
  c_aug->add_option("--rir-dir", aug.rir_dir, "directory of RIR .wav files");
  c_aug->add_option("--residual-dir", aug.residual_dir, "directory of echo residual .wav files");
  c_aug->add_option("--n-rirs", aug.n_rirs, "synthetic RIRs when --rir-dir is absent");
  c_aug->add_option("--n-residuals", aug.n_residuals, "synthetic residuals when --residual-dir is absent");
  c_aug->add_option("--snr-min", aug.snr_min);
  c_aug->add_option("--snr-max", aug.snr_max);
  c_aug->add_option("--seed", aug.seed);

  FeaturizeArgs feat;
  auto* c_feat = app.add_subcommand("featurize", "log-Mel features for every manifest entry");
  c_feat->add_option("--manifest", feat.manifest)->required();
  c_feat->add_option("--out-dir", feat.out_dir)->required();
  add_frontend_flags(c_feat, feat.frontend);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model");
  c_train->add_option("--mode", tr.mode, "baseline | mtl | finetune | phrase")
      ->check(CLI::IsMember({"baseline", "mtl", "finetune", "phrase"}));
  c_train->add_option("--phonetic-manifest", tr.phonetic_manifest);
  c_train->add_option("--disc-manifest", tr.disc_manifest);
  c_train->add_option("--config", tr.config, "JSON TrainConfig (or experiment config)");
  c_train->add_option("--out-dir", tr.out_dir)->required();
  c_train->add_option("--init", tr.init, "checkpoint whose trunk initialises the model");
  c_train->add_option("--hidden", tr.hidden);
  c_train->add_option("--layers", tr.layers);
  c_train->add_option("--n-phones", tr.n_phones, "phone count (default: max transcript index)");
  c_train->add_option("--epochs", tr.epochs);
  c_train->add_option("--workers", tr.workers);
  c_train->add_option("--seed", tr.seed);
  add_frontend_flags(c_train, tr.frontend);

  ScoreArgs sc;
  auto* c_score = app.add_subcommand(
      "score", "score segments; prints id<TAB>log_prob<TAB>normalized per line");
  c_score->add_option("--checkpoint", sc.checkpoint)->required();
  c_score->add_option("--manifest", sc.manifest)->required();
  c_score->add_option("--head", sc.head, "phonetic | discriminative | auto");
  c_score->add_option("--keyword", sc.keyword, "phone indices, e.g. \"1 2 3 4\"");
  c_score->add_option("--scores-csv", sc.scores_csv, "also write id,score,label,duration_s");
  c_score->add_flag("--raw", sc.raw, "use raw log_prob rather than normalized in --scores-csv");
  add_frontend_flags(c_score, sc.frontend);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval-det", "DET curves from scored-segment CSVs");
  c_eval->add_option("--scores", ev.scores, "one or more scored-segment CSVs")->required();
  c_eval->add_option("--label", ev.labels, "curve label per --scores file");
  c_eval->add_option("--out-dir", ev.out_dir)->required();
  c_eval->add_option("--fa-targets", ev.fa_targets, "FA/hour operating points")->delimiter(',');
  c_eval->add_option("--negative-hours", ev.negative_hours,
                     "hours of negative audio (default: sum of negative durations)");

  DemoArgs demo;
  auto* c_demo = app.add_subcommand("demo", "five-model comparison on the synthetic corpus");
  c_demo->add_option("--config", demo.config, "JSON experiment config");
  c_demo->add_option("--out-dir", demo.out_dir);
  c_demo->add_option("--seed", demo.seed)->each([&](const std::string&) { demo.seed_set = true; });
  c_demo->add_option("--workers", demo.workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*c_synth) run_synth(synth);
    else if (*c_aug) run_augment(aug);
    else if (*c_feat) run_featurize(feat);
    else if (*c_train) run_train(tr);
    else if (*c_score) run_score(sc);
    else if (*c_eval) run_eval(ev);
    else if (*c_demo) run_demo_cmd(demo);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOk;
}
