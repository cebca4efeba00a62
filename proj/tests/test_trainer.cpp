// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "vtd/checkpoint.hpp"
#include "vtd/ctc.hpp"
#include "vtd/errors.hpp"
#include "vtd/trainer.hpp"

using namespace vtd;
namespace fs = std::filesystem;

namespace {

constexpr int kDim = 5;

ModelConfig tiny() {
  ModelConfig c;
  c.input_dim = kDim;
  c.hidden_dim = 4;
  c.num_layers = 1;
  c.phonetic_alphabet = Alphabet::phonetic(3);
  return c;
}

Example make(std::mt19937_64& rng, const std::string& id, int T, LabelSequence target) {
  std::normal_distribution<double> g(0.0, 1.0);
  Example e{id, Matrix(T, kDim), std::move(target)};
  for (Eigen::Index k = 0; k < e.input.size(); ++k) e.input.data()[k] = g(rng);
  return e;
}

struct Sets {
  std::vector<Example> phon, disc;
};

Sets make_sets(std::uint64_t seed, int n_phon = 8, int n_disc = 6) {
  std::mt19937_64 rng(seed);
  Sets s;
  for (int i = 0; i < n_phon; ++i)
    s.phon.push_back(make(rng, "p" + std::to_string(i), 4 + i % 5, {1 + i % 3, 1 + (i + 1) % 3}));
  for (int i = 0; i < n_disc; ++i)
    s.disc.push_back(make(rng, "d" + std::to_string(i), 3 + i % 4,
                          i % 2 ? LabelSequence{kTriggerSymbol} : LabelSequence{}));
  return s;
}

std::vector<const Example*> ptrs(const std::vector<Example>& v) {
  std::vector<const Example*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

std::vector<double> flat(const MtlModel& m) {
  std::vector<double> out;
  for_each_tensor(m, [&](const std::string&, std::span<const double> s) {
    out.insert(out.end(), s.begin(), s.end());
  });
  return out;
}

double max_abs_diff(const MtlModel& a, const MtlModel& b) {
  const auto x = flat(a), y = flat(b);
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
  return d;
}

fs::path tmp_dir(const std::string& name) {
  const fs::path p = fs::path(VTD_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("losses are per-set means of CTC losses, combined with the weight") {
  const Sets s = make_sets(1);
  const MtlModel m = MtlModel::initialized(tiny(), 2);
  TrainConfig cfg;
  cfg.discriminative_weight = 0.5;
  const auto pp = ptrs(s.phon), dp = ptrs(s.disc);
  const GradientResult r = compute_gradients(m, pp, dp, cfg);

  double cp = 0.0, cd = 0.0;
  for (const auto& e : s.phon) {
    ModelTape t(m);
    t.forward(e.input);
    cp += ctc_loss(t.log_probs(Head::kPhonetic), e.target, 0).loss;
  }
  for (const auto& e : s.disc) {
    ModelTape t(m);
    t.forward(e.input);
    const Matrix lp = t.log_probs(Head::kDiscriminative);
    cd += e.target.empty() ? -lp.col(0).sum() : ctc_loss(lp, e.target, 0).loss;
  }
  cp /= static_cast<double>(s.phon.size());
  cd /= static_cast<double>(s.disc.size());
  CHECK(r.loss.c_p == doctest::Approx(cp).epsilon(1e-12));
  CHECK(r.loss.c_d == doctest::Approx(cd).epsilon(1e-12));
  CHECK(r.loss.c_mtl == doctest::Approx(cp + 0.5 * cd).epsilon(1e-12));
  CHECK(r.used_phonetic == s.phon.size());
  CHECK(r.used_discriminative == s.disc.size());
}

TEST_CASE("joint gradient is the weighted sum of the per-task gradients") {
  const Sets s = make_sets(3);
  const MtlModel m = MtlModel::initialized(tiny(), 4);
  TrainConfig cfg;
  cfg.discriminative_weight = 0.7;
  const auto pp = ptrs(s.phon), dp = ptrs(s.disc);
  const auto both = compute_gradients(m, pp, dp, cfg);
  const auto only_p = compute_gradients(m, pp, {}, cfg);
  const auto only_d = compute_gradients(m, {}, dp, cfg);
  CHECK(only_p.loss.c_d == 0.0);
  CHECK(only_d.loss.c_p == 0.0);
  const auto a = flat(both.grads), b = flat(only_p.grads), c = flat(only_d.grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i] - c[i]));
  CHECK(worst < 1e-12);
  // The discriminative head sees no phonetic gradient and vice versa.
  CHECK(only_p.grads.discriminative->weight.cwiseAbs().maxCoeff() == 0.0);
  CHECK(only_d.grads.phonetic->weight.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("worker count does not change the gradient") {
  const Sets s = make_sets(5, 11, 7);
  const MtlModel m = MtlModel::initialized(tiny(), 6);
  const auto pp = ptrs(s.phon), dp = ptrs(s.disc);
  TrainConfig one, three;
  three.workers = 3;
  const auto a = compute_gradients(m, pp, dp, one);
  const auto b = compute_gradients(m, pp, dp, three);
  CHECK(max_abs_diff(a.grads, b.grads) < 1e-12);
  CHECK(a.loss.c_mtl == doctest::Approx(b.loss.c_mtl).epsilon(1e-14));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Sets s = make_sets(7);
  TrainConfig cfg;
  cfg.batch_size_per_worker = 4;
  cfg.epochs = 3;
  const MtlModel init = MtlModel::initialized(tiny(), 8);
  const auto a = train(init, s.phon, s.disc, cfg, TrainMode::kMtl);
  const auto b = train(init, s.phon, s.disc, cfg, TrainMode::kMtl);
  CHECK(max_abs_diff(a.model, b.model) == 0.0);
  CHECK(a.log.size() == b.log.size());
  cfg.seed = 2;
  const auto c = train(init, s.phon, s.disc, cfg, TrainMode::kMtl);
  CHECK(max_abs_diff(a.model, c.model) > 0.0);
}

TEST_CASE("training reduces the loss") {
  const Sets s = make_sets(9);
  TrainConfig cfg;
  cfg.batch_size_per_worker = 4;
  cfg.epochs = 30;
  cfg.learning_rate = 0.01;
  const auto r = train(MtlModel::initialized(tiny(), 10), s.phon, s.disc, cfg, TrainMode::kMtl);
  REQUIRE(r.epoch_loss.size() == 30);
  CHECK(r.epoch_loss.back() < 0.5 * r.epoch_loss.front());
}

TEST_CASE("only the relevant parameters move in single-task modes") {
  const Sets s = make_sets(11);
  TrainConfig cfg;
  cfg.batch_size_per_worker = 4;
  cfg.epochs = 1;
  const MtlModel init = MtlModel::initialized(tiny(), 12);
  const auto base = train(init, s.phon, s.disc, cfg, TrainMode::kBaseline);
  CHECK(base.model.discriminative->weight == init.discriminative->weight);
  CHECK(base.model.phonetic->weight != init.phonetic->weight);
  const auto phrase = train(init, {}, s.disc, cfg, TrainMode::kPhrase);
  CHECK(phrase.model.phonetic->weight == init.phonetic->weight);
  CHECK(phrase.model.trunk[0].forward.w_input != init.trunk[0].forward.w_input);
}

TEST_CASE("infeasible targets are skipped") {
  std::mt19937_64 rng(13);
  const MtlModel init = MtlModel::initialized(tiny(), 14);
  const Example too_short = make(rng, "x", 2, {1, 1, 2});
  const Example fine = make(rng, "y", 6, {1, 2});
  TrainConfig cfg;

  const std::vector<const Example*> mixed = {&too_short, &fine};
  const auto g = compute_gradients(init, mixed, {}, cfg);
  CHECK(g.skipped == 1);
  CHECK(g.used_phonetic == 1);

  MtlModel m = init;
  Adam adam(m, cfg.adam());
  const std::vector<const Example*> bad = {&too_short};
  const StepStats st = mtl_step(m, adam, bad, {}, cfg);
  CHECK_FALSE(st.applied);
  CHECK(st.skipped == 1);
  CHECK(adam.steps() == 0);
  CHECK(max_abs_diff(m, init) == 0.0);
}

TEST_CASE("a non-finite loss raises NumericError") {
  std::mt19937_64 rng(15);
  MtlModel m = MtlModel::initialized(tiny(), 16);
  Example e = make(rng, "nan", 5, {1});
  e.input(2, 1) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  Adam adam(m, cfg.adam());
  const std::vector<const Example*> b = {&e};
  CHECK_THROWS_AS(mtl_step(m, adam, b, {}, cfg), NumericError);
}

TEST_CASE("train writes checkpoints and a loss log") {
  const Sets s = make_sets(17);
  TrainConfig cfg;
  cfg.batch_size_per_worker = 4;
  cfg.epochs = 2;
  const fs::path dir = tmp_dir("train_out");
  std::vector<std::string> warnings;
  TrainOptions opt{dir, [&](const std::string& w) { warnings.push_back(w); }};
  const auto r = train(MtlModel::initialized(tiny(), 18), s.phon, s.disc, cfg, TrainMode::kMtl, opt);
  CHECK(fs::exists(dir / "ckpt_epoch_1.vtdm"));
  CHECK(fs::exists(dir / "ckpt_epoch_2.vtdm"));
  const MtlModel final_model = load_checkpoint(dir / "final.vtdm");
  CHECK(max_abs_diff(final_model, r.model) < 1e-6);  // float32 on disk

  std::ifstream log(dir / "loss_log.csv");
  std::string header, line;
  std::getline(log, header);
  CHECK(header == "step,c_p,c_d,c_mtl,grad_norm");
  std::size_t rows = 0;
  while (std::getline(log, line)) ++rows;
  CHECK(rows == r.log.size());
  CHECK(warnings.empty());
}

TEST_CASE("trainer configuration errors") {
  const Sets s = make_sets(19);
  const MtlModel m = MtlModel::initialized(tiny(), 20);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(m, {}, s.disc, cfg, TrainMode::kBaseline), ConfigError);
  CHECK_THROWS_AS(train(m, s.phon, {}, cfg, TrainMode::kMtl), ConfigError);
  ModelConfig no_disc = tiny();
  no_disc.has_discriminative_head = false;
  CHECK_THROWS_AS(train(MtlModel::zeros(no_disc), {}, s.disc, cfg, TrainMode::kPhrase),
                  ConfigError);
  TrainConfig bad = cfg;
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(train(m, s.phon, s.disc, bad, TrainMode::kMtl), ConfigError);
  CHECK(parse_train_mode("finetune") == TrainMode::kFinetune);
  CHECK(std::string(to_string(TrainMode::kMtl)) == "mtl");
  CHECK_THROWS_AS(parse_train_mode("bogus"), ConfigError);
}
