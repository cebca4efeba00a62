// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).
//
//   vtd_acceptance            all twelve criteria
//   vtd_acceptance 1 5 12     only the listed ones

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vtd/ctc.hpp"
#include "vtd/eval.hpp"
#include "vtd/experiment.hpp"
#include "vtd/frontend.hpp"
#include "vtd/nnet.hpp"
#include "vtd/optim.hpp"
#include "vtd/scorer.hpp"
#include "vtd/trainer.hpp"

using namespace vtd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Relative difference with a floor on the denominator, so entries that are
// zero up to rounding are compared absolutely at that floor.
double rel_diff(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::vector<int> random_target(std::mt19937_64& rng, int max_len, int V) {
  std::uniform_int_distribution<int> len(0, max_len), sym(1, V - 1);
  std::vector<int> t(static_cast<std::size_t>(len(rng)));
  for (int& s : t) s = sym(rng);
  return t;
}

// 1 ---------------------------------------------------------------------------
Outcome ctc_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> Tdist(1, 6), Vdist(2, 4);
  double worst = 0.0;
  int feasible = 0, mismatched_feasibility = 0;
  for (int i = 0; i < 500; ++i) {
    const int T = Tdist(rng), V = Vdist(rng);
    const Matrix lp = oracle::random_log_probs(rng, T, V);
    const auto target = random_target(rng, 3, V);
    const double ref = oracle::brute_force_ctc(lp, target, 0);
    const CtcResult got = ctc_loss(lp, target, 0);
    if (std::isinf(ref) || !got.feasible) {
      if (std::isinf(ref) != !got.feasible) ++mismatched_feasibility;
      continue;
    }
    ++feasible;
    worst = std::max(worst, std::abs(got.loss - ref) / std::abs(ref));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && mismatched_feasibility == 0 && secs < 10.0,
          fmt("500 instances (%d feasible), max rel err %.2e (tol 1e-10), "
              "feasibility mismatches %d, %.2f s (limit 10 s)",
              feasible, worst, mismatched_feasibility, secs)};
}

// 2 ---------------------------------------------------------------------------
Outcome ctc_gradient() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> Tdist(2, 6), Vdist(2, 4);
  std::normal_distribution<double> g(0.0, 1.5);
  double worst = 0.0;
  int done = 0;
  while (done < 50) {
    const int T = Tdist(rng), V = Vdist(rng);
    const auto target = random_target(rng, 3, V);
    if (min_frames_for(target) > T) continue;
    Matrix logits(T, V);
    for (Eigen::Index k = 0; k < logits.size(); ++k) logits.data()[k] = g(rng);
    const Matrix analytic = ctc_grad(oracle::log_softmax(logits), target, 0);
    const Matrix fd = oracle::central_difference(
        [&](const Matrix& z) { return ctc_loss(oracle::log_softmax(z), target, 0).loss; },
        logits, 1e-5);
    for (Eigen::Index k = 0; k < fd.size(); ++k)
      worst = std::max(worst, rel_diff(analytic.data()[k], fd.data()[k], 1e-6));
    ++done;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 30.0,
          fmt("50 instances, max rel err %.2e (tol 1e-4, denominator floor 1e-6), "
              "%.2f s (limit 30 s)",
              worst, secs)};
}

// 3 ---------------------------------------------------------------------------
Outcome blank_only_identity() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> Tdist(1, 50), Vdist(2, 60);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int T = Tdist(rng), V = Vdist(rng);
    const Matrix lp = oracle::random_log_probs(rng, T, V);
    double ce = 0.0;
    for (int t = 0; t < T; ++t) ce -= lp(t, 0);
    worst = std::max(worst, std::abs(ctc_loss(lp, {}, 0).loss - ce));
    worst = std::max(worst, std::abs(blank_only_loss(lp, 0) - ce));
  }
  return {worst <= 1e-12, fmt("100 posteriorgrams, max abs diff %.2e (tol 1e-12)", worst)};
}

// 4 ---------------------------------------------------------------------------
Outcome scorer_identity() {
  std::mt19937_64 rng(404);
  double worst_id = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::uniform_int_distribution<int> Tdist(4, 30), Vdist(3, 12);
    const int T = Tdist(rng), V = Vdist(rng);
    PosteriorGram post{oracle::random_log_probs(rng, T, V).array().exp().matrix(),
                       Alphabet::phonetic(V - 1)};
    std::vector<int> kw;
    while (kw.empty()) kw = random_target(rng, 3, V);
    const DetectionScore s = score_keyword(post, {"kw", kw});
    const double ref = -ctc_loss(floored_log(post.probs), kw, 0).loss;
    worst_id = std::max(worst_id, std::abs(s.log_prob - ref));
  }
  double worst_total = 0.0;
  for (int T = 1; T <= 5; ++T)
    for (int V = 2; V <= 3; ++V) {
      const Matrix lp = oracle::random_log_probs(rng, T, V);
      double total = 0.0;
      for (const auto& seq : oracle::all_collapsed(T, V, 0))
        total += std::exp(-ctc_loss(lp, seq, 0).loss);
      worst_total = std::max(worst_total, std::abs(total - 1.0));
    }
  return {worst_id <= 1e-12 && worst_total <= 1e-8,
          fmt("identity max abs diff %.2e (tol 1e-12); total probability max |sum-1| %.2e "
              "(tol 1e-8, T'<=5, V<=3)",
              worst_id, worst_total)};
}

// Tiny float64 model and a random input for the network checks.
MtlModel tiny_model(int layers, bool phon, bool disc, std::uint64_t seed) {
  ModelConfig c;
  c.input_dim = 3;
  c.hidden_dim = 2;
  c.num_layers = layers;
  c.phonetic_alphabet = Alphabet::phonetic(3);
  c.has_phonetic_head = phon;
  c.has_discriminative_head = disc;
  return MtlModel::initialized(c, seed);
}

Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

// All parameters (or those whose name starts with `prefix`) in visiting order.
std::vector<double> flatten(MtlModel& m, const std::string& prefix = "") {
  std::vector<double> out;
  for_each_tensor(m, [&](const std::string& name, std::span<double> s) {
    if (name.rfind(prefix, 0) == 0) out.insert(out.end(), s.begin(), s.end());
  });
  return out;
}

// 5 ---------------------------------------------------------------------------
Outcome gradient_additivity() {
  std::mt19937_64 rng(505);
  const MtlModel model = tiny_model(2, true, true, 55);
  const Matrix x = random_matrix(rng, 7, 3);
  ModelTape tape(model);
  tape.forward(x);
  const std::vector<int> phones = {1, 2};
  const Matrix dp = ctc_grad(tape.log_probs(Head::kPhonetic), phones, 0);
  const Matrix dd = ctc_grad(tape.log_probs(Head::kDiscriminative), std::vector<int>{1}, 0);

  MtlModel joint = model.zeros_like(), only_p = model.zeros_like(), only_d = model.zeros_like();
  tape.backward(&dp, &dd, joint);
  tape.backward(&dp, nullptr, only_p);
  tape.backward(nullptr, &dd, only_d);
  const auto fj = flatten(joint, "trunk."), fp = flatten(only_p, "trunk."),
             fd = flatten(only_d, "trunk.");
  double worst = 0.0;
  for (std::size_t k = 0; k < fj.size(); ++k)
    worst = std::max(worst, std::abs(fj[k] - (fp[k] + fd[k])));
  return {worst <= 1e-10,
          fmt("2-layer trunk, %zu entries, max |g_joint - (g_P + g_D)| = %.2e (tol 1e-10)",
              fj.size(), worst)};
}

// 6 ---------------------------------------------------------------------------
Outcome network_gradient() {
  std::mt19937_64 rng(606);
  MtlModel model = tiny_model(1, true, false, 66);
  const Matrix x = random_matrix(rng, 6, 3);
  const std::vector<int> target = {1, 3};
  auto loss = [&](const MtlModel& m) {
    ModelTape t(m);
    t.forward(x);
    return ctc_loss(t.log_probs(Head::kPhonetic), target, 0).loss;
  };
  ModelTape tape(model);
  tape.forward(x);
  const Matrix d = ctc_grad(tape.log_probs(Head::kPhonetic), target, 0);
  MtlModel grads = model.zeros_like();
  tape.backward(&d, nullptr, grads);
  const std::vector<double> analytic = flatten(grads);

  std::vector<std::span<double>> params;
  for_each_tensor(model, [&](const std::string&, std::span<double> s) { params.push_back(s); });
  double worst = 0.0;
  std::size_t k = 0;
  for (auto s : params)
    for (double& p : s) {
      const double keep = p;
      p = keep + 1e-5;
      const double up = loss(model);
      p = keep - 1e-5;
      const double down = loss(model);
      p = keep;
      worst = std::max(worst, rel_diff(analytic[k++], (up - down) / 2e-5, 1e-6));
    }
  return {worst <= 1e-4,
          fmt("1-layer biLSTM + head, %zu parameters, max rel err %.2e (tol 1e-4, "
              "denominator floor 1e-6)",
              k, worst)};
}

// 7 ---------------------------------------------------------------------------
Outcome frontend_shape() {
  FrontendConfig cfg;
  AudioClip clip;
  clip.sample_rate_hz = cfg.sample_rate_hz;
  clip.samples.resize(static_cast<std::size_t>(cfg.sample_rate_hz));
  std::mt19937_64 rng(707);
  std::normal_distribution<float> g(0.0f, 0.1f);
  for (float& s : clip.samples) s = g(rng);
  const FeatureSequence f = compute_features(clip, cfg);
  const auto T = f.num_frames();
  const ModelInput in = stack_and_subsample(f);
  const auto expect_rows = (T + 2) / 3;
  const bool ok = f.dim() == 40 && std::abs(f.frame_rate_fps - 100.0) < 1e-9 && T >= 95 &&
                  T <= 100 && in.num_frames() == expect_rows && in.dim() == 280;
  return {ok, fmt("1.0 s at %d Hz -> %ld x %ld frames at %.1f FPS; stacked %ld x %ld "
                  "(expect ceil(%ld/3) = %ld x 280)",
                  cfg.sample_rate_hz, static_cast<long>(T), static_cast<long>(f.dim()),
                  f.frame_rate_fps, static_cast<long>(in.num_frames()),
                  static_cast<long>(in.dim()), static_cast<long>(T),
                  static_cast<long>(expect_rows))};
}

// 8 ---------------------------------------------------------------------------
Outcome parameter_count() {
  const ModelConfig cfg = ModelConfig::full_scale();
  const std::size_t n = count_parameters(cfg);
  // Shape formula: per direction 4H(D_in + H + 1); head V(2H + 1).
  std::size_t ref = 0;
  std::size_t in = static_cast<std::size_t>(cfg.input_dim);
  const std::size_t H = static_cast<std::size_t>(cfg.hidden_dim);
  for (int l = 0; l < cfg.num_layers; ++l) {
    ref += 2 * 4 * H * (in + H + 1);
    in = 2 * H;
  }
  ref += static_cast<std::size_t>(cfg.phonetic_alphabet.size()) * (2 * H + 1);
  const std::size_t allocated = count_parameters(MtlModel::zeros(cfg));
  return {n >= 4'500'000 && n <= 6'500'000 && n == ref && allocated == n,
          fmt("%d x %d biLSTM, %d-way head: %zu parameters (formula %zu, allocated %zu; "
              "range [4.5e6, 6.5e6])",
              cfg.num_layers, cfg.hidden_dim, cfg.phonetic_alphabet.size(), n, ref,
              allocated)};
}

// 9 ---------------------------------------------------------------------------
Outcome optimizer_units() {
  std::mt19937_64 rng(909);
  ModelConfig c;
  c.input_dim = 5;
  c.hidden_dim = 4;
  c.num_layers = 2;
  c.phonetic_alphabet = Alphabet::phonetic(4);
  double worst_norm = 0.0;
  std::normal_distribution<double> g(0.0, 1.0);
  for (double scale : {0.01, 1.0, 10.0, 1e3, 1e6}) {
    MtlModel grads = MtlModel::zeros(c);
    for_each_tensor(grads, [&](const std::string&, std::span<double> s) {
      for (double& v : s) v = scale * g(rng);
    });
    clip_gradient(grads, 5.0);
    worst_norm = std::max(worst_norm, global_norm(grads));
  }
  MtlModel params = MtlModel::initialized(c, 9);
  const MtlModel before = params;
  Adam adam(params, AdamConfig{});
  for (int i = 0; i < 3; ++i) adam.step(params, params.zeros_like());
  MtlModel a = params, b = before;
  const bool unchanged = flatten(a) == flatten(b);
  return {worst_norm <= 5.0 + 1e-6 && unchanged,
          fmt("max post-clip norm %.9f (limit 5 + 1e-6); Adam with zero gradients %s",
              worst_norm, unchanged ? "left parameters bit-identical" : "CHANGED parameters")};
}

// 10 --------------------------------------------------------------------------
Outcome det_properties() {
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> coarse(-20, 5);
  std::bernoulli_distribution pos(0.3), neg_inf(0.05);
  std::uniform_real_distribution<double> dur(0.2, 3.0);
  std::vector<ScoredSegment> segs;
  for (int i = 0; i < 100; ++i) {
    ScoredSegment s;
    s.id = "s" + std::to_string(i);
    s.positive = pos(rng);
    // Coarse grid -> plenty of ties.
    s.score = neg_inf(rng) ? -std::numeric_limits<double>::infinity() : coarse(rng) * 0.5;
    s.duration_s = dur(rng);
    segs.push_back(s);
  }
  segs[0].positive = true;
  segs[1].positive = false;
  const double hours = negative_hours(segs);
  const DetCurve curve = det_curve(segs, hours);

  bool monotone = true;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto &p = curve.points[i - 1], &q = curve.points[i];
    monotone = monotone && q.threshold < p.threshold && q.fa_per_hour >= p.fa_per_hour &&
               q.fr_proportion <= p.fr_proportion;
  }
  // Every threshold from the data plus both infinities.
  std::set<double> thresholds = {std::numeric_limits<double>::infinity(),
                                 -std::numeric_limits<double>::infinity()};
  for (const auto& s : segs) thresholds.insert(s.score);
  std::size_t mismatches = thresholds.size() != curve.points.size();
  for (const auto& p : curve.points) {
    const auto r = oracle::det_recount(segs, p.threshold, hours);
    if (std::abs(r.fa_per_hour - p.fa_per_hour) > 1e-12 || std::abs(r.fr - p.fr_proportion) > 1e-12)
      ++mismatches;
  }
  const auto& first = curve.points.front();
  const auto& last = curve.points.back();
  std::size_t n_neg = 0;
  for (const auto& s : segs) n_neg += !s.positive;
  const bool ends = first.threshold == std::numeric_limits<double>::infinity() &&
                    first.fr_proportion == 1.0 && first.fa_per_hour == 0.0 &&
                    last.threshold == -std::numeric_limits<double>::infinity() &&
                    last.fr_proportion == 0.0 &&
                    last.fa_per_hour == static_cast<double>(n_neg) / hours;
  return {monotone && mismatches == 0 && ends,
          fmt("100 segments, %zu curve points: monotone %s, recount mismatches %zu, "
              "endpoints %s",
              curve.points.size(), monotone ? "yes" : "NO", mismatches,
              ends ? "exact" : "WRONG")};
}

// 11 --------------------------------------------------------------------------
double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  std::vector<double> base, phrase, mtl_disc;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.fa_targets = {1.0};
    const DemoReport r = run_demo(cfg);
    base.push_back(r.model(kBaselineLabel).fr_at_targets[0]);
    phrase.push_back(r.model(kPhraseLabel).fr_at_targets[0]);
    mtl_disc.push_back(r.model(kMtlPhraseLabel).fr_at_targets[0]);
    per_seed += fmt(" seed%d[base %.3f phrase %.3f mtl %.3f, %.2f h neg]",
                    static_cast<int>(seed), base.back(), phrase.back(), mtl_disc.back(),
                    r.negative_hours);
  }
  const double mb = median3(base), mp = median3(phrase), mm = median3(mtl_disc);
  const double secs = seconds_since(t0);
  return {mm <= mb && mp > mm && secs < 15 * 60.0,
          fmt("median FR @ 1 FA/h: MTL phrase-specific %.3f <= baseline %.3f; scratch "
              "phrase-specific %.3f > MTL; %.0f s (limit 900 s);",
              mm, mb, mp, secs) +
              per_seed};
}

// 12 --------------------------------------------------------------------------
std::vector<Example> tiny_examples(std::mt19937_64& rng, int n, bool phonetic) {
  std::vector<Example> out;
  std::uniform_int_distribution<int> len(4, 9);
  for (int i = 0; i < n; ++i) {
    Example e;
    e.id = "u" + std::to_string(i);
    e.input = random_matrix(rng, len(rng), 3);
    if (phonetic) e.target = {1 + i % 3, 1 + (i + 1) % 3};
    else if (i % 2 == 0) e.target = {kTriggerSymbol};
    out.push_back(std::move(e));
  }
  return out;
}

Outcome determinism() {
  std::mt19937_64 rng(1212);
  const auto phon = tiny_examples(rng, 24, true);
  const auto disc = tiny_examples(rng, 8, false);
  TrainConfig cfg;
  cfg.batch_size_per_worker = 4;
  cfg.epochs = 2;
  cfg.seed = 77;
  auto run = [&] {
    return train(tiny_model(2, true, true, 5), phon, disc, cfg, TrainMode::kMtl).log;
  };
  const auto a = run(), b = run();
  bool identical = a.size() == b.size() && !a.empty();
  for (std::size_t i = 0; identical && i < a.size(); ++i)
    identical = a[i].c_p == b[i].c_p && a[i].c_d == b[i].c_d && a[i].c_mtl == b[i].c_mtl &&
                a[i].grad_norm == b[i].grad_norm;

  const MtlModel model = tiny_model(2, true, true, 6);
  std::vector<const Example*> pb, db;
  for (int i = 0; i < 6; ++i) pb.push_back(&phon[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 2; ++i) db.push_back(&disc[static_cast<std::size_t>(i)]);
  TrainConfig one = cfg, two = cfg;
  one.workers = 1;
  two.workers = 2;
  GradientResult g1 = compute_gradients(model, pb, db, one);
  GradientResult g2 = compute_gradients(model, pb, db, two);
  const auto f1 = flatten(g1.grads), f2 = flatten(g2.grads);
  double worst = rel_diff(g1.loss.c_mtl, g2.loss.c_mtl, 1e-12);
  for (std::size_t k = 0; k < f1.size(); ++k) worst = std::max(worst, rel_diff(f1[k], f2[k], 1e-12));
  return {identical && worst <= 1e-6,
          fmt("%zu logged steps %s across two runs; 2-worker vs 1-worker step max rel "
              "diff %.2e (tol 1e-6)",
              a.size(), identical ? "bit-identical" : "DIFFER", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"CTC oracle equivalence", ctc_oracle},
      {"CTC gradient check", ctc_gradient},
      {"Blank-only identity", blank_only_identity},
      {"Scorer identity", scorer_identity},
      {"Joint-loss gradient additivity", gradient_additivity},
      {"Network gradient check", network_gradient},
      {"Frontend shape law", frontend_shape},
      {"Parameter count", parameter_count},
      {"Optimizer units", optimizer_units},
      {"DET properties", det_properties},
      {"End-to-end directional check", end_to_end},
      {"Determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed;
}
