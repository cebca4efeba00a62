// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "vtd/augment.hpp"
#include "vtd/errors.hpp"

using namespace vtd;

namespace {

std::vector<float> noise(std::mt19937_64& rng, std::size_t n, double sd = 0.3) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<float> x(n);
  for (float& v : x) v = static_cast<float>(g(rng));
  return x;
}

double energy(const std::vector<float>& x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

Utterance labelled(const std::string& id, bool positive) {
  Utterance u;
  u.id = id;
  u.audio_path = id + ".wav";
  u.binary_label = positive;
  return u;
}

}  // namespace

TEST_CASE("truncated convolution matches the direct definition") {
  std::mt19937_64 rng(31);
  const auto x = noise(rng, 3000);
  for (std::size_t taps : {std::size_t{1}, std::size_t{7}, kDirectConvolutionMaxTaps,
                           kDirectConvolutionMaxTaps + 1, std::size_t{900}, std::size_t{4000}}) {
    const auto h = noise(rng, taps, 0.2);
    const auto ref = oracle::direct_convolution(x, h);
    const auto y = convolve_truncated(x, h);
    REQUIRE(y.size() == x.size());
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      worst = std::max(worst, std::abs(y[i] - ref[i]));
      scale = std::max(scale, std::abs(ref[i]));
    }
    CHECK(worst <= 1e-9 * scale);
  }
}

TEST_CASE("convolve_rir preserves the peak") {
  std::mt19937_64 rng(32);
  AudioClip clip{noise(rng, 4000), 16000};
  const ImpulseResponse rir = synthetic_rir(rng, 16000, 0.3, "r0");
  CHECK(rir.taps.size() == 4800);
  CHECK(rir.taps[0] == 1.0f);
  const AudioClip out = convolve_rir(clip, rir);
  CHECK(out.samples.size() == clip.samples.size());
  float in_peak = 0.0f, out_peak = 0.0f;
  for (float v : clip.samples) in_peak = std::max(in_peak, std::abs(v));
  for (float v : out.samples) out_peak = std::max(out_peak, std::abs(v));
  CHECK(out_peak == doctest::Approx(in_peak).epsilon(1e-6));
  CHECK_THROWS_AS(convolve_rir(clip, ImpulseResponse{"r", rir.taps, 8000}), ConfigError);
  CHECK_THROWS_AS(convolve_rir(AudioClip{{}, 16000}, rir), EmptyInputError);
}

TEST_CASE("residual mixing achieves the requested SNR") {
  std::mt19937_64 rng(33);
  const AudioClip clip{noise(rng, 8000), 16000};
  const ResidualClip res = synthetic_residual(rng, 16000, 3000, "e0");  // tiled
  for (double snr : {-5.0, 0.0, 7.5, 20.0}) {
    const AudioClip mixed = mix_residual(clip, res, snr);
    std::vector<float> added(clip.samples.size());
    for (std::size_t i = 0; i < added.size(); ++i) added[i] = mixed.samples[i] - clip.samples[i];
    const double achieved = 10.0 * std::log10(energy(clip.samples) / energy(added));
    CHECK(achieved == doctest::Approx(snr).epsilon(1e-4));
  }
}

TEST_CASE("residual mixing errors") {
  std::mt19937_64 rng(34);
  const AudioClip clip{noise(rng, 100), 16000};
  const ResidualClip silent{"s", {std::vector<float>(50, 0.0f), 16000}};
  CHECK_THROWS_AS(mix_residual(AudioClip{std::vector<float>(100, 0.0f), 16000}, silent, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(mix_residual(clip, silent, 0.0), ConfigError);
  CHECK(mix_residual(clip, silent, 0.0, true).samples == clip.samples);
  CHECK_THROWS_AS(mix_residual(clip, ResidualClip{"e", {noise(rng, 10), 8000}}, 0.0),
                  ConfigError);
}

TEST_CASE("augmented set triples the manifest with provenance") {
  const Manifest clean = {labelled("a", true), labelled("b", false), labelled("c", false)};
  const AugmentConfig cfg{-5.0, 20.0, 7};
  const Manifest out = build_augmented_set(clean, {"r0", "r1"}, {"e0", "e1", "e2"}, cfg, "aug");
  REQUIRE(out.size() == 9);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Utterance &c = out[3 * i], &r = out[3 * i + 1], &re = out[3 * i + 2];
    CHECK(c.variant == Variant::kClean);
    CHECK(r.variant == Variant::kReverb);
    CHECK(re.variant == Variant::kReverbEcho);
    for (const Utterance* u : {&c, &r, &re}) {
      CHECK(u->binary_label == clean[i].binary_label);
      CHECK(u->provenance.source_id == clean[i].id);
      ids.insert(u->id);
    }
    CHECK(c.audio_path == clean[i].audio_path);
    CHECK(r.audio_path == "aug/" + r.id + ".wav");
    CHECK(r.provenance.rir_id == re.provenance.rir_id);  // one RIR draw per source
    CHECK_FALSE(r.provenance.residual_id.has_value());
    REQUIRE(re.provenance.snr_db.has_value());
    CHECK(*re.provenance.snr_db >= -5.0);
    CHECK(*re.provenance.snr_db <= 20.0);
  }
  CHECK(ids.size() == 9);
  CHECK(build_augmented_set(clean, {"r0", "r1"}, {"e0", "e1", "e2"}, cfg, "aug") == out);
  CHECK_THROWS_AS(build_augmented_set(clean, {}, {"e0"}, cfg), ConfigError);
  CHECK_THROWS_AS(build_augmented_set(clean, {"r0"}, {}, cfg), ConfigError);
  CHECK_THROWS_AS(build_augmented_set(clean, {"r0"}, {"e0"}, AugmentConfig{5.0, 0.0, 1}),
                  ConfigError);
}

TEST_CASE("render_variant follows the plan") {
  std::mt19937_64 rng(35);
  const AudioClip clip{noise(rng, 2000), 16000};
  const ImpulseResponse rir = synthetic_rir(rng, 16000, 0.05, "r0");
  const ResidualClip res = synthetic_residual(rng, 16000, 500, "e0");
  const Manifest plan =
      build_augmented_set({labelled("a", true)}, {"r0"}, {"e0"}, AugmentConfig{10.0, 10.0, 1});
  CHECK(render_variant(clip, plan[0], nullptr, nullptr).samples == clip.samples);
  CHECK(render_variant(clip, plan[1], &rir, nullptr).samples == convolve_rir(clip, rir).samples);
  CHECK(render_variant(clip, plan[2], &rir, &res).samples ==
        mix_residual(convolve_rir(clip, rir), res, 10.0).samples);
  CHECK_THROWS_AS(render_variant(clip, plan[1], nullptr, nullptr), ConfigError);
  CHECK_THROWS_AS(render_variant(clip, plan[2], &rir, nullptr), ConfigError);
}
