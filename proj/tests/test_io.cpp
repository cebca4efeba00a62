// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "vtd/audio_io.hpp"
#include "vtd/checkpoint.hpp"
#include "vtd/errors.hpp"
#include "vtd/manifest.hpp"
#include "vtd/nnet.hpp"

using namespace vtd;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
  const fs::path dir = fs::path(VTD_TEST_TMP) / "io";
  fs::create_directories(dir);
  return dir / name;
}

AudioClip random_clip(std::uint64_t seed, std::size_t n, int rate) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  AudioClip c{std::vector<float>(n), rate};
  for (float& s : c.samples) s = u(rng);
  return c;
}

}  // namespace

TEST_CASE("WAV round trip within 16-bit quantisation") {
  const AudioClip c = random_clip(61, 1001, 22050);
  const fs::path p = tmp_file("a.wav");
  write_wav(p, c);
  CHECK(fs::file_size(p) == 44 + 2 * 1001);
  const AudioClip back = read_audio(p);
  CHECK(back.sample_rate_hz == 22050);
  REQUIRE(back.samples.size() == c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - c.samples[i]) <= 1.0f / 32767.0f);
}

TEST_CASE("WAV rejects what it cannot read") {
  const fs::path p = tmp_file("bad.wav");
  std::ofstream(p, std::ios::binary) << "not a wave file at all, definitely not";
  CHECK_THROWS_AS(read_wav(p), DataError);
  CHECK_THROWS_AS(read_wav(tmp_file("missing.wav")), DataError);

  // A stereo header.
  const AudioClip c = random_clip(62, 10, 16000);
  const fs::path s = tmp_file("stereo.wav");
  write_wav(s, c);
  std::fstream f(s, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(22);
  const char two[2] = {2, 0};
  f.write(two, 2);
  f.close();
  CHECK_THROWS_AS(read_wav(s), DataError);
}

TEST_CASE("raw float32 round trip is exact") {
  const AudioClip c = random_clip(63, 777, 8000);
  const fs::path p = tmp_file("a.f32");
  write_raw_f32(p, c);
  CHECK(fs::exists(p.string() + ".rate"));
  const AudioClip back = read_audio(p);
  CHECK(back.sample_rate_hz == 8000);
  CHECK(back.samples == c.samples);
  fs::remove(p.string() + ".rate");
  CHECK_THROWS_AS(read_raw_f32(p), DataError);
}

TEST_CASE("feature file round trip and layout") {
  FeatureSequence f;
  f.frames.resize(3, 2);
  f.frames << 1.0, 2.0, 3.0, 4.0, 5.0, 6.5;
  f.frame_rate_fps = 100.0;
  const fs::path p = tmp_file("f.vtdf");
  write_features(p, f);
  CHECK(fs::file_size(p) == 16 + 4 * 6);
  std::ifstream raw(p, std::ios::binary);
  char magic[4];
  raw.read(magic, 4);
  CHECK(std::string(magic, 4) == "VTDF");
  raw.seekg(16 + 4);  // frame 0, dim 1
  float v;
  raw.read(reinterpret_cast<char*>(&v), 4);
  CHECK(v == 2.0f);  // row-major
  const FeatureSequence back = read_features(p);
  CHECK(back.frames == f.frames);
  CHECK(back.frame_rate_fps == 100.0);

  const fs::path bad = tmp_file("bad.vtdf");
  std::ofstream(bad, std::ios::binary) << "XXXXsomething";
  CHECK_THROWS_AS(read_features(bad), DataError);
}

TEST_CASE("manifest round trip") {
  Utterance a;
  a.id = "u1";
  a.features_path = "feats/u1.vtdf";
  a.transcript = LabelSequence{3, 7, 1};
  a.duration_s = 0.42;
  a.provenance.source_id = "u1";
  Utterance b;
  b.id = "u2";
  b.audio_path = "/abs/u2.wav";
  b.binary_label = true;
  b.variant = Variant::kReverbEcho;
  b.provenance = {"u0", "rir_3", "res_1", -2.5};
  const fs::path p = tmp_file("m.jsonl");
  write_manifest(p, {a, b});
  const Manifest back = read_manifest(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK(parse_json_line(to_json_line(b)) == b);
  CHECK(resolve_path("/base", "x/y.wav") == fs::path("/base/x/y.wav"));
  CHECK(resolve_path("/base", "/abs/y.wav") == fs::path("/abs/y.wav"));
}

TEST_CASE("manifest errors") {
  const fs::path p = tmp_file("dup.jsonl");
  std::ofstream(p) << R"({"id": "a", "binary_label": true})" "\n"
                   << R"({"id": "a", "binary_label": false})" "\n";
  CHECK_THROWS_AS(read_manifest(p), DataError);
  CHECK_THROWS_AS(parse_json_line(R"({"id": "a"})"), DataError);
  CHECK_THROWS_AS(parse_json_line(R"({"id": "a", "transcript": [1], "binary_label": true})"),
                  DataError);
  CHECK_THROWS_AS(parse_json_line("{not json"), DataError);
  CHECK_THROWS_AS(parse_json_line(R"({"id": "a", "binary_label": true, "variant": "loud"})"),
                  DataError);
  CHECK_THROWS_AS(read_manifest(tmp_file("missing.jsonl")), DataError);
}

TEST_CASE("checkpoint round trip in float32") {
  ModelConfig c;
  c.input_dim = 6;
  c.hidden_dim = 5;
  c.num_layers = 2;
  c.phonetic_alphabet = Alphabet::phonetic(4);
  const MtlModel m = MtlModel::initialized(c, 71);
  const fs::path p = tmp_file("m.vtdm");
  save_checkpoint(p, m);
  const MtlModel back = load_checkpoint(p);
  CHECK(back.config.phonetic_alphabet == c.phonetic_alphabet);
  CHECK(back.config.num_layers == 2);
  CHECK(count_parameters(back) == count_parameters(m));
  CHECK(back.trunk[1].backward.w_recurrent ==
        m.trunk[1].backward.w_recurrent.cast<float>().cast<double>());
  CHECK(back.discriminative->bias == m.discriminative->bias.cast<float>().cast<double>());

  ModelConfig phrase = c;
  phrase.has_phonetic_head = false;
  save_checkpoint(p, MtlModel::initialized(phrase, 72));
  const MtlModel p2 = load_checkpoint(p);
  CHECK_FALSE(p2.has_head(Head::kPhonetic));
  CHECK(p2.has_head(Head::kDiscriminative));
}

TEST_CASE("checkpoint errors") {
  const fs::path p = tmp_file("bad.vtdm");
  std::ofstream(p, std::ios::binary) << "VTDXjunkjunkjunk";
  CHECK_THROWS_AS(load_checkpoint(p), DataError);
  CHECK_THROWS_AS(load_checkpoint(tmp_file("missing.vtdm")), DataError);

  ModelConfig c;
  c.input_dim = 2;
  c.hidden_dim = 2;
  c.num_layers = 1;
  const fs::path t = tmp_file("trunc.vtdm");
  save_checkpoint(t, MtlModel::initialized(c, 1));
  fs::resize_file(t, fs::file_size(t) - 8);
  CHECK_THROWS_AS(load_checkpoint(t), DataError);
}
