// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "vtd/audio_io.hpp"
#include "vtd/errors.hpp"

namespace vtd {
namespace {

constexpr double kFeatureFps = 100.0;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

std::string make_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%06d", prefix, i);
  return buf;
}

class Renderer {
 public:
  // Row n_phones + 1 holds the variant realisation of `variant_phone`.
  Renderer(const SynthSpec& spec, std::mt19937_64& rng,
           const std::map<int, int>& twin_of, int variant_phone)
      : spec_(spec), templates_(spec.n_phones + 2, spec.feature_dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    templates_.row(0).setZero();  // silence
    for (int p = 1; p <= spec.n_phones; ++p)
      for (int d = 0; d < spec.feature_dim; ++d)
        templates_(p, d) = spec.template_scale * g(rng);
    for (const auto& [phone, twin] : twin_of) {
      Vector u(spec.feature_dim);
      for (int d = 0; d < spec.feature_dim; ++d) u[d] = g(rng);
      u.normalize();
      templates_.row(twin) = templates_.row(phone) +
                             spec.twin_distance * templates_.row(phone).norm() *
                                 u.transpose();
    }
    {
      Vector u(spec.feature_dim);
      for (int d = 0; d < spec.feature_dim; ++d) u[d] = g(rng);
      u.normalize();
      templates_.row(spec.n_phones + 1) =
          templates_.row(variant_phone) +
          spec.variant_distance * templates_.row(variant_phone).norm() * u.transpose();
    }
    channel_.resize(spec.feature_dim);
    for (int d = 0; d < spec.feature_dim; ++d) channel_[d] = spec.device_channel * g(rng);
  }

  int variant_index() const { return spec_.n_phones + 1; }

  FeatureSequence render(const LabelSequence& phones, bool device,
                         std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> dur(spec_.min_phone_frames, spec_.max_phone_frames);
    std::uniform_int_distribution<int> sil(2, 4);
    std::vector<int> frames;
    for (int i = sil(rng); i > 0; --i) frames.push_back(0);
    for (int p : phones)
      for (int i = dur(rng); i > 0; --i) frames.push_back(p);
    for (int i = sil(rng); i > 0; --i) frames.push_back(0);

    const double sigma = device ? spec_.device_noise : spec_.clean_noise;
    std::normal_distribution<double> g(0.0, sigma);
    FeatureSequence f;
    f.frame_rate_fps = kFeatureFps;
    f.frames.resize(static_cast<Eigen::Index>(frames.size()), spec_.feature_dim);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      for (int d = 0; d < spec_.feature_dim; ++d) {
        double v = templates_(frames[t], d) + g(rng);
        if (device) v += channel_[d];
        f.frames(static_cast<Eigen::Index>(t), d) = v;
      }
    }
    return f;
  }

 private:
  const SynthSpec& spec_;
  Matrix templates_;
  Vector channel_;
};

// Uniform phone string without adjacent repeats.
LabelSequence random_phones(int length, int n_phones, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(1, n_phones);
  LabelSequence s;
  while (static_cast<int>(s.size()) < length) {
    const int p = pick(rng);
    if (!s.empty() && s.back() == p && n_phones > 1) continue;
    s.push_back(p);
  }
  return s;
}

bool has_adjacent_repeat(const LabelSequence& s) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] == s[i - 1]) return true;
  return false;
}

std::vector<LabelSequence> make_confusables(const SynthSpec& spec,
                                            const std::map<int, int>& twin_of,
                                            std::mt19937_64& rng) {
  const LabelSequence& kw = spec.keyword;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pos(0, kw.size() - 1);
  std::uniform_int_distribution<int> phone(1, spec.n_phones);
  auto substitute = [&](LabelSequence& s, std::size_t i, bool prefer_twin) {
    const auto it = twin_of.find(kw[i]);
    if (prefer_twin && it != twin_of.end()) {
      s[i] = it->second;
      return;
    }
    int p;
    do p = phone(rng);
    while (p == kw[i]);
    s[i] = p;
  };

  std::set<LabelSequence> seen;
  std::vector<LabelSequence> out;
  // Minimal pairs first: each keyword phone swapped for its twin.
  for (std::size_t i = 0; i < kw.size() && static_cast<int>(out.size()) < spec.n_confusables;
       ++i) {
    if (!twin_of.count(kw[i])) continue;
    LabelSequence s = kw;
    substitute(s, i, true);
    if (!has_adjacent_repeat(s) && seen.insert(s).second) out.push_back(s);
  }
  for (int attempt = 0; attempt < 10000 && static_cast<int>(out.size()) < spec.n_confusables;
       ++attempt) {
    LabelSequence s = kw;
    const double r = u(rng);
    if (r < 0.6) {
      substitute(s, pos(rng), true);
    } else if (r < 0.8) {
      const std::size_t a = pos(rng);
      std::size_t b = pos(rng);
      substitute(s, a, u(rng) < 0.5);
      if (b != a) substitute(s, b, u(rng) < 0.5);
    } else if (r < 0.9 && kw.size() > 1) {
      s.erase(s.begin() + static_cast<long>(pos(rng)));
    } else {
      std::uniform_int_distribution<std::size_t> ins(0, kw.size());
      s.insert(s.begin() + static_cast<long>(ins(rng)), phone(rng));
    }
    const int d = edit_distance(s, kw);
    if (d < 1 || d > 2 || has_adjacent_repeat(s) || contains_subsequence(s, kw)) continue;
    if (seen.insert(s).second) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("could not build any confusable sequence");
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_phones < 2) throw ConfigError("synthetic alphabet needs at least 2 phones");
  if (keyword.empty()) throw ConfigError("keyword is empty");
  for (int p : keyword)
    if (p < 1 || p > n_phones)
      throw ConfigError("keyword phone " + std::to_string(p) +
                        " is not in the synthetic alphabet (1.." +
                        std::to_string(n_phones) + ")");
  if (has_adjacent_repeat(keyword))
    throw ConfigError("keyword must not repeat a phone back-to-back");
  if (phonetic_count < 1 || discriminative_positive < 1 || discriminative_negative < 1 ||
      test_positive < 1 || test_negative < 1 || n_confusables < 1)
    throw ConfigError("all synthetic counts must be positive");
  if (feature_dim < 1 || min_phone_frames < 1 || max_phone_frames < min_phone_frames ||
      min_utterance_phones < 1 || max_utterance_phones < min_utterance_phones)
    throw ConfigError("bad synthetic shape parameters");
  if (confusable_fraction < 0.0 || confusable_fraction > 1.0)
    throw ConfigError("confusable_fraction must lie in [0, 1]");
  if (clean_noise < 0.0 || device_noise < 0.0) throw ConfigError("noise must be >= 0");
  if (phonetic_device_fraction < 0.0 || phonetic_device_fraction > 1.0)
    throw ConfigError("phonetic_device_fraction must lie in [0, 1]");
  if (variant_rate < 0.0 || variant_rate > 1.0 || variant_distance < 0.0)
    throw ConfigError("variant_rate must lie in [0, 1] and variant_distance be >= 0");
}

int edit_distance(const LabelSequence& a, const LabelSequence& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool contains_subsequence(const LabelSequence& haystack, const LabelSequence& needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus corpus;
  corpus.alphabet = Alphabet::phonetic(spec.n_phones);
  corpus.keyword = {"keyword", spec.keyword};

  // Twins: the first phones outside the keyword, one per distinct keyword phone.
  std::map<int, int> twin_of;
  {
    const std::set<int> kw(spec.keyword.begin(), spec.keyword.end());
    int next = 1;
    for (int p : kw) {
      while (next <= spec.n_phones && kw.count(next)) ++next;
      if (next > spec.n_phones) break;
      twin_of[p] = next++;
    }
  }

  auto rng_templates = stream(spec.seed, 1);
  auto rng_conf = stream(spec.seed, 2);
  auto rng_phon = stream(spec.seed, 3);
  auto rng_disc = stream(spec.seed, 4);
  auto rng_test = stream(spec.seed, 5);
  constexpr std::size_t variant_pos = 0;
  const Renderer renderer(spec, rng_templates, twin_of, spec.keyword[variant_pos]);
  corpus.confusables = make_confusables(spec, twin_of, rng_conf);

  std::uniform_int_distribution<int> utt_len(spec.min_utterance_phones,
                                             spec.max_utterance_phones);
  std::bernoulli_distribution device(spec.phonetic_device_fraction);
  for (int i = 0; i < spec.phonetic_count; ++i) {
    SynthUtterance u;
    u.phones = random_phones(utt_len(rng_phon), spec.n_phones, rng_phon);
    u.features = renderer.render(u.phones, device(rng_phon), rng_phon);
    u.meta.id = make_id("phon", i);
    u.meta.transcript = u.phones;
    corpus.phonetic.push_back(std::move(u));
  }

  auto binary_set = [&](const char* prefix, int n_pos, int n_neg, std::mt19937_64& rng) {
    std::vector<SynthUtterance> out;
    std::bernoulli_distribution confusable(spec.confusable_fraction);
    std::bernoulli_distribution variant(spec.variant_rate);
    std::uniform_int_distribution<std::size_t> pick_conf(0, corpus.confusables.size() - 1);
    const int kw_len = static_cast<int>(spec.keyword.size());
    std::uniform_int_distribution<int> rand_len(std::max(1, kw_len - 1), kw_len + 1);
    for (int i = 0; i < n_pos + n_neg; ++i) {
      const bool positive = i < n_pos;
      LabelSequence core;
      if (positive) {
        core = spec.keyword;
      } else if (confusable(rng)) {
        core = corpus.confusables[pick_conf(rng)];
      } else {
        do core = random_phones(rand_len(rng), spec.n_phones, rng);
        while (contains_subsequence(core, spec.keyword));
      }
      // Segments are cut at the phrase boundaries, as a first-pass detector
      // would; only silence surrounds the core phones.
      SynthUtterance u;
      u.phones = core;
      LabelSequence rendered = core;
      if (positive && variant(rng)) rendered[variant_pos] = renderer.variant_index();
      u.features = renderer.render(rendered, true, rng);
      u.meta.id = make_id(prefix, i);
      u.meta.binary_label = positive;
      out.push_back(std::move(u));
    }
    // Interleave classes so that any prefix of the set is mixed.
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  };
  corpus.discriminative = binary_set("disc", spec.discriminative_positive,
                                     spec.discriminative_negative, rng_disc);
  corpus.test = binary_set("test", spec.test_positive, spec.test_negative, rng_test);

  for (auto* set : {&corpus.phonetic, &corpus.discriminative, &corpus.test})
    for (auto& u : *set) {
      u.meta.duration_s = static_cast<double>(u.features.num_frames()) / kFeatureFps;
      u.meta.provenance.source_id = u.meta.id;
      u.meta.features_path = "feats/" + u.meta.id + ".vtdf";
    }
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir / "feats");
  auto dump = [&](const std::vector<SynthUtterance>& set, const char* name) {
    Manifest m;
    for (const auto& u : set) {
      write_features(dir / u.meta.features_path, u.features);
      m.push_back(u.meta);
    }
    write_manifest(dir / name, m);
  };
  dump(corpus.phonetic, "phonetic.jsonl");
  dump(corpus.discriminative, "discriminative.jsonl");
  dump(corpus.test, "test.jsonl");

  nlohmann::json j;
  j["alphabet"] = {{"symbols", corpus.alphabet.symbols}, {"blank", corpus.alphabet.blank}};
  j["keyword"] = {{"name", corpus.keyword.name}, {"phones", corpus.keyword.phone_sequence}};
  j["confusables"] = corpus.confusables;
  std::ofstream out(dir / "corpus.json", std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("cannot write " + (dir / "corpus.json").string());
}

BatchIterator::BatchIterator(std::vector<std::size_t> lengths, std::size_t batch_size,
                             std::uint64_t seed, bool bucketing)
    : lengths_(std::move(lengths)), batch_size_(batch_size), seed_(seed),
      bucketing_(bucketing) {
  if (batch_size_ < 1) throw ConfigError("batch size must be >= 1");
  if (lengths_.empty()) throw DataError("cannot iterate an empty manifest");
}

std::vector<std::vector<std::size_t>> BatchIterator::epoch(std::uint64_t epoch) const {
  auto rng = stream(seed_, 1000 + epoch);
  std::vector<std::size_t> order(lengths_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  if (bucketing_) {
    const std::size_t pool = 50 * batch_size_;
    for (std::size_t b = 0; b < order.size(); b += pool) {
      const auto end = order.begin() + static_cast<long>(std::min(order.size(), b + pool));
      std::stable_sort(order.begin() + static_cast<long>(b), end,
                       [&](std::size_t x, std::size_t y) { return lengths_[x] < lengths_[y]; });
    }
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < order.size(); b += batch_size_)
    batches.emplace_back(order.begin() + static_cast<long>(b),
                         order.begin() + static_cast<long>(std::min(order.size(), b + batch_size_)));
  if (bucketing_) std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace vtd
