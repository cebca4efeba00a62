// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Synthetic stand-ins for the phonetic (large) and discriminative (small)
// training sets, plus a seeded batch iterator.
//
// Rendering model: phone p has a fixed template vector mu_p in R^D; a phone
// occupies 3-8 frames of mu_p + noise. Utterances are padded with silence
// frames. Each keyword phone has a "twin" whose template lies close to it,
// so substituting twins yields acoustically confusable negatives. The
// phonetic set is rendered in a clean condition; discriminative and test
// sets use a "device" condition (fixed channel offset in the log domain,
// stronger noise).

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vtd/frontend.hpp"
#include "vtd/manifest.hpp"
#include "vtd/scorer.hpp"

namespace vtd {

struct SynthSpec {
  int n_phones = 10;
  LabelSequence keyword = {1, 2, 3, 4};
  int n_confusables = 8;

  int phonetic_count = 2000;
  int discriminative_positive = 50;
  int discriminative_negative = 50;
  int test_positive = 200;
  int test_negative = 15000;
  // Share of negatives (discriminative and test) drawn from the confusables;
  // the rest are random phone strings.
  double confusable_fraction = 0.5;

  int feature_dim = 40;
  int min_phone_frames = 3;
  int max_phone_frames = 8;
  int min_utterance_phones = 4;
  int max_utterance_phones = 12;

  double template_scale = 1.0;
  double twin_distance = 1.0;   // ||mu_twin - mu_k|| relative to ||mu_k||
  double clean_noise = 1.5;
  double device_noise = 1.5;
  double device_channel = 0.4;
  // Share of phonetic utterances rendered in the device condition (the
  // binary-labelled sets always are).
  double phonetic_device_fraction = 0.67;
  // Share of positives whose first keyword phone is realised as a sound
  // outside the inventory, at variant_distance * ||mu|| from the canonical
  // template: a pronunciation the canonical keyword string does not describe.
  double variant_rate = 1.0;
  double variant_distance = 1.3;

  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthUtterance {
  Utterance meta;
  FeatureSequence features;
  LabelSequence phones;  // rendered phone content (also for binary-labelled)
};

struct SynthCorpus {
  Alphabet alphabet;
  KeywordSpec keyword;
  std::vector<LabelSequence> confusables;
  std::vector<SynthUtterance> phonetic;
  std::vector<SynthUtterance> discriminative;
  std::vector<SynthUtterance> test;
};

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec);

/// Levenshtein distance between two label sequences.
int edit_distance(const LabelSequence& a, const LabelSequence& b);

/// True when `needle` occurs contiguously in `haystack`.
bool contains_subsequence(const LabelSequence& haystack, const LabelSequence& needle);

/// Writes features under `<dir>/feats/` and the three manifests
/// phonetic.jsonl / discriminative.jsonl / test.jsonl plus corpus.json
/// (alphabet, keyword, confusables).
void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

/// Seeded epoch permutations over items of the given lengths. With
/// bucketing, each pool of 50 batches is sorted by length before slicing so
/// batches hold similar lengths; batch order is shuffled afterwards.
class BatchIterator {
 public:
  BatchIterator(std::vector<std::size_t> lengths, std::size_t batch_size,
                std::uint64_t seed, bool bucketing = false);

  /// Batches of item indices for epoch `epoch`. Every index appears exactly
  /// once; the final batch may be short.
  std::vector<std::vector<std::size_t>> epoch(std::uint64_t epoch) const;
  std::size_t size() const { return lengths_.size(); }
  std::size_t batches_per_epoch() const {
    return (lengths_.size() + batch_size_ - 1) / batch_size_;
  }

 private:
  std::vector<std::size_t> lengths_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool bucketing_;
};

}  // namespace vtd
