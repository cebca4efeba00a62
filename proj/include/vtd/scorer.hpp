// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Keyword detection scores. The keyword's phone string is scored with the
// left-to-right forward recursion over its blank-interleaved state chain,
// which is the CTC alpha pass; the score is log P(keyword | segment).

#pragma once

#include <string>

#include "vtd/ctc.hpp"
#include "vtd/nnet.hpp"

namespace vtd {

/// Posteriors are clamped to this value before taking logs.
inline constexpr double kPosteriorFloor = 1e-30;

struct KeywordSpec {
  std::string name;
  LabelSequence phone_sequence;

  void validate(const Alphabet& alphabet) const;
};

struct DetectionScore {
  double log_prob = 0.0;           // <= 0, -inf when the segment is too short
  double length_normalized = 0.0;  // log_prob / T'
};

/// log(max(p, kPosteriorFloor)) elementwise.
Matrix floored_log(const Matrix& probs);

DetectionScore score_keyword(const PosteriorGram& posteriors,
                             const KeywordSpec& keyword);

/// Score of the single-label target {TRIGGER} on a two-symbol posteriorgram.
DetectionScore score_discriminative(const PosteriorGram& posteriors);

}  // namespace vtd
