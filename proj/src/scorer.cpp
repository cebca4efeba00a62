// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/scorer.hpp"

#include <limits>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

DetectionScore from_ctc(const Matrix& log_probs, std::span<const int> target,
                        int blank) {
  const CtcResult r = ctc_loss(log_probs, target, blank);
  DetectionScore s;
  s.log_prob = r.feasible ? -r.loss : -std::numeric_limits<double>::infinity();
  s.length_normalized = s.log_prob / static_cast<double>(log_probs.rows());
  return s;
}

}  // namespace

void KeywordSpec::validate(const Alphabet& alphabet) const {
  if (phone_sequence.empty()) throw ConfigError("keyword has no phones");
  for (int p : phone_sequence)
    if (p < 0 || p >= alphabet.size() || p == alphabet.blank)
      throw ConfigError("keyword '" + name + "' uses a symbol outside the alphabet");
}

Matrix floored_log(const Matrix& probs) {
  return probs.array().max(kPosteriorFloor).log().matrix();
}

DetectionScore score_keyword(const PosteriorGram& posteriors,
                             const KeywordSpec& keyword) {
  keyword.validate(posteriors.alphabet);
  if (posteriors.num_frames() == 0) throw EmptyInputError("empty posteriorgram");
  return from_ctc(floored_log(posteriors.probs), keyword.phone_sequence,
                  posteriors.alphabet.blank);
}

DetectionScore score_discriminative(const PosteriorGram& posteriors) {
  if (posteriors.probs.cols() != 2)
    throw ShapeError("discriminative posteriorgram must have two columns");
  if (posteriors.num_frames() == 0) throw EmptyInputError("empty posteriorgram");
  const int blank = posteriors.alphabet.blank;
  const int trigger = 1 - blank;
  const int target[] = {trigger};
  return from_ctc(floored_log(posteriors.probs), target, blank);
}

}  // namespace vtd
