// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Connectionist Temporal Classification loss.
//
// The target l_1..l_L is expanded to the blank-interleaved lattice
//   l' = (b, l_1, b, l_2, ..., b, l_L, b),  |l'| = 2L + 1
// and alpha/beta are run over it in log space. The loss is
//   -log sum_{paths pi : B(pi) = l} prod_t y_t(pi_t)
// where B removes repeats and then blanks. An empty target leaves the single
// state "b", i.e. the frame-wise blank cross-entropy -sum_t log y_t(b).

#pragma once

#include <span>
#include <vector>

#include "vtd/frontend.hpp"

namespace vtd {

/// Non-blank symbol indices. Empty is allowed.
using LabelSequence = std::vector<int>;

struct CtcResult {
  double loss = 0.0;  // nats; +inf when infeasible
  bool feasible = true;
  Matrix grad_logits;  // T' x V, only when requested and feasible
};

/// Minimum number of frames needed to emit `target` (L plus one blank for
/// every adjacent repeat).
int min_frames_for(std::span<const int> target);

/// `log_probs` is T' x V log-softmax output. Set `with_grad` to also get the
/// gradient w.r.t. the pre-softmax logits.
CtcResult ctc_loss(const Matrix& log_probs, std::span<const int> target,
                   int blank, bool with_grad = false);

/// -sum_t log_probs(t, blank). Bit-identical to ctc_loss with an empty
/// target.
double blank_only_loss(const Matrix& log_probs, int blank);

/// Gradient of ctc_loss w.r.t. logits: softmax minus expected symbol
/// occupancy. Throws NumericError on an infeasible target.
Matrix ctc_grad(const Matrix& log_probs, std::span<const int> target, int blank);

/// log(exp(a) + exp(b)) without overflow; handles -inf.
double log_add(double a, double b);

}  // namespace vtd
