// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/ctc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate(const Matrix& log_probs, std::span<const int> target, int blank) {
  if (log_probs.rows() == 0) throw EmptyInputError("CTC input has no frames");
  const auto v = log_probs.cols();
  if (blank < 0 || blank >= v) throw ConfigError("blank index out of range");
  for (int s : target) {
    if (s < 0 || s >= v)
      throw ConfigError("target symbol " + std::to_string(s) + " out of range");
    if (s == blank) throw ConfigError("target contains the blank symbol");
  }
}

std::vector<int> expand(std::span<const int> target, int blank) {
  std::vector<int> ext(2 * target.size() + 1, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

// s-2 -> s is allowed when l'_s is a label differing from l'_{s-2}.
bool can_skip(const std::vector<int>& ext, std::size_t s, int blank) {
  return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
}

}  // namespace

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

int min_frames_for(std::span<const int> target) {
  int n = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

CtcResult ctc_loss(const Matrix& log_probs, std::span<const int> target,
                   int blank, bool with_grad) {
  validate(log_probs, target, blank);
  const Eigen::Index n_frames = log_probs.rows();
  CtcResult result;
  if (min_frames_for(target) > n_frames) {
    result.loss = std::numeric_limits<double>::infinity();
    result.feasible = false;
    return result;
  }

  const std::vector<int> ext = expand(target, blank);
  const auto n_states = static_cast<Eigen::Index>(ext.size());
  Matrix alpha = Matrix::Constant(n_frames, n_states, kNegInf);
  alpha(0, 0) = log_probs(0, blank);
  if (n_states > 1) alpha(0, 1) = log_probs(0, ext[1]);
  for (Eigen::Index t = 1; t < n_frames; ++t) {
    for (Eigen::Index s = 0; s < n_states; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(ext, s, blank)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + log_probs(t, ext[s]);
    }
  }
  double log_total = alpha(n_frames - 1, n_states - 1);
  if (n_states > 1) log_total = log_add(log_total, alpha(n_frames - 1, n_states - 2));
  result.loss = -log_total;
  if (!with_grad) return result;

  Matrix beta = Matrix::Constant(n_frames, n_states, kNegInf);
  beta(n_frames - 1, n_states - 1) = log_probs(n_frames - 1, ext[n_states - 1]);
  if (n_states > 1)
    beta(n_frames - 1, n_states - 2) = log_probs(n_frames - 1, ext[n_states - 2]);
  for (Eigen::Index t = n_frames - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < n_states; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < n_states) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < n_states && can_skip(ext, s + 2, blank))
        b = log_add(b, beta(t + 1, s + 2));
      beta(t, s) = b == kNegInf ? kNegInf : b + log_probs(t, ext[s]);
    }
  }

  // alpha_t(s) * beta_t(s) counts y_t(l'_s) twice; divide it out once.
  Matrix occupancy = Matrix::Constant(n_frames, log_probs.cols(), kNegInf);
  for (Eigen::Index t = 0; t < n_frames; ++t)
    for (Eigen::Index s = 0; s < n_states; ++s) {
      const double ab = alpha(t, s) + beta(t, s);
      if (ab == kNegInf) continue;
      double& acc = occupancy(t, ext[s]);
      acc = log_add(acc, ab - log_probs(t, ext[s]));
    }
  result.grad_logits = log_probs.array().exp().matrix();
  for (Eigen::Index t = 0; t < n_frames; ++t)
    for (Eigen::Index k = 0; k < log_probs.cols(); ++k)
      if (occupancy(t, k) != kNegInf)
        result.grad_logits(t, k) -= std::exp(occupancy(t, k) - log_total);
  return result;
}

double blank_only_loss(const Matrix& log_probs, int blank) {
  validate(log_probs, {}, blank);
  double acc = log_probs(0, blank);
  for (Eigen::Index t = 1; t < log_probs.rows(); ++t) acc += log_probs(t, blank);
  return -acc;
}

Matrix ctc_grad(const Matrix& log_probs, std::span<const int> target, int blank) {
  CtcResult r = ctc_loss(log_probs, target, blank, true);
  if (!r.feasible)
    throw NumericError("CTC target is infeasible for " +
                       std::to_string(log_probs.rows()) + " frames");
  return std::move(r.grad_logits);
}

}  // namespace vtd
