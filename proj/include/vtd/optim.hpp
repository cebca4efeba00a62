// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#pragma once

#include <cstdint>
#include <span>

#include "vtd/nnet.hpp"

namespace vtd {

/// Global L2 norm over every tensor of `grads`.
double global_norm(const MtlModel& grads);

/// Rescales all gradients by max_norm / g when the global norm g exceeds
/// max_norm. Returns g (the pre-clip norm).
double clip_gradient(MtlModel& grads, double max_norm);

struct AdamConfig {
  double learning_rate = 0.0032;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update on a single tensor. `step` is the 1-based
/// step count after incrementing.
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::int64_t step,
                 const AdamConfig& cfg);

/// Adam over a whole model; moment buffers mirror the parameter layout.
class Adam {
 public:
  Adam(const MtlModel& params, AdamConfig cfg);

  void step(MtlModel& params, const MtlModel& grads);
  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

 private:
  AdamConfig cfg_;
  MtlModel m_;
  MtlModel v_;
  std::int64_t step_ = 0;
};

}  // namespace vtd
