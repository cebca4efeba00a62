// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/optim.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

std::vector<std::span<double>> tensors(MtlModel& m) {
  std::vector<std::span<double>> out;
  for_each_tensor(m, [&out](const std::string&, std::span<double> s) { out.push_back(s); });
  return out;
}

std::vector<std::span<const double>> tensors(const MtlModel& m) {
  std::vector<std::span<const double>> out;
  for_each_tensor(m, [&out](const std::string&, std::span<const double> s) {
    out.push_back(s);
  });
  return out;
}

}  // namespace

double global_norm(const MtlModel& grads) {
  double sq = 0.0;
  for (auto t : tensors(grads))
    for (double g : t) sq += g * g;
  return std::sqrt(sq);
}

double clip_gradient(MtlModel& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto t : tensors(grads))
      for (double& g : t) g *= scale;
  }
  return norm;
}

void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::int64_t step,
                 const AdamConfig& cfg) {
  if (grad.size() != param.size() || m.size() != param.size() ||
      v.size() != param.size())
    throw ShapeError("adam_update: parameter/gradient/state size mismatch");
  if (step < 1) throw StateError("adam_update: step must be >= 1");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

Adam::Adam(const MtlModel& params, AdamConfig cfg)
    : cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(MtlModel& params, const MtlModel& grads) {
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(m_);
  auto v = tensors(v_);
  if (p.size() != g.size() || p.size() != m.size())
    throw ShapeError("Adam::step: model layout changed since construction");
  ++step_;
  for (std::size_t i = 0; i < p.size(); ++i)
    adam_update(p[i], g[i], m[i], v[i], step_, cfg_);
}

}  // namespace vtd
