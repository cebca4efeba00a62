// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/nnet.hpp"

#include <cmath>
#include <random>
#include <string>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

LstmDirection zero_direction(int input_dim, int hidden_dim) {
  return {Matrix::Zero(4 * hidden_dim, input_dim),
          Matrix::Zero(4 * hidden_dim, hidden_dim), Vector::Zero(4 * hidden_dim)};
}

AffineHead zero_head(int input_dim, int output_dim) {
  return {Matrix::Zero(output_dim, input_dim), Vector::Zero(output_dim)};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_cols(const Matrix& m, int expected, const char* what) {
  if (m.cols() != expected)
    throw ShapeError(std::string(what) + ": expected width " +
                     std::to_string(expected) + ", got " +
                     std::to_string(m.cols()));
}

// Runs one LSTM direction. `reverse` walks t = T-1..0.
Matrix direction_forward(const LstmDirection& p, const Matrix& x, bool reverse,
                         LstmDirectionCache* cache) {
  const Eigen::Index n = x.rows();
  const int h = p.hidden_dim();
  Matrix pre = x * p.w_input.transpose();
  pre.rowwise() += p.bias.transpose();

  Matrix gates(n, 4 * h), cells(n, h), hidden(n, h);
  RowVector h_prev = RowVector::Zero(h), c_prev = RowVector::Zero(h);
  RowVector z(4 * h);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    z.noalias() = pre.row(t) + h_prev * p.w_recurrent.transpose();
    for (int k = 0; k < h; ++k) {
      const double i = sigmoid(z[k]);
      const double f = sigmoid(z[h + k]);
      const double g = std::tanh(z[2 * h + k]);
      const double o = sigmoid(z[3 * h + k]);
      const double c = f * c_prev[k] + i * g;
      gates(t, k) = i;
      gates(t, h + k) = f;
      gates(t, 2 * h + k) = g;
      gates(t, 3 * h + k) = o;
      cells(t, k) = c;
      hidden(t, k) = o * std::tanh(c);
    }
    h_prev = hidden.row(t);
    c_prev = cells.row(t);
  }
  if (cache) {
    cache->gates = gates;
    cache->cells = cells;
    cache->hidden = hidden;
  }
  return hidden;
}

// Back-propagation through time for one direction; returns dLoss/dx.
Matrix direction_backward(const LstmDirection& p, const Matrix& x,
                          const LstmDirectionCache& cache, const Matrix& d_h,
                          bool reverse, LstmDirection& grad) {
  const Eigen::Index n = x.rows();
  const int h = p.hidden_dim();
  Matrix d_z(n, 4 * h);
  Matrix h_prev_all = Matrix::Zero(n, h);
  RowVector dh_next = RowVector::Zero(h), dc_next = RowVector::Zero(h);

  for (Eigen::Index s = n - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    const bool first = (s == 0);
    const Eigen::Index t_prev = reverse ? t + 1 : t - 1;
    RowVector dc_carry(h);
    for (int k = 0; k < h; ++k) {
      const double i = cache.gates(t, k);
      const double f = cache.gates(t, h + k);
      const double g = cache.gates(t, 2 * h + k);
      const double o = cache.gates(t, 3 * h + k);
      const double c_prev = first ? 0.0 : cache.cells(t_prev, k);
      const double tc = std::tanh(cache.cells(t, k));
      const double dh = d_h(t, k) + dh_next[k];
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
      d_z(t, k) = dc * g * i * (1.0 - i);
      d_z(t, h + k) = dc * c_prev * f * (1.0 - f);
      d_z(t, 2 * h + k) = dc * i * (1.0 - g * g);
      d_z(t, 3 * h + k) = dh * tc * o * (1.0 - o);
      dc_carry[k] = dc * f;
    }
    if (!first) h_prev_all.row(t) = cache.hidden.row(t_prev);
    dh_next.noalias() = d_z.row(t) * p.w_recurrent;
    dc_next = dc_carry;
  }
  grad.w_input.noalias() += d_z.transpose() * x;
  grad.w_recurrent.noalias() += d_z.transpose() * h_prev_all;
  grad.bias += d_z.colwise().sum().transpose();
  return d_z * p.w_input;
}

}  // namespace

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.input_dim = 280;
  c.hidden_dim = 256;
  c.num_layers = 4;
  c.phonetic_alphabet = Alphabet::phonetic(52);
  c.has_phonetic_head = true;
  c.has_discriminative_head = false;
  return c;
}

void ModelConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1)
    throw ConfigError("model dimensions must be positive");
  if (has_phonetic_head) phonetic_alphabet.validate();
  if (!has_phonetic_head && !has_discriminative_head)
    throw ConfigError("model needs at least one output head");
}

MtlModel MtlModel::zeros(const ModelConfig& cfg) {
  cfg.validate();
  MtlModel m;
  m.config = cfg;
  int in = cfg.input_dim;
  for (int l = 0; l < cfg.num_layers; ++l) {
    m.trunk.push_back({zero_direction(in, cfg.hidden_dim),
                       zero_direction(in, cfg.hidden_dim)});
    in = 2 * cfg.hidden_dim;
  }
  if (cfg.has_phonetic_head)
    m.phonetic = zero_head(in, cfg.phonetic_alphabet.size());
  if (cfg.has_discriminative_head)
    m.discriminative = zero_head(in, Alphabet::discriminative().size());
  return m;
}

MtlModel MtlModel::initialized(const ModelConfig& cfg, std::uint64_t seed) {
  MtlModel m = zeros(cfg);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Matrix& w) {
    const double r = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-r, r);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  };
  for (auto& layer : m.trunk) {
    for (LstmDirection* d : {&layer.forward, &layer.backward}) {
      fill(d->w_input);
      fill(d->w_recurrent);
      d->bias.setZero();
      d->bias.segment(cfg.hidden_dim, cfg.hidden_dim).setOnes();
    }
  }
  if (m.phonetic) fill(m.phonetic->weight);
  if (m.discriminative) fill(m.discriminative->weight);
  return m;
}

const AffineHead& MtlModel::head(Head h) const {
  const auto& opt = h == Head::kPhonetic ? phonetic : discriminative;
  if (!opt) throw StateError("model has no such output head");
  return *opt;
}

AffineHead& MtlModel::head(Head h) {
  auto& opt = h == Head::kPhonetic ? phonetic : discriminative;
  if (!opt) throw StateError("model has no such output head");
  return *opt;
}

bool MtlModel::has_head(Head h) const {
  return h == Head::kPhonetic ? phonetic.has_value() : discriminative.has_value();
}

int MtlModel::trunk_output_dim() const { return 2 * config.hidden_dim; }

const Alphabet& MtlModel::alphabet(Head h) const {
  static const Alphabet disc = Alphabet::discriminative();
  return h == Head::kPhonetic ? config.phonetic_alphabet : disc;
}

std::size_t count_parameters(const MtlModel& model) {
  std::size_t n = 0;
  for_each_tensor(model, [&n](const std::string&, auto span) { n += span.size(); });
  return n;
}

std::size_t count_parameters(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t h = cfg.hidden_dim;
  std::size_t n = 0;
  std::size_t in = cfg.input_dim;
  for (int l = 0; l < cfg.num_layers; ++l) {
    n += 2 * (4 * h * (in + h + 1));
    in = 2 * h;
  }
  if (cfg.has_phonetic_head) n += cfg.phonetic_alphabet.size() * (in + 1);
  if (cfg.has_discriminative_head) n += 2 * (in + 1);
  return n;
}

Matrix bilstm_forward(const BiLstmLayer& layer, const Matrix& input,
                      BiLstmCache* cache) {
  check_cols(input, layer.input_dim(), "bilstm_forward");
  const int h = layer.hidden_dim();
  Matrix out(input.rows(), 2 * h);
  out.leftCols(h) = direction_forward(layer.forward, input, false,
                                      cache ? &cache->forward : nullptr);
  out.rightCols(h) = direction_forward(layer.backward, input, true,
                                       cache ? &cache->backward : nullptr);
  if (cache) cache->input = input;
  return out;
}

Matrix bilstm_backward(const BiLstmLayer& layer, const BiLstmCache& cache,
                       const Matrix& d_output, BiLstmLayer& grad) {
  const int h = layer.hidden_dim();
  if (d_output.rows() != cache.input.rows() || d_output.cols() != 2 * h)
    throw ShapeError("bilstm_backward: upstream gradient shape mismatch");
  Matrix d_in = direction_backward(layer.forward, cache.input, cache.forward,
                                   d_output.leftCols(h), false, grad.forward);
  d_in += direction_backward(layer.backward, cache.input, cache.backward,
                             d_output.rightCols(h), true, grad.backward);
  return d_in;
}

Matrix head_logits(const AffineHead& head, const Matrix& hidden) {
  check_cols(hidden, head.input_dim(), "head_forward");
  Matrix logits = hidden * head.weight.transpose();
  logits.rowwise() += head.bias.transpose();
  return logits;
}

Matrix head_backward(const AffineHead& head, const Matrix& hidden,
                     const Matrix& d_logits, AffineHead& grad) {
  if (d_logits.rows() != hidden.rows() || d_logits.cols() != head.output_dim())
    throw ShapeError("head_backward: upstream gradient shape mismatch");
  grad.weight.noalias() += d_logits.transpose() * hidden;
  grad.bias += d_logits.colwise().sum().transpose();
  return d_logits * head.weight;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double mx = logits.row(t).maxCoeff();
    const double lse =
        mx + std::log((logits.row(t).array() - mx).exp().sum());
    out.row(t) = logits.row(t).array() - lse;
  }
  return out;
}

PosteriorGram head_forward(const AffineHead& head, const Matrix& hidden,
                           const Alphabet& alphabet) {
  if (alphabet.size() != head.output_dim())
    throw ShapeError("alphabet size does not match head width");
  return {log_softmax_rows(head_logits(head, hidden)).array().exp().matrix(),
          alphabet};
}

const Matrix& ModelTape::forward(const Matrix& input) {
  caches_.assign(model_->trunk.size(), {});
  Matrix x = input;
  for (std::size_t l = 0; l < model_->trunk.size(); ++l)
    x = bilstm_forward(model_->trunk[l], x, &caches_[l]);
  hidden_ = std::move(x);
  return hidden_;
}

const Matrix& ModelTape::hidden() const {
  if (!has_forward()) throw StateError("forward() has not been run");
  return hidden_;
}

Matrix ModelTape::logits(Head head) const {
  return head_logits(model_->head(head), hidden());
}

PosteriorGram ModelTape::posteriors(Head head) const {
  return head_forward(model_->head(head), hidden(), model_->alphabet(head));
}

void ModelTape::backward(const Matrix* d_phonetic_logits,
                         const Matrix* d_discriminative_logits, MtlModel& grads,
                         Matrix* d_input) const {
  if (!has_forward()) throw StateError("backward() called before forward()");
  if (grads.trunk.size() != model_->trunk.size())
    throw ShapeError("gradient container does not match the model");
  Matrix d_hidden = Matrix::Zero(hidden_.rows(), hidden_.cols());
  if (d_phonetic_logits)
    d_hidden += head_backward(model_->head(Head::kPhonetic), hidden_,
                              *d_phonetic_logits, grads.head(Head::kPhonetic));
  if (d_discriminative_logits)
    d_hidden += head_backward(model_->head(Head::kDiscriminative), hidden_,
                              *d_discriminative_logits,
                              grads.head(Head::kDiscriminative));
  for (std::size_t l = model_->trunk.size(); l-- > 0;)
    d_hidden = bilstm_backward(model_->trunk[l], caches_[l], d_hidden,
                               grads.trunk[l]);
  if (d_input) *d_input = std::move(d_hidden);
}

}  // namespace vtd
