// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Bidirectional LSTM trunk with two affine+softmax heads, plus hand-written
// reverse-mode gradients. Everything is float64.
//
// LSTM cell (no peepholes), gate rows ordered i, f, g, o:
//   z_t = W_in x_t + W_rec h_{t-1} + b
//   i = sigmoid(z_i)  f = sigmoid(z_f)  g = tanh(z_g)  o = sigmoid(z_o)
//   c_t = f * c_{t-1} + i * g
//   h_t = o * tanh(c_t)
// A bidirectional layer runs one cell over t = 0..T-1 and an independent cell
// over t = T-1..0 and concatenates [h_fwd_t, h_bwd_t].

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vtd/alphabet.hpp"
#include "vtd/frontend.hpp"

namespace vtd {

using RowVector = Eigen::RowVectorXd;

struct LstmDirection {
  Matrix w_input;      // 4H x D
  Matrix w_recurrent;  // 4H x H
  Vector bias;         // 4H

  int input_dim() const { return static_cast<int>(w_input.cols()); }
  int hidden_dim() const { return static_cast<int>(w_recurrent.cols()); }
};

struct BiLstmLayer {
  LstmDirection forward;
  LstmDirection backward;

  int input_dim() const { return forward.input_dim(); }
  int hidden_dim() const { return forward.hidden_dim(); }
  int output_dim() const { return 2 * hidden_dim(); }
};

struct AffineHead {
  Matrix weight;  // V x H
  Vector bias;    // V

  int input_dim() const { return static_cast<int>(weight.cols()); }
  int output_dim() const { return static_cast<int>(weight.rows()); }
};

enum class Head { kPhonetic, kDiscriminative };

struct ModelConfig {
  int input_dim = 280;
  int hidden_dim = 32;
  int num_layers = 2;
  Alphabet phonetic_alphabet = Alphabet::phonetic(10);
  bool has_phonetic_head = true;
  bool has_discriminative_head = true;

  /// 280-dim input, 4 x 256-unit biLSTM, 53-way phonetic head.
  static ModelConfig full_scale();
  void validate() const;
};

/// Tied biLSTM trunk plus optional phonetic and discriminative heads. The
/// same type holds gradients (see zeros_like).
struct MtlModel {
  ModelConfig config;
  std::vector<BiLstmLayer> trunk;
  std::optional<AffineHead> phonetic;
  std::optional<AffineHead> discriminative;

  /// All-zero parameters with the shapes implied by `cfg`.
  static MtlModel zeros(const ModelConfig& cfg);
  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases except forget gate = 1.
  static MtlModel initialized(const ModelConfig& cfg, std::uint64_t seed);
  MtlModel zeros_like() const { return zeros(config); }

  const AffineHead& head(Head h) const;
  AffineHead& head(Head h);
  bool has_head(Head h) const;
  int trunk_output_dim() const;
  const Alphabet& alphabet(Head h) const;
};

/// Visits every parameter tensor in declaration order: trunk layers
/// (forward then backward direction; w_input, w_recurrent, bias), then the
/// phonetic head, then the discriminative head (weight, bias).
template <typename Model, typename Fn>
void for_each_tensor(Model& model, Fn&& fn) {
  auto visit = [&](const std::string& name, auto& m) {
    fn(name, std::span(m.data(), static_cast<std::size_t>(m.size())));
  };
  for (std::size_t l = 0; l < model.trunk.size(); ++l) {
    auto& layer = model.trunk[l];
    const std::string p = "trunk." + std::to_string(l) + ".";
    visit(p + "fwd.w_input", layer.forward.w_input);
    visit(p + "fwd.w_recurrent", layer.forward.w_recurrent);
    visit(p + "fwd.bias", layer.forward.bias);
    visit(p + "bwd.w_input", layer.backward.w_input);
    visit(p + "bwd.w_recurrent", layer.backward.w_recurrent);
    visit(p + "bwd.bias", layer.backward.bias);
  }
  if (model.phonetic) {
    visit("phonetic.weight", model.phonetic->weight);
    visit("phonetic.bias", model.phonetic->bias);
  }
  if (model.discriminative) {
    visit("discriminative.weight", model.discriminative->weight);
    visit("discriminative.bias", model.discriminative->bias);
  }
}

/// Exact number of scalar parameters.
std::size_t count_parameters(const MtlModel& model);
/// Same count from shapes alone, without allocating the model.
std::size_t count_parameters(const ModelConfig& cfg);

/// Per-frame softmax output and the alphabet it ranges over.
struct PosteriorGram {
  Matrix probs;  // T' x V
  Alphabet alphabet;

  Eigen::Index num_frames() const { return probs.rows(); }
};

// Per-direction activations kept for the backward pass.
struct LstmDirectionCache {
  Matrix gates;   // T x 4H, post-activation
  Matrix cells;   // T x H
  Matrix hidden;  // T x H
};

struct BiLstmCache {
  Matrix input;
  LstmDirectionCache forward;
  LstmDirectionCache backward;
};

/// T x D -> T x 2H. Fills `cache` when non-null.
Matrix bilstm_forward(const BiLstmLayer& layer, const Matrix& input,
                      BiLstmCache* cache = nullptr);

/// Accumulates parameter gradients into `grad` and returns dLoss/dInput.
Matrix bilstm_backward(const BiLstmLayer& layer, const BiLstmCache& cache,
                       const Matrix& d_output, BiLstmLayer& grad);

Matrix head_logits(const AffineHead& head, const Matrix& hidden);
/// Accumulates into `grad`; returns dLoss/dHidden.
Matrix head_backward(const AffineHead& head, const Matrix& hidden,
                     const Matrix& d_logits, AffineHead& grad);

/// Row-wise log-softmax with max subtraction.
Matrix log_softmax_rows(const Matrix& logits);
PosteriorGram head_forward(const AffineHead& head, const Matrix& hidden,
                           const Alphabet& alphabet);

/// Records one trunk forward pass so that any subset of heads can be
/// back-propagated through the shared trunk in a single backward sweep.
class ModelTape {
 public:
  explicit ModelTape(const MtlModel& model) : model_(&model) {}

  /// Runs the trunk; returns the T' x 2H hidden sequence.
  const Matrix& forward(const Matrix& input);
  bool has_forward() const { return !caches_.empty(); }
  const Matrix& hidden() const;

  Matrix logits(Head head) const;
  Matrix log_probs(Head head) const { return log_softmax_rows(logits(head)); }
  PosteriorGram posteriors(Head head) const;

  /// Upstream gradients w.r.t. each head's logits; a null pointer leaves that
  /// head detached. Trunk gradients from both heads are summed before the
  /// single trunk backward. Throws StateError without a prior forward().
  void backward(const Matrix* d_phonetic_logits,
                const Matrix* d_discriminative_logits, MtlModel& grads,
                Matrix* d_input = nullptr) const;

 private:
  const MtlModel* model_;
  std::vector<BiLstmCache> caches_;
  Matrix hidden_;
};

}  // namespace vtd
