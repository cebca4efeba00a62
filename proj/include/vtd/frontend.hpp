// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Log-Mel feature extraction and context stacking.
//
//   audio --(25 ms Hann, 10 ms shift, |FFT|^2)--> power spectrum
//         --(triangular Mel filters, area-normalized)--> log(E + floor)
//         --(stack +/-3 frames, keep every 3rd)--> model input
//
// All functions are pure; concurrent calls on different clips are safe.

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace vtd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct AudioClip {
  std::vector<float> samples;  // mono, nominally in [-1, 1]
  int sample_rate_hz = 16000;
};

struct FrontendConfig {
  int sample_rate_hz = 16000;
  double window_ms = 25.0;
  double shift_ms = 10.0;
  int n_mels = 40;
  double log_floor = 1e-10;
  // 0 picks the next power of two >= window length.
  int fft_size = 0;

  int frame_length() const;
  int frame_shift() const;
  int resolved_fft_size() const;
  void validate() const;
};

/// Time-major T x D log-Mel frames.
struct FeatureSequence {
  Matrix frames;
  double frame_rate_fps = 100.0;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

/// Stacked, subsampled windows fed to the acoustic model (T' x 7D).
struct ModelInput {
  Matrix windows;
  double frame_rate_fps = 100.0 / 3.0;

  Eigen::Index num_frames() const { return windows.rows(); }
  Eigen::Index dim() const { return windows.cols(); }
};

/// Triangular Mel filterbank spanning 0 Hz to Nyquist. Each filter's
/// weights sum to one over the FFT bins it covers.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int fft_size, int sample_rate_hz);

  /// (n_mels x (fft_size/2 + 1)) weight matrix.
  const Matrix& weights() const { return weights_; }
  /// Center frequency of each filter in Hz.
  const std::vector<double>& center_hz() const { return center_hz_; }

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  Matrix weights_;
  std::vector<double> center_hz_;
};

/// Symmetric Hann window of length n.
std::vector<double> hann_window(int n);

FeatureSequence compute_features(const AudioClip& clip,
                                 const FrontendConfig& cfg = {});

ModelInput stack_and_subsample(const FeatureSequence& feats, int context = 3,
                               int factor = 3);

}  // namespace vtd
