// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "vtd/errors.hpp"

namespace vtd {

int FrontendConfig::frame_length() const {
  return static_cast<int>(std::lround(sample_rate_hz * window_ms / 1000.0));
}

int FrontendConfig::frame_shift() const {
  return static_cast<int>(std::lround(sample_rate_hz * shift_ms / 1000.0));
}

int FrontendConfig::resolved_fft_size() const {
  if (fft_size > 0) return fft_size;
  int n = 1;
  while (n < frame_length()) n <<= 1;
  return n;
}

void FrontendConfig::validate() const {
  if (sample_rate_hz <= 0)
    throw ConfigError("sample rate must be positive, got " +
                      std::to_string(sample_rate_hz));
  if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (frame_length() < 2 || frame_shift() < 1)
    throw ConfigError("window/shift too short for the sample rate");
  if (resolved_fft_size() < frame_length())
    throw ConfigError("fft_size smaller than the analysis window");
  if (!(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
}

double MelFilterbank::hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelFilterbank::mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(int n_mels, int fft_size, int sample_rate_hz) {
  const int n_bins = fft_size / 2 + 1;
  const double nyquist = sample_rate_hz / 2.0;
  const double mel_hi = hz_to_mel(nyquist);

  // n_mels + 2 equally spaced Mel points; filter m spans points m..m+2.
  std::vector<double> edges_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges_hz[i] = mel_to_hz(mel_hi * i / (n_mels + 1));

  weights_ = Matrix::Zero(n_mels, n_bins);
  center_hz_.resize(n_mels);
  const double bin_hz = static_cast<double>(sample_rate_hz) / fft_size;
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges_hz[m], mid = edges_hz[m + 1], hi = edges_hz[m + 2];
    center_hz_[m] = mid;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      weights_(m, k) = w;
    }
    const double area = weights_.row(m).sum();
    if (area > 0.0) {
      weights_.row(m) /= area;
    } else {
      // Filter narrower than one bin: fall back to the nearest bin.
      const int k = std::clamp(static_cast<int>(std::lround(mid / bin_hz)), 0,
                               n_bins - 1);
      weights_(m, k) = 1.0;
    }
  }
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

FeatureSequence compute_features(const AudioClip& clip,
                                 const FrontendConfig& cfg) {
  if (clip.sample_rate_hz <= 0)
    throw ConfigError("audio clip has non-positive sample rate");
  const FrontendConfig& c = cfg;
  c.validate();
  if (clip.sample_rate_hz != c.sample_rate_hz)
    throw ConfigError("clip sample rate " + std::to_string(clip.sample_rate_hz) +
                      " Hz does not match frontend rate " +
                      std::to_string(c.sample_rate_hz) + " Hz");

  const int frame_len = c.frame_length();
  const int shift = c.frame_shift();
  const int n_fft = c.resolved_fft_size();
  const auto n_samples = static_cast<long>(clip.samples.size());
  if (n_samples < frame_len)
    throw EmptyInputError("clip shorter than one analysis frame (" +
                          std::to_string(n_samples) + " < " +
                          std::to_string(frame_len) + " samples)");

  const long n_frames = (n_samples - frame_len) / shift + 1;
  const MelFilterbank bank(c.n_mels, n_fft, c.sample_rate_hz);
  const std::vector<double> window = hann_window(frame_len);
  const int n_bins = n_fft / 2 + 1;

  Eigen::FFT<double> fft;
  std::vector<double> buf(n_fft, 0.0);
  std::vector<std::complex<double>> spec;
  Vector power(n_bins);

  FeatureSequence out;
  out.frames.resize(n_frames, c.n_mels);
  out.frame_rate_fps = static_cast<double>(c.sample_rate_hz) / shift;
  for (long t = 0; t < n_frames; ++t) {
    const float* src = clip.samples.data() + t * shift;
    for (int i = 0; i < frame_len; ++i) buf[i] = src[i] * window[i];
    std::fill(buf.begin() + frame_len, buf.end(), 0.0);
    fft.fwd(spec, buf);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(spec[k]);
    const Vector energies = bank.weights() * power;
    for (int m = 0; m < c.n_mels; ++m)
      out.frames(t, m) = std::log(energies[m] + c.log_floor);
  }
  return out;
}

ModelInput stack_and_subsample(const FeatureSequence& feats, int context,
                               int factor) {
  if (context < 0) throw ConfigError("context must be >= 0");
  if (factor < 1) throw ConfigError("subsampling factor must be >= 1");
  const Eigen::Index n = feats.num_frames();
  const Eigen::Index d = feats.dim();
  if (n == 0 || d == 0) throw EmptyInputError("empty feature sequence");

  const Eigen::Index width = 2 * context + 1;
  const Eigen::Index n_out = (n + factor - 1) / factor;
  ModelInput out;
  out.windows.resize(n_out, width * d);
  out.frame_rate_fps = feats.frame_rate_fps / factor;
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const Eigen::Index center = i * factor;
    for (Eigen::Index j = 0; j < width; ++j) {
      const Eigen::Index src =
          std::clamp<Eigen::Index>(center - context + j, 0, n - 1);
      out.windows.block(i, j * d, 1, d) = feats.frames.row(src);
    }
  }
  return out;
}

}  // namespace vtd
