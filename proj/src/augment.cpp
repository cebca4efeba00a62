// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

double energy(const std::vector<float>& x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

double peak(const std::vector<float>& x) {
  double p = 0.0;
  for (float v : x) p = std::max(p, static_cast<double>(std::abs(v)));
  return p;
}

std::vector<double> convolve_direct(const std::vector<float>& x,
                                    const std::vector<float>& h) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t kmax = std::min(h.size(), i + 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k)
      acc += static_cast<double>(h[k]) * x[i - k];
    y[i] = acc;
  }
  return y;
}

std::vector<double> convolve_fft(const std::vector<float>& x,
                                 const std::vector<float>& h) {
  std::size_t n_fft = 1;
  while (n_fft < x.size() + h.size() - 1) n_fft <<= 1;
  std::vector<double> a(n_fft, 0.0), b(n_fft, 0.0);
  std::copy(x.begin(), x.end(), a.begin());
  std::copy(h.begin(), h.end(), b.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> full;
  fft.inv(full, fa);
  full.resize(x.size());
  return full;
}

}  // namespace

std::vector<double> convolve_truncated(const std::vector<float>& signal,
                                       const std::vector<float>& kernel) {
  if (signal.empty()) throw EmptyInputError("cannot convolve an empty clip");
  if (kernel.empty()) throw ConfigError("empty impulse response");
  return kernel.size() <= kDirectConvolutionMaxTaps ? convolve_direct(signal, kernel)
                                                    : convolve_fft(signal, kernel);
}

AudioClip convolve_rir(const AudioClip& clip, const ImpulseResponse& rir) {
  if (clip.sample_rate_hz != rir.sample_rate_hz)
    throw ConfigError("RIR " + rir.id + " sample rate does not match the clip");
  const std::vector<double> y = convolve_truncated(clip.samples, rir.taps);
  double out_peak = 0.0;
  for (double v : y) out_peak = std::max(out_peak, std::abs(v));
  const double in_peak = peak(clip.samples);
  const double scale = out_peak > 0.0 ? in_peak / out_peak : 0.0;
  AudioClip out{std::vector<float>(y.size()), clip.sample_rate_hz};
  for (std::size_t i = 0; i < y.size(); ++i) out.samples[i] = static_cast<float>(y[i] * scale);
  return out;
}

AudioClip mix_residual(const AudioClip& clip, const ResidualClip& residual,
                       double snr_db, bool pass_through_silent_residual) {
  if (clip.sample_rate_hz != residual.audio.sample_rate_hz)
    throw ConfigError("residual " + residual.id + " sample rate does not match the clip");
  if (residual.audio.samples.empty()) throw ConfigError("empty residual clip");
  const double e_clip = energy(clip.samples);
  if (e_clip == 0.0) throw ConfigError("cannot set an SNR against a silent clip");

  const std::size_t n = clip.samples.size();
  std::vector<float> tiled(n);
  for (std::size_t i = 0; i < n; ++i)
    tiled[i] = residual.audio.samples[i % residual.audio.samples.size()];
  const double e_res = energy(tiled);
  if (e_res == 0.0) {
    if (pass_through_silent_residual) return clip;
    throw ConfigError("residual " + residual.id + " is silent");
  }
  const double gain = std::sqrt(e_clip / (e_res * std::pow(10.0, snr_db / 10.0)));
  AudioClip out = clip;
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = static_cast<float>(clip.samples[i] + gain * tiled[i]);
  return out;
}

ImpulseResponse synthetic_rir(std::mt19937_64& rng, int sample_rate_hz,
                              double rt60_s, std::string id) {
  if (sample_rate_hz <= 0 || !(rt60_s > 0.0)) throw ConfigError("bad RIR parameters");
  const auto n = static_cast<std::size_t>(std::ceil(rt60_s * sample_rate_hz));
  std::normal_distribution<double> gauss(0.0, 1.0);
  // 60 dB amplitude decay over rt60: exp(-6.9078 t / rt60).
  const double decay = std::log(1000.0) / (rt60_s * sample_rate_hz);
  ImpulseResponse rir{std::move(id), std::vector<float>(std::max<std::size_t>(n, 1)),
                      sample_rate_hz};
  rir.taps[0] = 1.0f;
  for (std::size_t i = 1; i < rir.taps.size(); ++i)
    rir.taps[i] = static_cast<float>(0.3 * gauss(rng) * std::exp(-decay * i));
  return rir;
}

ResidualClip synthetic_residual(std::mt19937_64& rng, int sample_rate_hz,
                                std::size_t num_samples, std::string id) {
  if (sample_rate_hz <= 0 || num_samples == 0)
    throw ConfigError("bad residual parameters");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Two-pole resonator centered somewhere in 200 Hz - 3 kHz.
  const double fc = 200.0 + 2800.0 * unif(rng);
  const double r = 0.97;
  const double w = 2.0 * std::numbers::pi * fc / sample_rate_hz;
  const double a1 = 2.0 * r * std::cos(w), a2 = -r * r;
  const double mod_hz = 0.5 + 3.5 * unif(rng);
  ResidualClip res{std::move(id), {std::vector<float>(num_samples), sample_rate_hz}};
  double y1 = 0.0, y2 = 0.0, mx = 0.0;
  std::vector<double> y(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    const double v = gauss(rng) + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = v;
    const double env =
        0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * mod_hz * i / sample_rate_hz);
    y[i] = v * env;
    mx = std::max(mx, std::abs(y[i]));
  }
  for (std::size_t i = 0; i < num_samples; ++i)
    res.audio.samples[i] = static_cast<float>(0.5 * y[i] / mx);
  return res;
}

AudioClip render_variant(const AudioClip& clean, const Utterance& planned,
                         const ImpulseResponse* rir, const ResidualClip* residual) {
  if (planned.variant == Variant::kClean) return clean;
  if (!rir) throw ConfigError("entry " + planned.id + " needs an RIR");
  AudioClip out = convolve_rir(clean, *rir);
  if (planned.variant == Variant::kReverb) return out;
  if (!residual || !planned.provenance.snr_db)
    throw ConfigError("entry " + planned.id + " needs a residual and an SNR");
  return mix_residual(out, *residual, *planned.provenance.snr_db);
}

Manifest build_augmented_set(const Manifest& clean,
                             const std::vector<std::string>& rir_ids,
                             const std::vector<std::string>& residual_ids,
                             const AugmentConfig& cfg,
                             const std::string& out_audio_dir) {
  if (rir_ids.empty()) throw ConfigError("RIR pool is empty");
  if (residual_ids.empty()) throw ConfigError("echo-residual pool is empty");
  if (!(cfg.snr_min_db <= cfg.snr_max_db)) throw ConfigError("bad SNR range");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_rir(0, rir_ids.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_res(0, residual_ids.size() - 1);
  std::uniform_real_distribution<double> pick_snr(cfg.snr_min_db, cfg.snr_max_db);

  Manifest out;
  out.reserve(3 * clean.size());
  for (const Utterance& src : clean) {
    src.validate();
    const std::string& rir = rir_ids[pick_rir(rng)];
    const std::string& res = residual_ids[pick_res(rng)];
    const double snr = pick_snr(rng);

    Utterance c = src;
    c.variant = Variant::kClean;
    c.provenance = Provenance{src.id, std::nullopt, std::nullopt, std::nullopt};

    Utterance r = c;
    r.id = src.id + "__reverb";
    r.variant = Variant::kReverb;
    r.audio_path = out_audio_dir + "/" + r.id + ".wav";
    r.features_path.clear();
    r.provenance.rir_id = rir;

    Utterance re = r;
    re.id = src.id + "__reverb_echo";
    re.variant = Variant::kReverbEcho;
    re.audio_path = out_audio_dir + "/" + re.id + ".wav";
    re.provenance.residual_id = res;
    re.provenance.snr_db = snr;

    out.push_back(std::move(c));
    out.push_back(std::move(r));
    out.push_back(std::move(re));
  }
  return out;
}

}  // namespace vtd
