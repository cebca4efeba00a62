// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Training-set augmentation: every clean utterance yields three entries,
// clean / reverberated (RIR convolution) / reverberated + echo residual.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vtd/frontend.hpp"
#include "vtd/manifest.hpp"

namespace vtd {

struct ImpulseResponse {
  std::string id;
  std::vector<float> taps;
  int sample_rate_hz = 16000;
};

struct ResidualClip {
  std::string id;
  AudioClip audio;
};

/// Kernels longer than this go through the FFT path.
inline constexpr std::size_t kDirectConvolutionMaxTaps = 64;

/// Linear convolution truncated to the input length, then rescaled so the
/// output peak equals the input peak.
AudioClip convolve_rir(const AudioClip& clip, const ImpulseResponse& rir);

/// Unnormalized truncated convolution (direct or FFT by kernel length).
std::vector<double> convolve_truncated(const std::vector<float>& signal,
                                       const std::vector<float>& kernel);

/// Adds `residual` (tiled to the clip length) scaled so that
/// 10 log10(E_clip / E_residual') = snr_db. A silent clip is an error; a
/// silent residual is an error unless `pass_through_silent_residual`.
AudioClip mix_residual(const AudioClip& clip, const ResidualClip& residual,
                       double snr_db, bool pass_through_silent_residual = false);

/// Exponentially decaying noise tail with a unit direct-path tap.
ImpulseResponse synthetic_rir(std::mt19937_64& rng, int sample_rate_hz,
                              double rt60_s, std::string id);

/// Band-limited noise under a slow amplitude modulation (stand-in for
/// playback leaking through echo cancellation).
ResidualClip synthetic_residual(std::mt19937_64& rng, int sample_rate_hz,
                                std::size_t num_samples, std::string id);

/// Renders one planned entry from its clean source audio: clean entries are
/// returned unchanged, "reverb" applies `rir`, "reverb_echo" applies `rir`
/// then mixes `residual` at the planned SNR.
AudioClip render_variant(const AudioClip& clean, const Utterance& planned,
                         const ImpulseResponse* rir, const ResidualClip* residual);

struct AugmentConfig {
  double snr_min_db = -5.0;
  double snr_max_db = 20.0;
  std::uint64_t seed = 0;
};

/// Plans the tripled manifest: for each input entry (in order) a clean copy,
/// a "reverb" entry and a "reverb_echo" entry sharing one RIR draw. Labels
/// are copied verbatim. Output audio paths are `<out_audio_dir>/<id>.wav`
/// for the two derived variants. Deterministic in `cfg.seed`.
Manifest build_augmented_set(const Manifest& clean,
                             const std::vector<std::string>& rir_ids,
                             const std::vector<std::string>& residual_ids,
                             const AugmentConfig& cfg,
                             const std::string& out_audio_dir = "augmented");

}  // namespace vtd
