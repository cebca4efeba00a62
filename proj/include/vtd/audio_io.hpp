// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#pragma once

#include <filesystem>

#include "vtd/frontend.hpp"

namespace vtd {

// 16-bit PCM mono RIFF/WAVE. Multi-channel files are rejected.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

// Raw little-endian float32 samples. The sample rate lives in a sidecar text
// file named "<path>.rate" holding a single decimal integer.
AudioClip read_raw_f32(const std::filesystem::path& path);
void write_raw_f32(const std::filesystem::path& path, const AudioClip& clip);

/// Dispatches on extension: ".wav" -> WAV, anything else -> raw float32.
AudioClip read_audio(const std::filesystem::path& path);

// Feature file (all fields little-endian):
//   offset 0   char[4]  magic "VTDF"
//   offset 4   uint32   T  (frames)
//   offset 8   uint32   D  (dims per frame)
//   offset 12  float32  frame rate in frames per second
//   offset 16  float32  T*D values, row-major (frame 0 dims 0..D-1, frame 1, ...)
void write_features(const std::filesystem::path& path,
                    const FeatureSequence& feats);
FeatureSequence read_features(const std::filesystem::path& path);

}  // namespace vtd
