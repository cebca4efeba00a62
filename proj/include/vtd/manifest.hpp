// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// JSON-lines dataset manifests. One object per line:
//   {"id": "...",
//    "audio_path": "...",            optional
//    "features_path": "...",         optional (VTDF file)
//    "transcript": [3, 7, 1],        phonetic utterances only
//    "binary_label": true,           discriminative/test utterances only
//    "variant": "clean" | "reverb" | "reverb_echo",
//    "duration_s": 0.42,             optional
//    "provenance": {"source_id", "rir_id", "residual_id", "snr_db"}}
// Relative paths are resolved against the manifest's directory.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vtd/ctc.hpp"

namespace vtd {

enum class Variant { kClean, kReverb, kReverbEcho };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct Provenance {
  std::string source_id;
  std::optional<std::string> rir_id;
  std::optional<std::string> residual_id;
  std::optional<double> snr_db;

  bool operator==(const Provenance&) const = default;
};

struct Utterance {
  std::string id;
  std::string audio_path;
  std::string features_path;
  std::optional<LabelSequence> transcript;
  std::optional<bool> binary_label;
  Variant variant = Variant::kClean;
  std::optional<double> duration_s;
  Provenance provenance;

  /// Exactly one of transcript / binary_label must be present.
  void validate() const;
  bool operator==(const Utterance&) const = default;
};

using Manifest = std::vector<Utterance>;

std::string to_json_line(const Utterance& u);
Utterance parse_json_line(const std::string& line);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// `p` if absolute, else `base_dir / p`.
std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& p);

}  // namespace vtd
