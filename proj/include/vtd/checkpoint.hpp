// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors
//
// Model checkpoint file (little-endian):
//   char[4]   magic "VTDM"
//   uint32    format version (1)
//   uint32    byte length N of the JSON header
//   char[N]   UTF-8 JSON: {"input_dim", "hidden_dim", "num_layers",
//             "phonetic_alphabet": {"symbols": [...], "blank"},
//             "has_phonetic_head", "has_discriminative_head",
//             "tensors": [{"name", "size"}, ...]}
//   uint64    total parameter count P
//   float32   P values, tensors in for_each_tensor order, each tensor in
//             Eigen column-major order
// Baseline and MTL models share the format; absent heads are simply not
// listed and flagged false.

#pragma once

#include <filesystem>

#include "vtd/nnet.hpp"

namespace vtd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const MtlModel& model);
MtlModel load_checkpoint(const std::filesystem::path& path);

}  // namespace vtd
