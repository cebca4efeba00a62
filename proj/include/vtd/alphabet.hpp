// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vtd {

/// Ordered output symbol inventory of a softmax head. Index `blank` is the
/// CTC blank; every other index is an emitting symbol.
struct Alphabet {
  std::vector<std::string> symbols;
  int blank = 0;

  int size() const { return static_cast<int>(symbols.size()); }
  /// Index of `name`, or -1.
  int index_of(std::string_view name) const;
  void validate() const;

  /// Blank at index 0 followed by `n_phones` symbols named p0, p1, ...
  static Alphabet phonetic(int n_phones);
  /// {blank, TRIGGER}.
  static Alphabet discriminative();

  bool operator==(const Alphabet&) const = default;
};

inline constexpr int kTriggerSymbol = 1;

}  // namespace vtd
