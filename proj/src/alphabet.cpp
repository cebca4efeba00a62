// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/alphabet.hpp"

#include <algorithm>
#include <set>

#include "vtd/errors.hpp"

namespace vtd {

int Alphabet::index_of(std::string_view name) const {
  const auto it = std::find(symbols.begin(), symbols.end(), name);
  return it == symbols.end() ? -1 : static_cast<int>(it - symbols.begin());
}

void Alphabet::validate() const {
  if (symbols.size() < 2)
    throw ConfigError("alphabet needs a blank and at least one symbol");
  if (blank < 0 || blank >= size())
    throw ConfigError("blank index out of range");
  if (std::set<std::string>(symbols.begin(), symbols.end()).size() !=
      symbols.size())
    throw ConfigError("alphabet symbols must be unique");
}

Alphabet Alphabet::phonetic(int n_phones) {
  if (n_phones < 1) throw ConfigError("need at least one phone");
  Alphabet a;
  a.symbols.reserve(n_phones + 1);
  a.symbols.emplace_back("<b>");
  for (int i = 0; i < n_phones; ++i) a.symbols.push_back("p" + std::to_string(i));
  return a;
}

Alphabet Alphabet::discriminative() {
  return Alphabet{{"<b>", "TRIGGER"}, 0};
}

}  // namespace vtd
