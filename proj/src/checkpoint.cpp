// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vtd/errors.hpp"

namespace vtd {

using nlohmann::json;

void save_checkpoint(const std::filesystem::path& path, const MtlModel& model) {
  json header;
  header["input_dim"] = model.config.input_dim;
  header["hidden_dim"] = model.config.hidden_dim;
  header["num_layers"] = model.config.num_layers;
  header["phonetic_alphabet"] = {{"symbols", model.config.phonetic_alphabet.symbols},
                                 {"blank", model.config.phonetic_alphabet.blank}};
  header["has_phonetic_head"] = model.phonetic.has_value();
  header["has_discriminative_head"] = model.discriminative.has_value();
  header["tensors"] = json::array();
  std::uint64_t total = 0;
  for_each_tensor(model, [&](const std::string& name, std::span<const double> t) {
    header["tensors"].push_back({{"name", name}, {"size", t.size()}});
    total += t.size();
  });
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::uint32_t version = kCheckpointVersion;
  const auto len = static_cast<std::uint32_t>(text.size());
  out.write("VTDM", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(text.data(), len);
  out.write(reinterpret_cast<const char*>(&total), 8);
  for_each_tensor(model, [&](const std::string&, std::span<const double> t) {
    for (double v : t) {
      const auto f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  });
  if (!out) throw DataError("write failed: " + path.string());
}

MtlModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  std::uint32_t version = 0, len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&len), 4);
  if (!in || std::memcmp(magic, "VTDM", 4) != 0)
    throw DataError(path.string() + " is not a VTDM checkpoint");
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  std::string text(len, '\0');
  in.read(text.data(), len);

  ModelConfig cfg;
  try {
    const json header = json::parse(text);
    cfg.input_dim = header.at("input_dim");
    cfg.hidden_dim = header.at("hidden_dim");
    cfg.num_layers = header.at("num_layers");
    cfg.phonetic_alphabet.symbols =
        header.at("phonetic_alphabet").at("symbols").get<std::vector<std::string>>();
    cfg.phonetic_alphabet.blank = header.at("phonetic_alphabet").at("blank");
    cfg.has_phonetic_head = header.at("has_phonetic_head");
    cfg.has_discriminative_head = header.at("has_discriminative_head");
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
  }

  MtlModel model = MtlModel::zeros(cfg);
  std::uint64_t total = 0;
  in.read(reinterpret_cast<char*>(&total), 8);
  if (!in || total != count_parameters(model))
    throw DataError(path.string() + ": parameter count does not match header");
  for_each_tensor(model, [&](const std::string&, std::span<double> t) {
    std::vector<float> buf(t.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * 4));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = buf[i];
  });
  if (!in) throw DataError("truncated checkpoint " + path.string());
  return model;
}

}  // namespace vtd
