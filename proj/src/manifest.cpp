// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/manifest.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "vtd/errors.hpp"

namespace vtd {

using nlohmann::json;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kClean: return "clean";
    case Variant::kReverb: return "reverb";
    case Variant::kReverbEcho: return "reverb_echo";
  }
  return "clean";
}

Variant parse_variant(const std::string& s) {
  if (s == "clean") return Variant::kClean;
  if (s == "reverb") return Variant::kReverb;
  if (s == "reverb_echo") return Variant::kReverbEcho;
  throw DataError("unknown variant '" + s + "'");
}

void Utterance::validate() const {
  if (id.empty()) throw DataError("utterance without id");
  if (transcript.has_value() == binary_label.has_value())
    throw DataError("utterance " + id +
                    " must carry exactly one of transcript / binary_label");
}

std::string to_json_line(const Utterance& u) {
  json j;
  j["id"] = u.id;
  if (!u.audio_path.empty()) j["audio_path"] = u.audio_path;
  if (!u.features_path.empty()) j["features_path"] = u.features_path;
  if (u.transcript) j["transcript"] = *u.transcript;
  if (u.binary_label) j["binary_label"] = *u.binary_label;
  j["variant"] = to_string(u.variant);
  if (u.duration_s) j["duration_s"] = *u.duration_s;
  json prov = json::object();
  if (!u.provenance.source_id.empty()) prov["source_id"] = u.provenance.source_id;
  if (u.provenance.rir_id) prov["rir_id"] = *u.provenance.rir_id;
  if (u.provenance.residual_id) prov["residual_id"] = *u.provenance.residual_id;
  if (u.provenance.snr_db) prov["snr_db"] = *u.provenance.snr_db;
  j["provenance"] = prov;
  return j.dump();
}

Utterance parse_json_line(const std::string& line) {
  Utterance u;
  try {
    const json j = json::parse(line);
    u.id = j.at("id").get<std::string>();
    u.audio_path = j.value("audio_path", "");
    u.features_path = j.value("features_path", "");
    if (j.contains("transcript")) u.transcript = j["transcript"].get<LabelSequence>();
    if (j.contains("binary_label")) u.binary_label = j["binary_label"].get<bool>();
    u.variant = parse_variant(j.value("variant", "clean"));
    if (j.contains("duration_s")) u.duration_s = j["duration_s"].get<double>();
    if (j.contains("provenance")) {
      const json& p = j["provenance"];
      u.provenance.source_id = p.value("source_id", "");
      if (p.contains("rir_id")) u.provenance.rir_id = p["rir_id"].get<std::string>();
      if (p.contains("residual_id"))
        u.provenance.residual_id = p["residual_id"].get<std::string>();
      if (p.contains("snr_db")) u.provenance.snr_db = p["snr_db"].get<double>();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest line: ") + e.what());
  }
  u.validate();
  return u;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.push_back(parse_json_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!ids.insert(m.back().id).second)
      throw DataError(path.string() + ": duplicate id " + m.back().id);
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& u : manifest) out << to_json_line(u) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

}  // namespace vtd
