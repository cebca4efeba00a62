// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vtd Authors

#include "vtd/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vtd/errors.hpp"

namespace vtd {
namespace {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T load(const std::vector<char>& buf, std::size_t offset,
       const std::filesystem::path& path) {
  if (offset + sizeof(T) > buf.size())
    throw DataError("truncated file " + path.string());
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void store(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw DataError(path.string() + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const auto size = load<std::uint32_t>(buf, pos + 4, path);
    const std::size_t body = pos + 8;
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      format = load<std::uint16_t>(buf, body, path);
      channels = load<std::uint16_t>(buf, body + 2, path);
      rate = load<std::uint32_t>(buf, body + 4, path);
      bits = load<std::uint16_t>(buf, body + 14, path);
      have_fmt = true;
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw DataError(path.string() + ": data before fmt chunk");
      if (format != 1 || bits != 16)
        throw DataError(path.string() + ": only 16-bit PCM is supported");
      if (channels != 1)
        throw DataError(path.string() + ": only mono audio is supported");
      const std::size_t n =
          std::min<std::size_t>(size, buf.size() - body) / 2;
      AudioClip clip;
      clip.sample_rate_hz = static_cast<int>(rate);
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        clip.samples[i] = load<std::int16_t>(buf, body + 2 * i, path) / 32768.0f;
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  throw DataError(path.string() + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  auto out = open_out(path);
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const auto rate = static_cast<std::uint32_t>(clip.sample_rate_hz);
  out.write("RIFF", 4);
  store<std::uint32_t>(out, 36 + 2 * n);
  out.write("WAVEfmt ", 8);
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, 1);
  store<std::uint16_t>(out, 1);
  store<std::uint32_t>(out, rate);
  store<std::uint32_t>(out, rate * 2);
  store<std::uint16_t>(out, 2);
  store<std::uint16_t>(out, 16);
  out.write("data", 4);
  store<std::uint32_t>(out, 2 * n);
  for (float s : clip.samples) {
    const float c = std::clamp(s, -1.0f, 32767.0f / 32768.0f);
    store<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32768.0f)));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

AudioClip read_raw_f32(const std::filesystem::path& path) {
  auto rate_path = path;
  rate_path += ".rate";
  std::ifstream rate_in(rate_path);
  long rate = 0;
  if (!(rate_in >> rate))
    throw DataError("missing or unreadable sample-rate sidecar " +
                    rate_path.string());
  if (rate <= 0) throw ConfigError("non-positive sample rate in " + rate_path.string());

  const auto buf = slurp(path);
  if (buf.size() % 4 != 0)
    throw DataError(path.string() + ": size is not a multiple of 4 bytes");
  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.samples.resize(buf.size() / 4);
  std::memcpy(clip.samples.data(), buf.data(), buf.size());
  return clip;
}

void write_raw_f32(const std::filesystem::path& path, const AudioClip& clip) {
  auto out = open_out(path);
  out.write(reinterpret_cast<const char*>(clip.samples.data()),
            static_cast<std::streamsize>(clip.samples.size() * sizeof(float)));
  auto rate_path = path;
  rate_path += ".rate";
  std::ofstream rate_out(rate_path, std::ios::trunc);
  rate_out << clip.sample_rate_hz << "\n";
  if (!out || !rate_out) throw DataError("write failed: " + path.string());
}

AudioClip read_audio(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav" ? read_wav(path) : read_raw_f32(path);
}

void write_features(const std::filesystem::path& path,
                    const FeatureSequence& feats) {
  auto out = open_out(path);
  out.write("VTDF", 4);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(feats.num_frames()));
  store<std::uint32_t>(out, static_cast<std::uint32_t>(feats.dim()));
  store<float>(out, static_cast<float>(feats.frame_rate_fps));
  for (Eigen::Index t = 0; t < feats.num_frames(); ++t)
    for (Eigen::Index d = 0; d < feats.dim(); ++d)
      store<float>(out, static_cast<float>(feats.frames(t, d)));
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureSequence read_features(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  if (buf.size() < 16 || std::memcmp(buf.data(), "VTDF", 4) != 0)
    throw DataError(path.string() + " is not a VTDF feature file");
  const auto n = load<std::uint32_t>(buf, 4, path);
  const auto d = load<std::uint32_t>(buf, 8, path);
  const auto fps = load<float>(buf, 12, path);
  if (buf.size() != 16 + 4ull * n * d)
    throw DataError(path.string() + ": payload size does not match header");
  FeatureSequence feats;
  feats.frame_rate_fps = fps;
  feats.frames.resize(n, d);
  std::size_t off = 16;
  for (std::uint32_t t = 0; t < n; ++t)
    for (std::uint32_t k = 0; k < d; ++k, off += 4)
      feats.frames(t, k) = load<float>(buf, off, path);
  return feats;
}

}  // namespace vtd
