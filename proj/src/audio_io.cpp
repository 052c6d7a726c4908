// Copyright 2026 The svdfkws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kws/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace kws {
namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("truncated WAV header", off);
  return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

std::uint16_t u16_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 2 > b.size()) throw FormatError("truncated WAV header", off);
  return static_cast<std::uint16_t>(b[off] | b[off + 1] << 8);
}

bool tag_at(const std::vector<std::uint8_t>& b, std::size_t off, const char* tag) {
  return off + 4 <= b.size() && std::memcmp(b.data() + off, tag, 4) == 0;
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

float sample_from(std::uint8_t lo, std::uint8_t hi) {
  const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | hi << 8));
  return static_cast<float>(v) / 32768.0f;
}

std::int16_t to_pcm16(float x) {
  const double v = std::round(static_cast<double>(x) * 32768.0);
  return static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
}

}  // namespace

std::vector<float> parse_wav(const std::vector<std::uint8_t>& b) {
  if (!tag_at(b, 0, "RIFF") || !tag_at(b, 8, "WAVE")) throw FormatError("not a RIFF/WAVE file", 0);
  std::size_t off = 12;
  bool have_fmt = false;
  while (off + 8 <= b.size()) {
    const std::uint32_t size = u32_at(b, off + 4);
    const std::size_t body = off + 8;
    if (tag_at(b, off, "fmt ")) {
      if (size < 16) throw FormatError("fmt chunk too short", off);
      const auto format = u16_at(b, body);
      const auto channels = u16_at(b, body + 2);
      const auto rate = u32_at(b, body + 4);
      const auto bits = u16_at(b, body + 14);
      if (format != 1) throw DataError("WAV is not integer PCM (format " + std::to_string(format) + ")");
      if (channels != 1) throw DataError("WAV must be mono, has " + std::to_string(channels) + " channels");
      if (rate != static_cast<std::uint32_t>(kSampleRate))
        throw DataError("WAV sample rate " + std::to_string(rate) + " Hz, expected 16000 Hz");
      if (bits != 16) throw DataError("WAV must be 16-bit, has " + std::to_string(bits) + " bits");
      have_fmt = true;
    } else if (tag_at(b, off, "data")) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk", off);
      if (body + size > b.size()) throw FormatError("data chunk runs past end of file", off);
      std::vector<float> pcm(size / 2);
      for (std::size_t i = 0; i < pcm.size(); ++i) pcm[i] = sample_from(b[body + 2 * i], b[body + 2 * i + 1]);
      return pcm;
    }
    off = body + size + (size & 1u);
  }
  throw FormatError("no data chunk", off);
}

std::vector<float> read_wav(const std::string& path) {
  try {
    return parse_wav(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what(), e.offset());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const std::vector<float>& pcm) {
  const auto data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  std::vector<std::uint8_t> b;
  b.reserve(44 + data_bytes);
  for (char c : std::string("RIFF")) b.push_back(static_cast<std::uint8_t>(c));
  put_u32(b, 36 + data_bytes);
  for (char c : std::string("WAVEfmt ")) b.push_back(static_cast<std::uint8_t>(c));
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, 1);
  put_u32(b, kSampleRate);
  put_u32(b, kSampleRate * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  for (char c : std::string("data")) b.push_back(static_cast<std::uint8_t>(c));
  put_u32(b, data_bytes);
  for (float x : pcm) put_u16(b, static_cast<std::uint16_t>(to_pcm16(x)));
  return b;
}

void write_wav(const std::string& path, const std::vector<float>& pcm) {
  const auto bytes = encode_wav(pcm);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::vector<float> read_pcm16(std::istream& in) {
  const std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (b.size() % 2) throw FormatError("raw PCM16 stream has an odd byte count", b.size() - 1);
  std::vector<float> pcm(b.size() / 2);
  for (std::size_t i = 0; i < pcm.size(); ++i) pcm[i] = sample_from(b[2 * i], b[2 * i + 1]);
  return pcm;
}

void write_features(std::ostream& out, const std::vector<FeatureFrame>& frames, FeatureFormat format) {
  if (format == FeatureFormat::kCsv) {
    out.precision(9);
    for (const auto& f : frames) {
      out << f.timestamp_ms;
      for (Eigen::Index i = 0; i < f.values.size(); ++i) out << ',' << f.values[i];
      out << '\n';
    }
    return;
  }
  for (const auto& f : frames) {
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
      std::uint32_t bits;
      const float v = f.values[i];
      std::memcpy(&bits, &v, 4);
      const char le[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                          static_cast<char>(bits >> 24)};
      out.write(le, 4);
    }
  }
}

std::vector<FeatureFrame> read_features(const std::string& path) {
  const auto b = read_file(path);
  const std::size_t record = 4 * kMelBins;
  if (b.size() % record) throw FormatError(path + ": feature file is not a whole number of frames", b.size());
  std::vector<FeatureFrame> frames(b.size() / record);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    frames[k].values.resize(kMelBins);
    frames[k].timestamp_ms = static_cast<std::int64_t>(k) * kHopMs;
    for (int i = 0; i < kMelBins; ++i) {
      const std::size_t off = k * record + 4 * static_cast<std::size_t>(i);
      const std::uint32_t bits = u32_at(b, off);
      float v;
      std::memcpy(&v, &bits, 4);
      frames[k].values[i] = v;
    }
  }
  return frames;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).string();
  };
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.alignment.id = j.at("id").get<std::string>();
      e.alignment.is_keyword = j.at("is_keyword").get<bool>();
      e.alignment.num_frames = j.at("num_frames").get<int>();
      for (const auto& s : j.value("segments", nlohmann::json::array()))
        e.alignment.segments.push_back(
            {s.at("label").get<std::string>(), s.at("start_frame").get<int>(), s.at("end_frame").get<int>()});
      e.audio_path = resolve(j.value("audio_path", std::string()));
      e.feature_path = resolve(j.value("feature_path", std::string()));
      e.keyword_end_ms = j.value("keyword_end_ms", std::int64_t{-1});
      if (e.audio_path.empty() && e.feature_path.empty())
        throw DataError("entry '" + e.alignment.id + "' has neither audio_path nor feature_path");
      e.alignment.validate();
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& err) {
      throw DataError(where + err.what());
    } catch (const DataError& err) {
      throw DataError(where + err.what());
    }
  }
  return out;
}

}  // namespace kws
