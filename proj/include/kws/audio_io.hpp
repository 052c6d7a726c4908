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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kws/frontend.hpp"
#include "kws/labeling.hpp"

namespace kws {

/// Reads a PCM16 mono 16 kHz WAV file into samples scaled to [-1, 1).
/// Anything else is a DataError (FormatError for malformed headers).
std::vector<float> read_wav(const std::string& path);
std::vector<float> parse_wav(const std::vector<std::uint8_t>& bytes);
void write_wav(const std::string& path, const std::vector<float>& pcm);
std::vector<std::uint8_t> encode_wav(const std::vector<float>& pcm);

/// Raw little-endian PCM16 until end of stream.
std::vector<float> read_pcm16(std::istream& in);

enum class FeatureFormat { kBinary, kCsv };

/// Binary: 40 little-endian float32 per frame. CSV: timestamp_ms then 40 values.
void write_features(std::ostream& out, const std::vector<FeatureFrame>& frames, FeatureFormat format);
/// Inverse of the binary format; timestamps are reconstructed from the hop.
std::vector<FeatureFrame> read_features(const std::string& path);

/// One manifest line: the alignment plus where its audio or features live.
struct ManifestEntry {
  AlignedUtterance alignment;
  std::string audio_path;
  std::string feature_path;
  std::int64_t keyword_end_ms = -1;
};

/// JSON lines with id, is_keyword, num_frames, segments [{label,
/// start_frame, end_frame}] and audio_path or feature_path. Relative paths
/// resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace kws
