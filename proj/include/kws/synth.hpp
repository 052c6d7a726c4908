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

#include <cstdint>
#include <string>
#include <vector>

#include "kws/labeling.hpp"

namespace kws {

/// Stable spectral pattern of one synthetic component: two tones.
struct ToneSpec {
  double f1 = 0.0;
  double f2 = 0.0;
};

/// Tone pair for a component label; "<silence>" and unknown labels are silent
/// (f1 = f2 = 0). Distractor labels are "aa", "s", "m", "iy".
ToneSpec component_tones(const std::string& label);
const std::vector<std::string>& distractor_labels();

struct SynthConfig {
  double noise_level = 0.02;       // Gaussian noise std, scaled per utterance by U(0.5, 1.5)
  double distractor_prob = 0.3;    // chance of a distractor word before a keyword
  int min_component_ms = 80;
  int max_component_ms = 200;
};

struct SynthSegment {
  std::string label;
  std::int64_t start_sample = 0;  // [start_sample, end_sample)
  std::int64_t end_sample = 0;
  double f1 = 0.0;
  double f2 = 0.0;
  double amplitude = 0.0;
};

/// Descriptor of one synthetic utterance. Audio is rendered on demand, so
/// hours of negatives never need to be held in memory at once.
struct SynthUtterance {
  std::string id;
  bool is_keyword = false;
  std::int64_t num_samples = 0;
  std::vector<SynthSegment> segments;
  std::uint64_t noise_seed = 0;
  double noise_std = 0.0;

  std::vector<float> render() const;
  /// Frame k belongs to a segment when its window center 160k + 240 lies in
  /// [start_sample, end_sample).
  AlignedUtterance alignment() const;
  int num_frames() const;
  double duration_ms() const { return 1000.0 * static_cast<double>(num_samples) / kSampleRate; }
  /// End of the final keyword component in ms (frame-based), -1 for negatives.
  std::int64_t keyword_end_ms(const KeywordSpec& spec) const;
};

SynthUtterance synth_positive(const KeywordSpec& spec, std::uint64_t seed, std::uint64_t index,
                              const SynthConfig& config = {});
/// Noise with 1-3 non-keyword words. Any word containing the final keyword
/// component follows only distractor words or nothing.
SynthUtterance synth_negative(const KeywordSpec& spec, std::uint64_t seed, std::uint64_t index,
                              const SynthConfig& config = {});
/// A long negative stream of duration_ms built with the same word rules.
SynthUtterance synth_negative_stream(const KeywordSpec& spec, std::uint64_t seed, std::uint64_t index,
                                     std::int64_t duration_ms, const SynthConfig& config = {});

struct SynthDataset {
  std::vector<SynthUtterance> utterances;  // positives first, then negatives
};

/// Deterministic per seed. Throws InvalidArgument unless both counts are > 0.
SynthDataset gen_synthetic_dataset(std::uint64_t seed, int n_pos, int n_neg, const KeywordSpec& spec,
                                   double noise_level = 0.02);

/// ceil(hours * 60) one-minute negative streams.
std::vector<SynthUtterance> gen_negative_streams(std::uint64_t seed, double hours, const KeywordSpec& spec,
                                                 double noise_level = 0.02,
                                                 std::int64_t piece_ms = 60000);

/// One JSON object per line: id, is_keyword, num_samples, num_frames,
/// keyword_end_ms and frame segments. `audio_dir`, when set, adds
/// audio_path = audio_dir/<id>.wav.
std::string manifest_jsonl(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec,
                           const std::string& audio_dir = {});

}  // namespace kws
