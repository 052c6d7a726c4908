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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/frontend.hpp"

namespace kws {

/// Frames [start_frame, end_frame], both inclusive.
struct Segment {
  std::string label;
  int start_frame = 0;
  int end_frame = 0;
  int length() const { return end_frame - start_frame + 1; }
  bool operator==(const Segment&) const = default;
};

struct AlignedUtterance {
  std::string id;
  int num_frames = 0;
  std::vector<Segment> segments;
  bool is_keyword = false;

  /// Segments ordered, non-overlapping and inside [0, num_frames).
  void validate() const;
};

/// Ordered keyword components and the subword class map used for encoder
/// targets. Labels missing from the map are background (class 0).
struct KeywordSpec {
  std::vector<std::string> components;
  std::map<std::string, int> class_ids;
  int num_classes = 1;

  const std::string& last_component() const;
  int class_of(const std::string& label) const;
  /// Class ids of the components in keyword order, without background or
  /// the in-keyword silence. Used by the smoothed-posterior scorer.
  std::vector<int> keyword_class_sequence() const;

  /// "ou k eI <silence> g u g @ l" with 9 classes; "k" and "h" share one.
  static KeywordSpec ok_google();
};

struct LabeledSequence {
  std::string id;
  MatrixF inputs;             // input_dim x L
  std::vector<int> labels;    // L
  std::vector<std::int64_t> center_frames;
};

/// Binary frame targets: 1 on [start, start + max(extra, len)) of the last
/// occurrence of the final component, clipped to the utterance; 0 elsewhere.
std::vector<int> generate_e2e_labels(const AlignedUtterance& utt, const KeywordSpec& spec,
                                     int extra_positives = 0);

/// 10 ms x the last frame of the final component's last occurrence; -1 for
/// non-keyword utterances or when the component is missing.
std::int64_t keyword_end_ms(const AlignedUtterance& utt, const KeywordSpec& spec);

/// Per-frame subword class ids; frames outside every segment are background.
std::vector<int> generate_encoder_labels(const AlignedUtterance& utt, const KeywordSpec& spec);

/// Samples frame labels at the strided inference centers of `ctx`.
std::vector<int> align_labels_to_stride(std::span<const int> frame_labels, const ContextConfig& ctx);

/// Picks extra_positives in [0, max_extra] bringing the strided positive
/// fraction over the dataset closest to `target_fraction` (smallest on ties).
int choose_extra_positives(const std::vector<AlignedUtterance>& utts, const KeywordSpec& spec,
                           const ContextConfig& ctx, double target_fraction = 0.03,
                           int max_extra = 100);

/// Fraction of strided labels that are positive for a given extra amount.
double positive_fraction(const std::vector<AlignedUtterance>& utts, const KeywordSpec& spec,
                         const ContextConfig& ctx, int extra_positives);

/// Stacks features and samples frame labels at the same inference centers.
LabeledSequence make_labeled_sequence(const std::string& id, const std::vector<FeatureFrame>& frames,
                                      std::span<const int> frame_labels, const ContextConfig& ctx);

}  // namespace kws
