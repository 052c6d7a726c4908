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

#include "kws/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kws {

void AlignedUtterance::validate() const {
  if (num_frames < 0) throw DataError(id + ": negative frame count");
  int prev_end = -1;
  for (const auto& s : segments) {
    if (s.start_frame > s.end_frame)
      throw DataError(id + ": segment '" + s.label + "' ends before it starts");
    if (s.start_frame <= prev_end)
      throw DataError(id + ": segments overlap or are out of order at '" + s.label + "'");
    if (s.start_frame < 0 || s.end_frame >= num_frames)
      throw DataError(id + ": segment '" + s.label + "' outside the utterance");
    prev_end = s.end_frame;
  }
}

const std::string& KeywordSpec::last_component() const {
  if (components.empty()) throw InvalidArgument("keyword spec has no components");
  return components.back();
}

int KeywordSpec::class_of(const std::string& label) const {
  const auto it = class_ids.find(label);
  return it == class_ids.end() ? 0 : it->second;
}

std::vector<int> KeywordSpec::keyword_class_sequence() const {
  const int silence = class_of("<silence>");
  std::vector<int> out;
  for (const auto& c : components) {
    const int id = class_of(c);
    if (id == 0 || (c == "<silence>" && silence != 0)) continue;
    out.push_back(id);
  }
  return out;
}

KeywordSpec KeywordSpec::ok_google() {
  KeywordSpec spec;
  spec.components = {"ou", "k", "eI", "<silence>", "g", "u", "g", "@", "l"};
  spec.class_ids = {{"<silence>", 1}, {"ou", 2}, {"k", 3}, {"h", 3}, {"eI", 4},
                    {"g", 5},         {"u", 6},  {"@", 7}, {"l", 8}};
  spec.num_classes = 9;
  return spec;
}

std::vector<int> generate_e2e_labels(const AlignedUtterance& utt, const KeywordSpec& spec,
                                     int extra_positives) {
  utt.validate();
  std::vector<int> labels(utt.num_frames, 0);
  if (!utt.is_keyword) return labels;
  const std::string& last = spec.last_component();
  const auto it = std::find_if(utt.segments.rbegin(), utt.segments.rend(),
                               [&](const Segment& s) { return s.label == last; });
  if (it == utt.segments.rend())
    throw DataError(utt.id + ": keyword utterance has no '" + last + "' segment");
  const int span = std::max(std::max(extra_positives, 0), it->length());
  const int end = std::min(utt.num_frames, it->start_frame + span);
  std::fill(labels.begin() + it->start_frame, labels.begin() + end, 1);
  return labels;
}

std::int64_t keyword_end_ms(const AlignedUtterance& utt, const KeywordSpec& spec) {
  if (!utt.is_keyword) return -1;
  for (auto it = utt.segments.rbegin(); it != utt.segments.rend(); ++it)
    if (it->label == spec.last_component()) return static_cast<std::int64_t>(it->end_frame) * kHopMs;
  return -1;
}

std::vector<int> generate_encoder_labels(const AlignedUtterance& utt, const KeywordSpec& spec) {
  utt.validate();
  std::vector<int> labels(utt.num_frames, 0);
  for (const auto& s : utt.segments)
    std::fill(labels.begin() + s.start_frame, labels.begin() + s.end_frame + 1, spec.class_of(s.label));
  return labels;
}

std::vector<int> align_labels_to_stride(std::span<const int> frame_labels, const ContextConfig& ctx) {
  std::vector<int> out;
  for (auto t : inference_centers(static_cast<std::int64_t>(frame_labels.size()), ctx))
    out.push_back(frame_labels[t]);
  return out;
}

double positive_fraction(const std::vector<AlignedUtterance>& utts, const KeywordSpec& spec,
                         const ContextConfig& ctx, int extra_positives) {
  std::size_t positives = 0, total = 0;
  for (const auto& u : utts) {
    const auto labels = align_labels_to_stride(generate_e2e_labels(u, spec, extra_positives), ctx);
    positives += static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    total += labels.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(total);
}

int choose_extra_positives(const std::vector<AlignedUtterance>& utts, const KeywordSpec& spec,
                           const ContextConfig& ctx, double target_fraction, int max_extra) {
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int extra = 0; extra <= max_extra; ++extra) {
    const double gap = std::abs(positive_fraction(utts, spec, ctx, extra) - target_fraction);
    if (gap < best_gap) {
      best_gap = gap;
      best = extra;
    }
  }
  return best;
}

LabeledSequence make_labeled_sequence(const std::string& id, const std::vector<FeatureFrame>& frames,
                                      std::span<const int> frame_labels, const ContextConfig& ctx) {
  if (frame_labels.size() != frames.size())
    throw DataError(id + ": " + std::to_string(frame_labels.size()) + " labels for " +
                    std::to_string(frames.size()) + " frames");
  LabeledSequence seq;
  seq.id = id;
  seq.inputs = stack_matrix(frames, ctx);
  seq.center_frames = inference_centers(static_cast<std::int64_t>(frames.size()), ctx);
  seq.labels = align_labels_to_stride(frame_labels, ctx);
  return seq;
}

}  // namespace kws
