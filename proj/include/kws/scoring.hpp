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
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kws/frontend.hpp"
#include "kws/model.hpp"

namespace kws {

struct ScorePoint {
  std::int64_t timestamp_ms = 0;
  double score = 0.0;
};

struct DetectionEvent {
  std::int64_t trigger_timestamp_ms = 0;
  double peak_score = 0.0;
  double threshold = 0.0;
};

/// Keyword likelihood of a two-class end-to-end output: the positive class.
double e2e_score(const Eigen::Ref<const VectorF>& softmax_output);

/// Max over t_1 <= ... <= t_K of prod_k window[t_k][classes[k]], by dynamic
/// programming over (frame, component).
double max_ordered_product(const std::deque<VectorD>& window, std::span<const int> classes);

/// Sliding-window posterior smoother and ordered-product scorer for
/// subword-posterior (baseline) models.
class PosteriorSmoother {
 public:
  PosteriorSmoother(int num_classes, std::vector<int> keyword_classes, int window = 100);

  /// Pushes one posterior vector and returns the K-th root of the largest
  /// in-order product of smoothed posteriors over the window.
  double push(std::span<const double> posteriors);
  double push(const Eigen::Ref<const VectorF>& posteriors);
  void reset();

  int window() const { return window_; }
  const std::deque<VectorD>& raw() const { return raw_; }
  const std::deque<VectorD>& smoothed() const { return smoothed_; }

 private:
  int num_classes_;
  std::vector<int> keyword_classes_;
  int window_;
  std::deque<VectorD> raw_;
  std::deque<VectorD> smoothed_;
  VectorD running_sum_;
};

double baseline_score(PosteriorSmoother& state, std::span<const double> posteriors);

/// Fires on the first score >= threshold, then stays silent for
/// suppression_ms after each event.
class EventDetector {
 public:
  EventDetector(double threshold, double suppression_ms = 1000.0);
  std::optional<DetectionEvent> push(const ScorePoint& point);
  void reset() { last_event_ms_.reset(); }
  double threshold() const { return threshold_; }

 private:
  double threshold_;
  double suppression_ms_;
  std::optional<std::int64_t> last_event_ms_;
};

std::vector<DetectionEvent> detect_events(std::span<const ScorePoint> scores, double threshold,
                                          double suppression_ms = 1000.0);

enum class ScoringMode { kEndToEnd, kSmoothedPosterior };

struct DetectorOptions {
  // Unset: two-class models score end to end, others by smoothed posteriors.
  std::optional<ScoringMode> mode;
  std::vector<int> keyword_classes;  // smoothed-posterior mode only
  int smoothing_window = 100;
  MelConfig mel;
};

/// Front-end, context windowing, network memory and scorer for one stream.
/// The model is shared and never modified; a detector instance is not
/// thread-safe.
class KeywordDetector {
 public:
  KeywordDetector(std::shared_ptr<const Model<float>> model, DetectorOptions options = {});

  /// Streaming path: any chunking of the same audio gives the same scores.
  std::vector<ScorePoint> push_audio(std::span<const float> pcm);
  void reset();

  /// Whole-utterance path from a fresh state (sequence forward).
  std::vector<ScorePoint> score_utterance(std::span<const float> pcm) const;
  std::vector<ScorePoint> score_frames(const std::vector<FeatureFrame>& frames) const;

  ScoringMode mode() const { return mode_; }
  const Model<float>& model() const { return *model_; }

 private:
  std::shared_ptr<const Model<float>> model_;
  DetectorOptions options_;
  ScoringMode mode_;
  FrameStreamer frames_;
  ContextWindower windower_;
  NetworkState<float> state_;
  PosteriorSmoother smoother_;
};

struct StreamResult {
  std::vector<ScorePoint> scores;
  std::vector<DetectionEvent> events;
};

/// Streams `pcm` through a fresh detector in chunks of chunk_samples.
StreamResult detect_stream(KeywordDetector& detector, std::span<const float> pcm, double threshold,
                           double suppression_ms = 1000.0, std::size_t chunk_samples = 1600);

}  // namespace kws
