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

#include "kws/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace kws {

double e2e_score(const Eigen::Ref<const VectorF>& softmax_output) {
  if (softmax_output.size() != 2) throw InvalidArgument("end-to-end score needs a two-class output");
  return std::clamp(static_cast<double>(softmax_output[1]), 0.0, 1.0);
}

double max_ordered_product(const std::deque<VectorD>& window, std::span<const int> classes) {
  const std::size_t k = classes.size();
  if (k == 0) return 0.0;
  // best[j]: largest product of the first j components assigned so far.
  std::vector<double> best(k + 1, 0.0);
  best[0] = 1.0;
  for (const auto& frame : window)
    for (std::size_t j = 1; j <= k; ++j)
      best[j] = std::max(best[j], best[j - 1] * frame[classes[j - 1]]);
  return best[k];
}

PosteriorSmoother::PosteriorSmoother(int num_classes, std::vector<int> keyword_classes, int window)
    : num_classes_(num_classes),
      keyword_classes_(std::move(keyword_classes)),
      window_(window),
      running_sum_(VectorD::Zero(num_classes)) {
  if (window_ < 1) throw InvalidArgument("smoothing window must be >= 1");
  for (int c : keyword_classes_)
    if (c < 0 || c >= num_classes_) throw InvalidArgument("keyword class out of range");
}

double PosteriorSmoother::push(std::span<const double> posteriors) {
  if (static_cast<int>(posteriors.size()) != num_classes_)
    throw InvalidArgument("expected " + std::to_string(num_classes_) + " posteriors, got " +
                          std::to_string(posteriors.size()));
  VectorD p = Eigen::Map<const VectorD>(posteriors.data(), num_classes_);
  running_sum_ += p;
  raw_.push_back(std::move(p));
  if (static_cast<int>(raw_.size()) > window_) {
    running_sum_ -= raw_.front();
    raw_.pop_front();
  }
  // Partially filled windows average over what is available.
  VectorD mean = running_sum_ / static_cast<double>(raw_.size());
  mean = mean.cwiseMax(0.0);
  smoothed_.push_back(std::move(mean));
  if (static_cast<int>(smoothed_.size()) > window_) smoothed_.pop_front();

  const double product = max_ordered_product(smoothed_, keyword_classes_);
  if (keyword_classes_.empty()) return 0.0;
  return std::clamp(std::pow(product, 1.0 / static_cast<double>(keyword_classes_.size())), 0.0, 1.0);
}

double PosteriorSmoother::push(const Eigen::Ref<const VectorF>& posteriors) {
  const VectorD p = posteriors.cast<double>();
  return push(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

void PosteriorSmoother::reset() {
  raw_.clear();
  smoothed_.clear();
  running_sum_.setZero();
}

double baseline_score(PosteriorSmoother& state, std::span<const double> posteriors) {
  return state.push(posteriors);
}

EventDetector::EventDetector(double threshold, double suppression_ms)
    : threshold_(threshold), suppression_ms_(suppression_ms) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must be in (0, 1)");
  if (suppression_ms < 0.0) throw InvalidArgument("suppression must be >= 0");
}

std::optional<DetectionEvent> EventDetector::push(const ScorePoint& point) {
  if (point.score < threshold_) return std::nullopt;
  if (last_event_ms_ &&
      static_cast<double>(point.timestamp_ms - *last_event_ms_) < suppression_ms_)
    return std::nullopt;
  last_event_ms_ = point.timestamp_ms;
  return DetectionEvent{point.timestamp_ms, point.score, threshold_};
}

std::vector<DetectionEvent> detect_events(std::span<const ScorePoint> scores, double threshold,
                                          double suppression_ms) {
  EventDetector detector(threshold, suppression_ms);
  std::vector<DetectionEvent> out;
  for (const auto& p : scores)
    if (auto e = detector.push(p)) out.push_back(*e);
  return out;
}

namespace {

ScoringMode resolve_mode(const Model<float>& model, const DetectorOptions& options) {
  if (options.mode) return *options.mode;
  return model.num_classes() == 2 ? ScoringMode::kEndToEnd : ScoringMode::kSmoothedPosterior;
}

}  // namespace

KeywordDetector::KeywordDetector(std::shared_ptr<const Model<float>> model, DetectorOptions options)
    : model_(std::move(model)),
      options_(std::move(options)),
      mode_(resolve_mode(*model_, options_)),
      frames_(options_.mel),
      windower_(model_->config().context),
      state_(*model_),
      smoother_(model_->num_classes(), options_.keyword_classes, options_.smoothing_window) {
  if (mode_ == ScoringMode::kEndToEnd && model_->num_classes() != 2)
    throw InvalidArgument("end-to-end scoring needs a two-class model");
  if (mode_ == ScoringMode::kSmoothedPosterior && options_.keyword_classes.empty())
    throw InvalidArgument("smoothed-posterior scoring needs keyword classes");
}

std::vector<ScorePoint> KeywordDetector::push_audio(std::span<const float> pcm) {
  std::vector<ScorePoint> out;
  for (const auto& frame : frames_.push(pcm))
    for (const auto& input : windower_.push(frame)) {
      const auto step = network_forward_step(*model_, state_, input.values);
      const double score = mode_ == ScoringMode::kEndToEnd ? e2e_score(step.output())
                                                           : smoother_.push(step.output());
      out.push_back({input.center_timestamp_ms, score});
    }
  return out;
}

void KeywordDetector::reset() {
  frames_.reset();
  windower_.reset();
  state_.reset();
  smoother_.reset();
}

std::vector<ScorePoint> KeywordDetector::score_utterance(std::span<const float> pcm) const {
  return score_frames(stream_frames(pcm, options_.mel));
}

std::vector<ScorePoint> KeywordDetector::score_frames(const std::vector<FeatureFrame>& frames) const {
  const ContextConfig& ctx = model_->config().context;
  const auto centers = inference_centers(static_cast<std::int64_t>(frames.size()), ctx);
  std::vector<ScorePoint> out;
  if (centers.empty()) return out;
  const MatrixF y = network_forward(*model_, stack_matrix(frames, ctx));
  PosteriorSmoother smoother(model_->num_classes(), options_.keyword_classes, options_.smoothing_window);
  out.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const auto col = y.col(static_cast<Eigen::Index>(i));
    const double score = mode_ == ScoringMode::kEndToEnd ? e2e_score(col) : smoother.push(col);
    out.push_back({frames[centers[i]].timestamp_ms, score});
  }
  return out;
}

StreamResult detect_stream(KeywordDetector& detector, std::span<const float> pcm, double threshold,
                           double suppression_ms, std::size_t chunk_samples) {
  if (chunk_samples == 0) throw InvalidArgument("chunk size must be positive");
  detector.reset();
  EventDetector events(threshold, suppression_ms);
  StreamResult result;
  for (std::size_t pos = 0; pos < pcm.size(); pos += chunk_samples) {
    const auto chunk = pcm.subspan(pos, std::min(chunk_samples, pcm.size() - pos));
    for (const auto& p : detector.push_audio(chunk)) {
      result.scores.push_back(p);
      if (auto e = events.push(p)) result.events.push_back(*e);
    }
  }
  return result;
}

}  // namespace kws
