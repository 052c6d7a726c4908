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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kws/scoring.hpp"
#include "kws/synth.hpp"

namespace kws {

struct EvalUtterance {
  std::string id;
  bool is_keyword = false;
  double duration_ms = 0.0;
  std::int64_t keyword_end_ms = -1;  // positives only
  std::function<std::vector<float>()> load_audio;
  // Optional; when set it is used instead of running the front-end on audio.
  std::function<std::vector<FeatureFrame>()> load_frames;
};

struct EvalSet {
  std::vector<EvalUtterance> utterances;

  std::size_t num_positives() const;
  double negative_hours() const;
};

EvalSet make_eval_set(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec);

/// Score stream of one utterance under one detector.
struct ScoredUtterance {
  std::string id;
  bool is_keyword = false;
  double duration_ms = 0.0;
  std::int64_t keyword_end_ms = -1;
  std::vector<ScorePoint> scores;
};

struct ScoredSet {
  std::vector<ScoredUtterance> utterances;  // sorted by id

  std::size_t num_positives() const;
  double negative_hours() const;
};

/// Scores every utterance with every detector, rendering each audio once.
/// Work is spread over `jobs` threads; the result does not depend on jobs.
std::vector<ScoredSet> score_eval_set(const EvalSet& set, const std::vector<const KeywordDetector*>& detectors,
                                      int jobs = 1);
ScoredSet score_eval_set(const EvalSet& set, const KeywordDetector& detector, int jobs = 1);

struct EvalOptions {
  double suppression_ms = 1000.0;
  // A positive is detected when its score reaches the threshold anywhere in
  // [keyword_end - hit_before_ms, keyword_end + hit_after_ms].
  std::int64_t hit_before_ms = 100;
  std::int64_t hit_after_ms = 750;
  // fr_at_fa refuses to resolve a target on less negative audio than this.
  double min_negative_hours = 10.0;
};

struct RocPoint {
  double threshold = 0.0;
  double fa_per_hour = 0.0;
  double fr_rate = 0.0;
  std::int64_t false_accepts = 0;
  std::int64_t misses = 0;
};

/// (i + 1) / (n + 1) for i = 0 .. n - 1: evenly spaced in (0, 1).
std::vector<double> default_thresholds(int n = 1001);

/// FR = undetected positives / positives; FA/h = events on negatives (with
/// suppression) / negative hours. Thresholds must ascend.
std::vector<RocPoint> roc_curve(const ScoredSet& set, std::span<const double> thresholds,
                                const EvalOptions& options = {});

struct OperatingPoint {
  double threshold = 0.0;
  double fr_rate = 0.0;
  double fa_per_hour = 0.0;
};

/// Smallest threshold whose FA/h is at or below the target. Throws
/// PreconditionViolation on too little negative audio and NoOperatingPoint
/// when no threshold reaches the target.
OperatingPoint fr_at_fa(const ScoredSet& set, double target_fa_per_hour, std::span<const double> thresholds,
                        const EvalOptions& options = {});
OperatingPoint fr_at_fa(const std::vector<RocPoint>& roc, double target_fa_per_hour);

/// FR at an arbitrary FA/h by linear interpolation between ROC points.
double interpolate_fr(const std::vector<RocPoint>& roc, double fa_per_hour);

struct LatencyReport {
  int positives = 0;
  int hits = 0;            // detected positives
  int first_in_window = 0;  // hits whose first event lies in the hit window
  std::vector<std::int64_t> latencies_ms;  // first event minus keyword end, per hit
  double in_window_fraction() const { return hits ? static_cast<double>(first_in_window) / hits : 0.0; }
  double median_latency_ms() const;
};

LatencyReport latency_report(const ScoredSet& set, double threshold, const EvalOptions& options = {});

struct EvalReport {
  std::string name;
  std::size_t positives = 0;
  double negative_hours = 0.0;
  EvalOptions options;
  std::vector<RocPoint> roc;
  std::optional<OperatingPoint> operating_point;
  double target_fa_per_hour = 0.0;
  std::optional<LatencyReport> latency;
};

EvalReport evaluate(const ScoredSet& set, std::string name, double target_fa_per_hour,
                    std::span<const double> thresholds, const EvalOptions& options = {});

std::string report_json(const std::vector<EvalReport>& reports);
/// name,threshold,fa_per_hour,fr_rate rows for plotting.
std::string roc_csv(const std::vector<EvalReport>& reports);

/// JSON lines: id, is_keyword, duration_ms, keyword_end_ms, scores [[ms, score], ...].
void write_score_cache(std::ostream& out, const ScoredSet& set);
ScoredSet read_score_cache(std::istream& in);

}  // namespace kws
