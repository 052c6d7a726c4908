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

#include "kws/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace kws {
namespace {

constexpr double kMsPerHour = 3600.0 * 1000.0;

template <typename U>
double negative_hours_of(const std::vector<U>& utts) {
  double ms = 0.0;
  for (const auto& u : utts)
    if (!u.is_keyword) ms += u.duration_ms;
  return ms / kMsPerHour;
}

template <typename U>
std::size_t positives_of(const std::vector<U>& utts) {
  return static_cast<std::size_t>(
      std::count_if(utts.begin(), utts.end(), [](const U& u) { return u.is_keyword; }));
}

double window_max(const ScoredUtterance& u, const EvalOptions& o) {
  double best = -std::numeric_limits<double>::infinity();
  const std::int64_t lo = u.keyword_end_ms - o.hit_before_ms;
  const std::int64_t hi = u.keyword_end_ms + o.hit_after_ms;
  for (const auto& p : u.scores)
    if (p.timestamp_ms >= lo && p.timestamp_ms <= hi) best = std::max(best, p.score);
  return best;
}

void check_thresholds(std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidArgument("no thresholds given");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw InvalidArgument("thresholds must be sorted ascending");
}

}  // namespace

std::size_t EvalSet::num_positives() const { return positives_of(utterances); }
double EvalSet::negative_hours() const { return negative_hours_of(utterances); }
std::size_t ScoredSet::num_positives() const { return positives_of(utterances); }
double ScoredSet::negative_hours() const { return negative_hours_of(utterances); }

EvalSet make_eval_set(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec) {
  EvalSet set;
  set.utterances.reserve(utts.size());
  for (const auto& u : utts) {
    EvalUtterance e;
    e.id = u.id;
    e.is_keyword = u.is_keyword;
    e.duration_ms = u.duration_ms();
    e.keyword_end_ms = u.keyword_end_ms(spec);
    e.load_audio = [u] { return u.render(); };
    set.utterances.push_back(std::move(e));
  }
  return set;
}

std::vector<ScoredSet> score_eval_set(const EvalSet& set, const std::vector<const KeywordDetector*>& detectors,
                                      int jobs) {
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
  if (detectors.empty()) throw InvalidArgument("no detectors to evaluate");
  const std::size_t n = set.utterances.size();
  std::vector<ScoredSet> out(detectors.size());
  for (auto& s : out) s.utterances.resize(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const EvalUtterance& u = set.utterances[i];
        const std::vector<FeatureFrame> frames = u.load_frames ? u.load_frames() : stream_frames(u.load_audio());
        for (std::size_t d = 0; d < detectors.size(); ++d) {
          ScoredUtterance& s = out[d].utterances[i];
          s.id = u.id;
          s.is_keyword = u.is_keyword;
          s.duration_ms = u.duration_ms;
          s.keyword_end_ms = u.keyword_end_ms;
          s.scores = detectors[d]->score_frames(frames);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& s : out)
    std::stable_sort(s.utterances.begin(), s.utterances.end(),
                     [](const ScoredUtterance& a, const ScoredUtterance& b) { return a.id < b.id; });
  return out;
}

ScoredSet score_eval_set(const EvalSet& set, const KeywordDetector& detector, int jobs) {
  return std::move(score_eval_set(set, std::vector<const KeywordDetector*>{&detector}, jobs).front());
}

std::vector<double> default_thresholds(int n) {
  if (n < 1) throw InvalidArgument("threshold count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  return out;
}

std::vector<RocPoint> roc_curve(const ScoredSet& set, std::span<const double> thresholds,
                                const EvalOptions& options) {
  check_thresholds(thresholds);
  const std::size_t positives = set.num_positives();
  if (positives == 0) throw InvalidArgument("evaluation set has no positive utterances");
  const double hours = set.negative_hours();
  if (!(hours > 0.0)) throw InvalidArgument("evaluation set has no negative audio");

  std::vector<double> maxima;
  maxima.reserve(positives);
  std::vector<std::int64_t> false_accepts(thresholds.size(), 0);
  std::vector<ScorePoint> candidates;
  for (const auto& u : set.utterances) {
    if (u.is_keyword) {
      maxima.push_back(window_max(u, options));
      continue;
    }
    candidates.clear();
    for (const auto& p : u.scores)
      if (p.score >= thresholds.front()) candidates.push_back(p);
    for (std::size_t j = 0; j < thresholds.size() && !candidates.empty(); ++j) {
      std::erase_if(candidates, [&](const ScorePoint& p) { return p.score < thresholds[j]; });
      // Greedy firing with suppression over the points at or above threshold.
      std::optional<std::int64_t> last;
      for (const auto& p : candidates) {
        if (last && static_cast<double>(p.timestamp_ms - *last) < options.suppression_ms) continue;
        last = p.timestamp_ms;
        ++false_accepts[j];
      }
    }
  }
  std::sort(maxima.begin(), maxima.end());

  std::vector<RocPoint> roc;
  roc.reserve(thresholds.size());
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    RocPoint p;
    p.threshold = thresholds[j];
    p.misses = std::lower_bound(maxima.begin(), maxima.end(), thresholds[j]) - maxima.begin();
    p.fr_rate = static_cast<double>(p.misses) / static_cast<double>(positives);
    p.false_accepts = false_accepts[j];
    p.fa_per_hour = static_cast<double>(p.false_accepts) / hours;
    roc.push_back(p);
  }
  return roc;
}

OperatingPoint fr_at_fa(const std::vector<RocPoint>& roc, double target_fa_per_hour) {
  if (target_fa_per_hour < 0.0) throw InvalidArgument("target FA/h must be >= 0");
  for (const auto& p : roc)
    if (p.fa_per_hour <= target_fa_per_hour) return {p.threshold, p.fr_rate, p.fa_per_hour};
  std::ostringstream msg;
  msg << "no threshold reaches " << target_fa_per_hour << " FA/h";
  if (!roc.empty()) msg << " (lowest is " << roc.back().fa_per_hour << " at threshold " << roc.back().threshold << ")";
  throw NoOperatingPoint(msg.str());
}

OperatingPoint fr_at_fa(const ScoredSet& set, double target_fa_per_hour, std::span<const double> thresholds,
                        const EvalOptions& options) {
  const double hours = set.negative_hours();
  if (hours < options.min_negative_hours) {
    std::ostringstream msg;
    msg << "only " << hours << " h of negative audio; at least " << options.min_negative_hours
        << " h are required to resolve an FA/h target";
    throw PreconditionViolation(msg.str());
  }
  return fr_at_fa(roc_curve(set, thresholds, options), target_fa_per_hour);
}

double interpolate_fr(const std::vector<RocPoint>& roc, double fa_per_hour) {
  for (std::size_t i = 0; i < roc.size(); ++i) {
    if (roc[i].fa_per_hour > fa_per_hour) continue;
    if (i == 0 || roc[i - 1].fa_per_hour == roc[i].fa_per_hour) return roc[i].fr_rate;
    const auto& a = roc[i - 1];
    const auto& b = roc[i];
    const double t = (a.fa_per_hour - fa_per_hour) / (a.fa_per_hour - b.fa_per_hour);
    return a.fr_rate + t * (b.fr_rate - a.fr_rate);
  }
  throw NoOperatingPoint("FA/h target lies below the ROC curve");
}

double LatencyReport::median_latency_ms() const {
  if (latencies_ms.empty()) return 0.0;
  std::vector<std::int64_t> v = latencies_ms;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? static_cast<double>(v[m]) : 0.5 * static_cast<double>(v[m - 1] + v[m]);
}

LatencyReport latency_report(const ScoredSet& set, double threshold, const EvalOptions& options) {
  LatencyReport r;
  for (const auto& u : set.utterances) {
    if (!u.is_keyword) continue;
    ++r.positives;
    if (window_max(u, options) < threshold) continue;
    ++r.hits;
    const auto first = std::find_if(u.scores.begin(), u.scores.end(),
                                    [&](const ScorePoint& p) { return p.score >= threshold; });
    const std::int64_t latency = first->timestamp_ms - u.keyword_end_ms;
    r.latencies_ms.push_back(latency);
    if (latency >= -options.hit_before_ms && latency <= options.hit_after_ms) ++r.first_in_window;
  }
  return r;
}

EvalReport evaluate(const ScoredSet& set, std::string name, double target_fa_per_hour,
                    std::span<const double> thresholds, const EvalOptions& options) {
  EvalReport r;
  r.name = std::move(name);
  r.positives = set.num_positives();
  r.negative_hours = set.negative_hours();
  r.options = options;
  r.target_fa_per_hour = target_fa_per_hour;
  r.roc = roc_curve(set, thresholds, options);
  if (r.negative_hours < options.min_negative_hours) {
    std::ostringstream msg;
    msg << "only " << r.negative_hours << " h of negative audio; at least " << options.min_negative_hours
        << " h are required to resolve an FA/h target";
    throw PreconditionViolation(msg.str());
  }
  try {
    r.operating_point = fr_at_fa(r.roc, target_fa_per_hour);
    r.latency = latency_report(set, r.operating_point->threshold, options);
  } catch (const NoOperatingPoint&) {
    r.operating_point.reset();
  }
  return r;
}

std::string report_json(const std::vector<EvalReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["name"] = r.name;
    j["positives"] = r.positives;
    j["negative_hours"] = r.negative_hours;
    j["suppression_ms"] = r.options.suppression_ms;
    j["hit_window_ms"] = {-r.options.hit_before_ms, r.options.hit_after_ms};
    j["target_fa_per_hour"] = r.target_fa_per_hour;
    nlohmann::json th = nlohmann::json::array(), fa = nlohmann::json::array(), fr = nlohmann::json::array();
    for (const auto& p : r.roc) {
      th.push_back(p.threshold);
      fa.push_back(p.fa_per_hour);
      fr.push_back(p.fr_rate);
    }
    j["roc"] = {{"threshold", th}, {"fa_per_hour", fa}, {"fr_rate", fr}};
    if (r.operating_point) {
      j["operating_point"] = {{"threshold", r.operating_point->threshold},
                              {"fr_rate", r.operating_point->fr_rate},
                              {"fa_per_hour", r.operating_point->fa_per_hour}};
    } else {
      j["operating_point"] = nullptr;
    }
    if (r.latency) {
      j["latency"] = {{"hits", r.latency->hits},
                      {"first_event_in_window", r.latency->first_in_window},
                      {"in_window_fraction", r.latency->in_window_fraction()},
                      {"median_ms", r.latency->median_latency_ms()}};
    }
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string roc_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out.precision(10);
  out << "name,threshold,fa_per_hour,fr_rate\n";
  for (const auto& r : reports)
    for (const auto& p : r.roc) out << r.name << ',' << p.threshold << ',' << p.fa_per_hour << ',' << p.fr_rate << '\n';
  return out.str();
}

void write_score_cache(std::ostream& out, const ScoredSet& set) {
  for (const auto& u : set.utterances) {
    nlohmann::json j;
    j["id"] = u.id;
    j["is_keyword"] = u.is_keyword;
    j["duration_ms"] = u.duration_ms;
    j["keyword_end_ms"] = u.keyword_end_ms;
    auto& scores = j["scores"] = nlohmann::json::array();
    for (const auto& p : u.scores) scores.push_back({p.timestamp_ms, p.score});
    out << j.dump() << '\n';
  }
}

ScoredSet read_score_cache(std::istream& in) {
  ScoredSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScoredUtterance u;
      u.id = j.at("id").get<std::string>();
      u.is_keyword = j.at("is_keyword").get<bool>();
      u.duration_ms = j.at("duration_ms").get<double>();
      u.keyword_end_ms = j.at("keyword_end_ms").get<std::int64_t>();
      for (const auto& p : j.at("scores")) u.scores.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>()});
      set.utterances.push_back(std::move(u));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("score cache line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::stable_sort(set.utterances.begin(), set.utterances.end(),
                   [](const ScoredUtterance& a, const ScoredUtterance& b) { return a.id < b.id; });
  return set;
}

}  // namespace kws
