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

#include <doctest.h>

#include <random>
#include <sstream>

#include "kws/evaluation.hpp"

using namespace kws;

namespace {

// Utterance of `ms` milliseconds with a score every 20 ms from `score(t)`.
template <typename F>
ScoredUtterance scored(std::string id, bool keyword, int ms, std::int64_t end_ms, F score) {
  ScoredUtterance u;
  u.id = std::move(id);
  u.is_keyword = keyword;
  u.duration_ms = ms;
  u.keyword_end_ms = keyword ? end_ms : -1;
  for (int t = 0; t < ms; t += 20) u.scores.push_back({t, score(t)});
  return u;
}

ScoredSet separator_set(int positives, int negatives) {
  ScoredSet s;
  for (int i = 0; i < positives; ++i)
    s.utterances.push_back(scored("p" + std::to_string(i), true, 3000, 1500,
                                  [](int t) { return t >= 1500 && t < 1700 ? 1.0 : 0.0; }));
  for (int i = 0; i < negatives; ++i)
    s.utterances.push_back(scored("n" + std::to_string(i), false, 60000, -1, [](int) { return 0.0; }));
  return s;
}

EvalOptions no_minimum() {
  EvalOptions o;
  o.min_negative_hours = 0.0;
  return o;
}

}  // namespace

TEST_CASE("default thresholds") {
  const auto t = default_thresholds(3);
  CHECK(t == std::vector<double>{0.25, 0.5, 0.75});
  const auto d = default_thresholds();
  CHECK(d.size() == 1001);
  CHECK(d.front() > 0.0);
  CHECK(d.back() < 1.0);
}

TEST_CASE("perfect separator") {
  const auto set = separator_set(5, 10);
  const auto roc = roc_curve(set, default_thresholds(99));
  for (const auto& p : roc) {
    CHECK(p.fr_rate == 0.0);
    CHECK(p.fa_per_hour == 0.0);
  }
  const auto op = fr_at_fa(set, 0.1, default_thresholds(99), no_minimum());
  CHECK(op.fr_rate == 0.0);
  CHECK(op.threshold == doctest::Approx(0.01));
}

TEST_CASE("a detector that never fires") {
  auto set = separator_set(5, 10);
  for (auto& u : set.utterances)
    for (auto& p : u.scores) p.score = 0.0;
  const auto op = fr_at_fa(set, 0.1, default_thresholds(), no_minimum());
  CHECK(op.fr_rate == 1.0);
  CHECK(op.fa_per_hour == 0.0);
}

TEST_CASE("operating point errors") {
  auto set = separator_set(5, 10);
  CHECK_THROWS_AS(fr_at_fa(set, 0.1, default_thresholds()), PreconditionViolation);
  for (auto& u : set.utterances)
    if (!u.is_keyword)
      for (auto& p : u.scores) p.score = 1.0;
  CHECK_THROWS_AS(fr_at_fa(set, 0.1, default_thresholds(), no_minimum()), NoOperatingPoint);
  const auto report = evaluate(set, "x", 0.1, default_thresholds(), no_minimum());
  CHECK_FALSE(report.operating_point.has_value());
  CHECK_THROWS_AS(evaluate(set, "x", 0.1, default_thresholds()), PreconditionViolation);

  ScoredSet only_neg;
  only_neg.utterances.push_back(set.utterances.back());
  CHECK_THROWS_AS(roc_curve(only_neg, default_thresholds()), InvalidArgument);
  const std::vector<double> unsorted{0.5, 0.2};
  CHECK_THROWS_AS(roc_curve(set, unsorted), InvalidArgument);
}

TEST_CASE("false accepts count suppressed events on negatives only") {
  ScoredSet s;
  s.utterances.push_back(scored("p", true, 3000, 1000, [](int) { return 0.9; }));
  // Peaks every 500 ms: with 1000 ms suppression every other peak is an event.
  s.utterances.push_back(scored("n", false, 3600000, -1, [](int t) { return t % 500 == 0 ? 0.8 : 0.1; }));
  const std::vector<double> thr{0.5, 0.95};
  const auto roc = roc_curve(s, thr);
  CHECK(roc[0].false_accepts == 3600);
  CHECK(roc[0].fa_per_hour == doctest::Approx(3600.0));
  CHECK(roc[0].fr_rate == 0.0);
  CHECK(roc[1].false_accepts == 0);
  CHECK(roc[1].fr_rate == 1.0);
  EvalOptions none;
  none.suppression_ms = 0;
  CHECK(roc_curve(s, thr, none)[0].false_accepts == 7200);
}

TEST_CASE("hit window") {
  ScoredSet s;
  s.utterances.push_back(scored("early", true, 4000, 2000, [](int t) { return t == 1880 ? 1.0 : 0.0; }));
  s.utterances.push_back(scored("edge_lo", true, 4000, 2000, [](int t) { return t == 1900 ? 1.0 : 0.0; }));
  s.utterances.push_back(scored("edge_hi", true, 4000, 2000, [](int t) { return t == 2740 ? 1.0 : 0.0; }));
  s.utterances.push_back(scored("late", true, 4000, 2000, [](int t) { return t == 2760 ? 1.0 : 0.0; }));
  s.utterances.push_back(scored("neg", false, 1000, -1, [](int) { return 0.0; }));
  const std::vector<double> thr{0.5};
  CHECK(roc_curve(s, thr)[0].misses == 2);
  const auto lat = latency_report(s, 0.5);
  CHECK(lat.positives == 4);
  CHECK(lat.hits == 2);
  CHECK(lat.first_in_window == 2);
  CHECK(lat.latencies_ms == std::vector<std::int64_t>{-100, 740});
}

TEST_CASE("latency uses the first event of a hit") {
  ScoredSet s;
  // Fires early, drops, and peaks again at keyword end.
  s.utterances.push_back(scored("a", true, 4000, 2000, [](int t) {
    return (t >= 1600 && t < 1700) || (t >= 2000 && t < 2100) ? 0.9 : 0.0;
  }));
  s.utterances.push_back(scored("b", true, 4000, 2000, [](int t) { return t >= 2040 && t < 2100 ? 0.9 : 0.0; }));
  s.utterances.push_back(scored("neg", false, 1000, -1, [](int) { return 0.0; }));
  const auto lat = latency_report(s, 0.5);
  CHECK(lat.hits == 2);
  CHECK(lat.first_in_window == 1);
  CHECK(lat.in_window_fraction() == 0.5);
  CHECK(lat.latencies_ms == std::vector<std::int64_t>{-400, 40});
  CHECK(lat.median_latency_ms() == doctest::Approx(-180.0));
}

TEST_CASE("ROC is monotone and random scores sit on the chance diagonal") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScoredSet s;
  const int n = 2000;
  // 800 ms utterances whose hit window covers every score point.
  for (int i = 0; i < n; ++i) {
    s.utterances.push_back(scored("p" + std::to_string(i), true, 800, 100, [&](int) { return u(rng); }));
    s.utterances.push_back(scored("n" + std::to_string(i), false, 800, -1, [&](int) { return u(rng); }));
  }
  const auto thr = default_thresholds(199);
  const auto roc = roc_curve(s, thr);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].fr_rate >= roc[i - 1].fr_rate);
    CHECK(roc[i].fa_per_hour <= roc[i - 1].fa_per_hour);
  }
  for (const auto& p : roc) {
    const double hit_rate = 1.0 - p.fr_rate;
    const double fire_rate = static_cast<double>(p.false_accepts) / n;
    CHECK(std::abs(hit_rate - fire_rate) < 0.05);
  }
}

TEST_CASE("interpolation between ROC points") {
  std::vector<RocPoint> roc{{0.1, 4.0, 0.0, 0, 0}, {0.5, 2.0, 0.2, 0, 0}, {0.9, 0.0, 0.6, 0, 0}};
  CHECK(interpolate_fr(roc, 3.0) == doctest::Approx(0.1));
  CHECK(interpolate_fr(roc, 1.0) == doctest::Approx(0.4));
  CHECK(interpolate_fr(roc, 2.0) == doctest::Approx(0.2));
  CHECK(interpolate_fr(roc, 10.0) == doctest::Approx(0.0));
  roc.back().fa_per_hour = 0.5;
  CHECK_THROWS_AS(interpolate_fr(roc, 0.1), NoOperatingPoint);
  CHECK(fr_at_fa(roc, 2.0).threshold == 0.5);
}

TEST_CASE("cached scores reproduce live evaluation") {
  const auto spec = KeywordSpec::ok_google();
  auto data = gen_synthetic_dataset(4, 3, 2, spec);
  for (auto& s : gen_negative_streams(4, 0.005, spec, 0.02, 9000)) data.utterances.push_back(s);
  const auto set = make_eval_set(data.utterances, spec);
  CHECK(set.num_positives() == 3);

  auto model = std::make_shared<const Model<float>>(Model<float>::initialized(builtin_config("E2E_40K"), 3));
  KeywordDetector det(model);
  const auto live = score_eval_set(set, det, 1);
  const auto threaded = score_eval_set(set, det, 3);
  REQUIRE(live.utterances.size() == data.utterances.size());
  CHECK(std::is_sorted(live.utterances.begin(), live.utterances.end(),
                       [](const auto& a, const auto& b) { return a.id < b.id; }));
  for (std::size_t i = 0; i < live.utterances.size(); ++i) {
    CHECK(live.utterances[i].id == threaded.utterances[i].id);
    CHECK(live.utterances[i].scores.size() == threaded.utterances[i].scores.size());
    for (std::size_t k = 0; k < live.utterances[i].scores.size(); ++k)
      CHECK(live.utterances[i].scores[k].score == threaded.utterances[i].scores[k].score);
  }
  CHECK(live.negative_hours() == doctest::Approx(set.negative_hours()));

  std::stringstream cache;
  write_score_cache(cache, live);
  const auto back = read_score_cache(cache);
  const auto thr = default_thresholds(101);
  const auto a = evaluate(live, "m", 100.0, thr, no_minimum());
  const auto b = evaluate(back, "m", 100.0, thr, no_minimum());
  CHECK(report_json({a}) == report_json({b}));
  CHECK(roc_csv({a}) == roc_csv({b}));
  CHECK(roc_csv({a}).rfind("name,threshold,fa_per_hour,fr_rate\n", 0) == 0);

  std::stringstream broken("{\"id\": 3}\n");
  CHECK_THROWS_AS(read_score_cache(broken), DataError);
}
