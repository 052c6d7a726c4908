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

#include "kws/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kws {
namespace {

constexpr int kRampSamples = kSampleRate / 100;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::int64_t ms_to_samples(double ms) { return static_cast<std::int64_t>(std::llround(ms * kSampleRate / 1000.0)); }

using Word = std::vector<std::string>;

bool is_distractor(const std::string& label) {
  const auto& d = distractor_labels();
  return std::find(d.begin(), d.end(), label) != d.end();
}

bool distractor_only(const Word& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), is_distractor);
}

// Keyword components that make a sound, in keyword order.
Word voiced_components(const KeywordSpec& spec) {
  Word out;
  for (const auto& c : spec.components)
    if (component_tones(c).f1 > 0.0) out.push_back(c);
  return out;
}

class Builder {
 public:
  Builder(std::mt19937_64& rng, const SynthConfig& config) : rng_(&rng), config_(&config) {}

  void gap(double lo_ms, double hi_ms) { pos_ += ms_to_samples(uniform(*rng_, lo_ms, hi_ms)); }

  void component(const std::string& label) {
    const auto len = ms_to_samples(uniform_int(*rng_, config_->min_component_ms, config_->max_component_ms));
    add(label, len);
  }

  void word(const Word& w) {
    for (const auto& label : w) component(label);
  }

  std::int64_t position() const { return pos_; }
  std::vector<SynthSegment>& segments() { return segments_; }

 private:
  void add(const std::string& label, std::int64_t len) {
    const ToneSpec tone = component_tones(label);
    SynthSegment seg;
    seg.label = label;
    seg.start_sample = pos_;
    seg.end_sample = pos_ + len;
    if (tone.f1 > 0.0) {
      seg.f1 = tone.f1 * uniform(*rng_, 0.97, 1.03);
      seg.f2 = tone.f2 * uniform(*rng_, 0.97, 1.03);
      seg.amplitude = uniform(*rng_, 0.1, 0.3);
    }
    segments_.push_back(seg);
    pos_ += len;
  }

  std::mt19937_64* rng_;
  const SynthConfig* config_;
  std::int64_t pos_ = 0;
  std::vector<SynthSegment> segments_;
};

Word distractor_word(std::mt19937_64& rng, int max_len) {
  const auto& d = distractor_labels();
  Word w(uniform_int(rng, 1, max_len));
  for (auto& label : w) label = d[uniform_int(rng, 0, static_cast<int>(d.size()) - 1)];
  return w;
}

// A non-keyword word. Confusable material (keyword slices, near misses) is
// frequent so that the keyword order, not the component inventory, decides.
Word negative_word(const KeywordSpec& spec, std::mt19937_64& rng, bool allow_final) {
  const Word voiced = voiced_components(spec);
  Word pool(voiced.begin(), voiced.end());
  pool.push_back("h");
  for (const auto& d : distractor_labels()) pool.push_back(d);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  Word w;
  const double r = uniform(rng, 0.0, 1.0);
  if (r < 0.35) {
    w.resize(uniform_int(rng, 1, 5));
    for (auto& label : w) label = pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)];
  } else if (r < 0.6) {
    const int n = static_cast<int>(voiced.size());
    const int len = uniform_int(rng, 2, std::min(5, n));
    const int start = uniform_int(rng, 0, n - len);
    w.assign(voiced.begin() + start, voiced.begin() + start + len);
  } else if (r < 0.8) {
    // Keyword tail with the final component swapped or dropped.
    const int n = static_cast<int>(voiced.size());
    const int len = uniform_int(rng, 3, std::min(5, n));
    w.assign(voiced.end() - len, voiced.end());
    if (uniform(rng, 0.0, 1.0) < 0.5)
      w.back() = distractor_labels()[uniform_int(rng, 0, static_cast<int>(distractor_labels().size()) - 1)];
    else
      w.pop_back();
  } else {
    w = distractor_word(rng, 3);
  }
  if (!allow_final) {
    for (auto& label : w)
      if (label == spec.last_component())
        label = distractor_labels()[uniform_int(rng, 0, static_cast<int>(distractor_labels().size()) - 1)];
  }
  return w;
}

SynthUtterance finish(std::string id, bool is_keyword, std::int64_t num_samples,
                      std::vector<SynthSegment> segments, std::mt19937_64& rng, const SynthConfig& config) {
  SynthUtterance u;
  u.id = std::move(id);
  u.is_keyword = is_keyword;
  u.num_samples = num_samples;
  u.segments = std::move(segments);
  u.noise_std = config.noise_level * uniform(rng, 0.5, 1.5);
  u.noise_seed = rng();
  return u;
}

std::string make_id(const char* prefix, std::uint64_t index) {
  std::ostringstream out;
  out << prefix << '_';
  out.width(6);
  out.fill('0');
  out << index;
  return out.str();
}

void check_config(const SynthConfig& c) {
  if (c.noise_level < 0.0) throw InvalidArgument("noise_level must be >= 0");
  if (c.min_component_ms < 30 || c.max_component_ms < c.min_component_ms)
    throw InvalidArgument("component duration range is invalid");
}

}  // namespace

ToneSpec component_tones(const std::string& label) {
  static const std::map<std::string, ToneSpec> tones = {
      {"ou", {400, 900}},   {"k", {2500, 3600}},  {"eI", {550, 2000}}, {"g", {300, 2800}},
      {"u", {350, 1200}},   {"@", {600, 1600}},   {"l", {700, 3200}},  {"h", {1800, 4200}},
      {"aa", {850, 1350}},  {"s", {4800, 6200}},  {"m", {250, 1900}},  {"iy", {280, 2400}},
  };
  const auto it = tones.find(label);
  return it == tones.end() ? ToneSpec{} : it->second;
}

const std::vector<std::string>& distractor_labels() {
  static const std::vector<std::string> labels = {"aa", "s", "m", "iy"};
  return labels;
}

int SynthUtterance::num_frames() const {
  if (num_samples < kWindowSamples) return 0;
  return static_cast<int>((num_samples - kWindowSamples) / kHopSamples + 1);
}

std::vector<float> SynthUtterance::render() const {
  std::vector<double> pcm(static_cast<std::size_t>(num_samples), 0.0);
  if (noise_std > 0.0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (auto& s : pcm) s = noise(rng);
  }
  for (const auto& seg : segments) {
    if (seg.amplitude <= 0.0) continue;
    const double w1 = 2.0 * std::numbers::pi * seg.f1 / kSampleRate;
    const double w2 = 2.0 * std::numbers::pi * seg.f2 / kSampleRate;
    const std::int64_t end = std::min(seg.end_sample, num_samples);
    for (std::int64_t i = seg.start_sample; i < end; ++i) {
      const double k = static_cast<double>(i - seg.start_sample);
      const double ramp = std::min({1.0, (k + 1.0) / kRampSamples,
                                    static_cast<double>(seg.end_sample - i) / kRampSamples});
      pcm[i] += 0.5 * seg.amplitude * ramp * (std::sin(w1 * k) + std::sin(w2 * k));
    }
  }
  return std::vector<float>(pcm.begin(), pcm.end());
}

AlignedUtterance SynthUtterance::alignment() const {
  AlignedUtterance a;
  a.id = id;
  a.num_frames = num_frames();
  a.is_keyword = is_keyword;
  const std::int64_t half = kWindowSamples / 2;
  for (const auto& seg : segments) {
    // First k with 160k + 240 >= start, last k with 160k + 240 < end.
    const std::int64_t first =
        std::max<std::int64_t>(0, (seg.start_sample - half + kHopSamples - 1) / kHopSamples);
    const std::int64_t last_center = seg.end_sample - 1 - half;
    if (last_center < 0) continue;
    const std::int64_t last = std::min<std::int64_t>(a.num_frames - 1, last_center / kHopSamples);
    if (first > last) continue;
    a.segments.push_back({seg.label, static_cast<int>(first), static_cast<int>(last)});
  }
  return a;
}

std::int64_t SynthUtterance::keyword_end_ms(const KeywordSpec& spec) const {
  return kws::keyword_end_ms(alignment(), spec);
}

SynthUtterance synth_positive(const KeywordSpec& spec, std::uint64_t seed, std::uint64_t index,
                              const SynthConfig& config) {
  check_config(config);
  auto rng = make_rng(seed, 1, index);
  Builder b(rng, config);
  b.gap(200, 600);
  if (uniform(rng, 0.0, 1.0) < config.distractor_prob) {
    b.word(distractor_word(rng, 2));
    b.gap(100, 300);
  }
  b.word(spec.components);
  b.gap(400, 800);
  const auto n = b.position();
  return finish(make_id("pos", index), true, n, std::move(b.segments()), rng, config);
}

SynthUtterance synth_negative(const KeywordSpec& spec, std::uint64_t seed, std::uint64_t index,
                              const SynthConfig& config) {
  check_config(config);
  auto rng = make_rng(seed, 2, index);
  Builder b(rng, config);
  b.gap(200, 600);
  const int words = uniform_int(rng, 1, 3);
  bool allow_final = true;
  for (int i = 0; i < words; ++i) {
    if (i > 0) b.gap(100, 600);
    const Word w = negative_word(spec, rng, allow_final);
    b.word(w);
    allow_final = distractor_only(w);
  }
  b.gap(300, 700);
  const auto n = b.position();
  return finish(make_id("neg", index), false, n, std::move(b.segments()), rng, config);
}

SynthUtterance synth_negative_stream(const KeywordSpec& spec, std::uint64_t seed, std::uint64_t index,
                                     std::int64_t duration_ms, const SynthConfig& config) {
  check_config(config);
  if (duration_ms < 1000) throw InvalidArgument("negative streams must last at least 1 s");
  auto rng = make_rng(seed, 3, index);
  const std::int64_t total = ms_to_samples(static_cast<double>(duration_ms));
  const std::int64_t tail = ms_to_samples(300);
  Builder b(rng, config);
  b.gap(100, 1000);
  bool allow_final = true;
  while (true) {
    const Word w = negative_word(spec, rng, allow_final);
    Builder probe = b;
    probe.word(w);
    if (probe.position() + tail > total) break;
    b = probe;
    allow_final = distractor_only(w);
    b.gap(100, 1500);
  }
  auto segments = std::move(b.segments());
  return finish(make_id("stream", index), false, total, std::move(segments), rng, config);
}

SynthDataset gen_synthetic_dataset(std::uint64_t seed, int n_pos, int n_neg, const KeywordSpec& spec,
                                   double noise_level) {
  if (n_pos <= 0 || n_neg <= 0) throw InvalidArgument("synthetic dataset counts must be > 0");
  SynthConfig config;
  config.noise_level = noise_level;
  SynthDataset out;
  out.utterances.reserve(static_cast<std::size_t>(n_pos + n_neg));
  for (int i = 0; i < n_pos; ++i) out.utterances.push_back(synth_positive(spec, seed, i, config));
  for (int i = 0; i < n_neg; ++i) out.utterances.push_back(synth_negative(spec, seed, i, config));
  return out;
}

std::vector<SynthUtterance> gen_negative_streams(std::uint64_t seed, double hours, const KeywordSpec& spec,
                                                 double noise_level, std::int64_t piece_ms) {
  if (!(hours > 0.0)) throw InvalidArgument("negative hours must be > 0");
  if (piece_ms < 1000) throw InvalidArgument("piece length must be at least 1 s");
  SynthConfig config;
  config.noise_level = noise_level;
  const double total_ms = hours * 3600.0 * 1000.0;
  const auto pieces = static_cast<std::int64_t>(std::ceil(total_ms / static_cast<double>(piece_ms) - 1e-9));
  std::vector<SynthUtterance> out;
  out.reserve(static_cast<std::size_t>(pieces));
  for (std::int64_t i = 0; i < pieces; ++i)
    out.push_back(synth_negative_stream(spec, seed, static_cast<std::uint64_t>(i), piece_ms, config));
  return out;
}

std::string manifest_jsonl(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec,
                           const std::string& audio_dir) {
  std::string out;
  for (const auto& u : utts) {
    const AlignedUtterance a = u.alignment();
    nlohmann::json j;
    j["id"] = u.id;
    j["is_keyword"] = u.is_keyword;
    j["num_samples"] = u.num_samples;
    j["num_frames"] = a.num_frames;
    j["keyword_end_ms"] = u.keyword_end_ms(spec);
    if (!audio_dir.empty()) j["audio_path"] = audio_dir + "/" + u.id + ".wav";
    auto& segs = j["segments"] = nlohmann::json::array();
    for (const auto& s : a.segments)
      segs.push_back({{"label", s.label}, {"start_frame", s.start_frame}, {"end_frame", s.end_frame}});
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace kws
