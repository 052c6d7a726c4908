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

// Acceptance run: one PASS/FAIL line per criterion with measured values and
// runtimes. Exit status is nonzero when a criterion fails, unless its number
// is listed with --known-failures (the line still reads FAIL).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kws/evaluation.hpp"
#include "kws/labeling.hpp"
#include "kws/model_io.hpp"
#include "kws/scoring.hpp"
#include "kws/synth.hpp"
#include "kws/topology.hpp"
#include "kws/training.hpp"
#include "oracles.hpp"

using namespace kws;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  int id = 0;
  std::string name;
  bool ok = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;
};

std::vector<Outcome> g_outcomes;
std::string g_log;  // everything printed, for --report

void emit(const std::string& line) {
  std::fputs(line.c_str(), stdout);
  std::fflush(stdout);
  g_log += line;
}

template <typename... Args>
std::string fmt(const char* f, Args... args);

void report(Outcome o) {
  const bool in_time = o.seconds < o.budget;
  if (!in_time) o.detail += "; over the time budget";
  o.ok = o.ok && in_time;
  emit(fmt("%s criterion %d (%s): %s [%.1f s, budget %.0f s]\n", o.ok ? "PASS" : "FAIL", o.id, o.name.c_str(),
           o.detail.c_str(), o.seconds, o.budget));
  g_outcomes.push_back(std::move(o));
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  const int n = std::snprintf(nullptr, 0, f, args...);
  std::string out(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(out.data(), out.size(), f, args...);
  out.pop_back();
  return out;
}

// ---------------------------------------------------------------- 1

void streaming_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int violations = 0;
  long outputs = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + rng() % 16, t = 1 + rng() % 8, f = 1 + rng() % 16;
    const auto act = trial % 2 ? Activation::kRelu : Activation::kIdentity;
    const auto layer = oracle::random_svdf(rng, n, t, f, act, rng() % 2);
    const auto xs = oracle::random_inputs(rng, 1 + rng() % (3 * t), f);
    const auto ref = oracle::svdf(layer, xs);
    SvdfState<float> state(layer);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const VectorF y = svdf_forward_stream(layer, state, xs[i]);
      for (int m = 0; m < n; ++m) {
        const long double r = ref[i][m];
        const double rel = static_cast<double>(std::fabs(y[m] - r) / std::max(std::fabs(r), 1e-9L));
        worst = std::max(worst, rel);
        violations += rel > 1e-6;
        ++outputs;
      }
    }
  }
  report({1, "streaming equivalence", violations == 0,
          fmt("1000 layers, %ld outputs, max relative error %.2e (tolerance 1e-6)", outputs, worst),
          seconds_since(t0), 10});
}

// ---------------------------------------------------------------- 2

void receptive_field_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f), pos(1.0f, 2.0f);
  int leaks = 0, blind = 0, rf_mismatch = 0, trials = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int depth = 1 + rng() % 4, memory = 1 + rng() % 6, f = 2 + rng() % 7;
    ModelConfig c;
    c.name = "stack";
    c.input_dim = f;
    for (int d = 0; d < depth; ++d) c.layers.push_back(LayerSpec::svdf(2 + rng() % 7, memory));
    c.layers.push_back(LayerSpec::softmax(3));
    // Filters scaled by fan-in and positive biases keep ReLU units active, so
    // the boundary frame has a live path to the output.
    Model<float> model(c);
    for (auto& layer : model.layers()) {
      if (auto* s = std::get_if<SvdfLayer<float>>(&layer)) {
        for (auto& w : s->beta.reshaped()) w = u(rng) / std::sqrt(static_cast<float>(s->beta.cols()));
        for (auto& w : s->alpha.reshaped()) w = u(rng) / std::sqrt(static_cast<float>(s->alpha.cols()));
        for (auto& b : s->bias) b = pos(rng);
      } else if (auto* d = std::get_if<DenseLayer<float>>(&layer)) {
        for (auto& w : d->weights.reshaped()) w = u(rng);
      }
    }

    const int horizon = depth * (memory - 1);
    rf_mismatch += receptive_field(c).inference_steps != horizon;
    const int len = horizon + 4 + static_cast<int>(rng() % 6);
    const auto xs = oracle::random_inputs(rng, len, f);
    auto final_output = [&](const std::vector<VectorF>& in) {
      NetworkState<float> state(model);
      VectorF y;
      for (const auto& x : in) y = network_forward_step(model, state, x).output();
      return y;
    };
    const VectorF base = final_output(xs);
    for (int age = horizon; age < len; ++age) {
      auto perturbed = xs;
      perturbed[len - 1 - age].array() += 1.0f;
      const VectorF y = final_output(perturbed);
      const bool same = std::equal(y.begin(), y.end(), base.begin());
      if (age > horizon && !same) ++leaks;
      if (age == horizon && same) ++blind;
    }
    ++trials;
  }
  report({2, "receptive-field exactness", leaks == 0 && blind == 0 && rf_mismatch == 0,
          fmt("%d stacks (D<=4, T<=6): %d changes beyond D(T-1), %d unchanged at the boundary, "
              "%d receptive_field mismatches",
              trials, leaks, blind, rf_mismatch),
          seconds_since(t0), 10});
}

// ---------------------------------------------------------------- 3

ModelConfig random_small_topology(std::mt19937_64& rng, int trial) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % (hi - lo + 1)); };
  ModelConfig c;
  c.name = "grad" + std::to_string(trial);
  if (trial % 2) {
    c.context = {1, 0, 1};  // 2 x 40 grid
    c.layers.push_back(LayerSpec::conv(2, 2, 8, 2, 8));
    c.layers.push_back(LayerSpec::dense(pick(2, 4)));
    c.layers.push_back(LayerSpec::svdf(pick(2, 4), pick(1, 4)));
    c.layers.push_back(LayerSpec::softmax(pick(2, 3)));
  } else {
    c.input_dim = pick(2, 5);
    c.layers.push_back(LayerSpec::svdf(pick(2, 5), pick(1, 4)));
    c.layers.push_back(LayerSpec::bottleneck(pick(1, 3), rng() % 2));
    c.layers.push_back(LayerSpec::svdf(pick(2, 5), pick(1, 4), Activation::kRelu, rng() % 2));
    c.layers.push_back(LayerSpec::dense(pick(2, 4)));
    c.layers.push_back(LayerSpec::softmax(pick(2, 4)));
  }
  return c;
}

void gradient_checks() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::normal_distribution<double> nd(0.0, 0.5);
  std::set<std::string> kinds;
  long checked = 0;
  int bad = 0;
  std::int64_t largest = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto config = random_small_topology(rng, trial);
    Model<double> model(config);
    largest = std::max(largest, model.num_params());
    VectorD p(model.num_params());
    for (auto& v : p) v = nd(rng);
    model.set_flat_parameters(p);
    for (const auto& l : config.layers) kinds.insert(std::string(to_string(l.kind)));

    const int len = 6 + static_cast<int>(rng() % 5);
    MatrixD x(model.input_dim(), len);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng) * 2.0;
    std::vector<int> labels(len);
    for (auto& l : labels) l = static_cast<int>(rng() % model.num_classes());

    SequenceCache<double> cache;
    network_forward(model, x, &cache);
    Gradients<double> g(model);
    network_backward(model, cache, labels, g);
    const VectorD analytic = g.flat();
    const VectorD numeric = oracle::numeric_gradient(
        [&](const VectorD& q) {
          auto m = model;
          m.set_flat_parameters(q);
          return sequence_loss(m, x, labels);
        },
        p, 1e-6);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double diff = std::abs(numeric[i] - analytic[i]);
      const double scale = std::max(std::abs(numeric[i]), std::abs(analytic[i]));
      const double allowed = std::max(1e-3 * scale, 1e-5);
      worst = std::max(worst, diff / allowed);
      bad += diff > allowed;
      ++checked;
    }
  }
  std::string kind_list;
  for (const auto& k : kinds) kind_list += (kind_list.empty() ? "" : ",") + k;
  const bool all_kinds = kinds.size() == 5;
  report({3, "gradient checks", bad == 0 && all_kinds && largest <= 500,
          fmt("50 models (<= %lld params; layers %s), %ld parameters, %d outside tolerance, "
              "worst error/tolerance %.1e",
              static_cast<long long>(largest), kind_list.c_str(), checked, bad, worst),
          seconds_since(t0), 30});
}

// ---------------------------------------------------------------- 4

void accounting() {
  const auto t0 = Clock::now();
  struct Row {
    const char* name;
    double params_target, params_lo, params_hi, macs_target;
  };
  const Row rows[] = {{"E2E_700K", 700e3, 560e3, 840e3, 350e3},
                      {"E2E_318K", 318e3, 254.4e3, 381.6e3, 159e3},
                      {"E2E_40K", 40e3, 32e3, 48e3, 20e3}};
  bool ok = true;
  std::ostringstream d;
  const auto base = builtin_config("Baseline_1850K");
  const double bp = static_cast<double>(count_params(base));
  const double bm = static_cast<double>(count_macs(base, MacConvention::kPerInference));
  ok = ok && bp >= 1.6e6 && bp <= 1.9e6 && std::abs(bm / 1.8e6 - 1.0) <= 0.2;
  d << fmt("Baseline_1850K %.0f params, %.0f MACs/inference (%+.1f%% vs 1.8M)", bp, bm, 100 * (bm / 1.8e6 - 1));
  for (const auto& r : rows) {
    const auto c = builtin_config(r.name);
    const double p = static_cast<double>(count_params(c));
    const double m = static_cast<double>(count_macs(c, MacConvention::kPer10msFrame));
    const double mi = static_cast<double>(count_macs(c, MacConvention::kPerInference));
    ok = ok && p >= r.params_lo && p <= r.params_hi && std::abs(m / r.macs_target - 1.0) <= 0.2;
    d << fmt("; %s %.0f params (%+.1f%%), %.0f MACs per 10 ms (%+.1f%%), %.0f per inference", r.name, p,
             100 * (p / r.params_target - 1), m, 100 * (m / r.macs_target - 1), mi);
  }
  report({4, "parameter and MAC accounting", ok, d.str(), seconds_since(t0), 1});
}

// ---------------------------------------------------------------- shared data

std::vector<LabeledSequence> e2e_sequences(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec,
                                           const ContextConfig& ctx, int extra) {
  std::vector<LabeledSequence> out;
  out.reserve(utts.size());
  for (const auto& u : utts)
    out.push_back(make_labeled_sequence(u.id, stream_frames(u.render()),
                                        generate_e2e_labels(u.alignment(), spec, extra), ctx));
  return out;
}

std::vector<LabeledSequence> subword_sequences(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec,
                                               const ContextConfig& ctx) {
  std::vector<LabeledSequence> out;
  out.reserve(utts.size());
  for (const auto& u : utts)
    out.push_back(make_labeled_sequence(u.id, stream_frames(u.render()),
                                        generate_encoder_labels(u.alignment(), spec), ctx));
  return out;
}

int auto_extra(const std::vector<SynthUtterance>& utts, const KeywordSpec& spec, const ContextConfig& ctx) {
  std::vector<AlignedUtterance> a;
  for (const auto& u : utts) a.push_back(u.alignment());
  return choose_extra_positives(a, spec, ctx);
}

// ---------------------------------------------------------------- 5

void overfit_convergence() {
  const auto t0 = Clock::now();
  const auto spec = KeywordSpec::ok_google();
  const auto config = builtin_config("E2E_40K");
  const auto data = gen_synthetic_dataset(5, 16, 16, spec);
  const auto seqs = e2e_sequences(data.utterances, spec, config.context,
                                  auto_extra(data.utterances, spec, config.context));
  TrainConfig tc;
  tc.epochs = 500;
  tc.target_loss = 0.05;
  tc.seed = 5;
  auto run = [&] {
    auto model = Model<float>::initialized(config, tc.seed);
    return train(model, seqs, tc);
  };
  const auto a = run();
  const auto b = run();
  const bool converged = a.final_loss < 0.05;
  const bool deterministic = a.checksum == b.checksum && a.epochs_run == b.epochs_run;
  report({5, "overfit convergence", converged && deterministic,
          fmt("E2E_40K (N=96) on 32 utterances: per-frame CE %.4f after %d epochs (target < 0.05 within 500); "
              "rerun checksum %08x vs %08x",
              a.final_loss, a.epochs_run, a.checksum, b.checksum),
          seconds_since(t0), 300});
}

// ---------------------------------------------------------------- 7

void recipe_contracts() {
  const auto t0 = Clock::now();
  const auto spec = KeywordSpec::ok_google();
  ModelConfig full;
  full.name = "recipe";
  full.context = {1, 1, 2};
  full.layers = {LayerSpec::svdf(32, 8), LayerSpec::bottleneck(16), LayerSpec::svdf(32, 8),
                 LayerSpec::svdf(16, 16), LayerSpec::softmax(2)};
  full.encoder_boundary = 3;
  const auto enc = encoder_config(full, spec.num_classes);
  const auto dec = decoder_config(full, spec.num_classes);
  const auto data = gen_synthetic_dataset(7, 24, 24, spec);
  const auto enc_data = subword_sequences(data.utterances, spec, full.context);
  const auto dec_data = e2e_sequences(data.utterances, spec, full.context, 20);

  TrainConfig enc_cfg;
  enc_cfg.epochs = 8;
  enc_cfg.seed = 1;
  TrainConfig dec_cfg;
  dec_cfg.epochs = 8;
  dec_cfg.seed = 2;

  // Stage 1 on its own gives the encoder both recipes start from.
  auto encoder = Model<float>::initialized(enc, enc_cfg.seed);
  train(encoder, enc_data, enc_cfg);
  const auto boundary = encoder.num_layers();
  const auto enc_sum = parameter_checksum(encoder);

  const auto two = train_two_stage(enc, dec, enc_data, dec_data, enc_cfg, dec_cfg);

  auto one = Model<float>::initialized(compose(enc, dec), dec_cfg.seed);
  one.copy_layers_from(two.model, 0, 0);
  for (int i = 0; i < boundary; ++i) one.layers()[i] = encoder.layers()[i];
  TrainConfig one_cfg = dec_cfg;
  one_cfg.recipe = Recipe::kOneStage;
  one_cfg.adaptation_rate = 0.0;
  train(one, dec_data, one_cfg);

  const auto two_enc = parameter_checksum(two.model, 0, boundary);
  const auto one_enc = parameter_checksum(one, 0, boundary);
  const auto two_dec = parameter_checksum(two.model, boundary, two.model.num_layers());
  const auto one_dec = parameter_checksum(one, boundary, one.num_layers());
  const VectorF diff = two.model.flat_parameters() - one.flat_parameters();
  const bool ok = two_enc == enc_sum && one_enc == enc_sum && two_dec == one_dec && diff.isZero(0.0f);
  report({7, "recipe contracts", ok,
          fmt("encoder checksum %08x; after two_stage %08x, after one_stage(adaptation 0) %08x; decoder "
              "checksums %08x vs %08x, max parameter difference %.1e",
              enc_sum, two_enc, one_enc, two_dec, one_dec, diff.cwiseAbs().maxCoeff()),
          seconds_since(t0), 60});
}

// ---------------------------------------------------------------- 8

void scorer_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(808);
  std::gamma_distribution<double> g(0.5, 1.0);
  double worst = 0.0;
  long steps = 0;
  for (int stream = 0; stream < 200; ++stream) {
    std::vector<int> kw(3);
    for (auto& c : kw) c = static_cast<int>(rng() % 9);
    PosteriorSmoother smoother(9, kw, 100);
    std::vector<std::vector<double>> raw;
    std::vector<double> sum(9, 0.0);
    std::vector<std::vector<double>> smoothed;
    for (int t = 0; t < 30; ++t) {
      std::vector<double> p(9);
      double total = 0.0;
      for (auto& v : p) total += (v = g(rng));
      for (auto& v : p) v /= total;
      raw.push_back(p);
      const double got = smoother.push(p);
      std::vector<double> mean(9, 0.0);
      for (const auto& r : raw)
        for (int c = 0; c < 9; ++c) mean[c] += r[c] / static_cast<double>(raw.size());
      smoothed.push_back(mean);
      const double want = std::cbrt(oracle::ordered_product(smoothed, kw));
      worst = std::max(worst, std::abs(got - want));
      ++steps;
    }
  }
  report({8, "smoothed-posterior scorer oracle", worst <= 1e-9,
          fmt("200 streams x 30 frames, K=3: %ld scores, max |incremental - enumeration| %.2e (tolerance 1e-9)",
              steps, worst),
          seconds_since(t0), 10});
}

// ---------------------------------------------------------------- 9

bool roc_monotone(const std::vector<RocPoint>& roc) {
  for (std::size_t i = 1; i < roc.size(); ++i)
    if (roc[i].fr_rate < roc[i - 1].fr_rate || roc[i].fa_per_hour > roc[i - 1].fa_per_hour) return false;
  return true;
}

void roc_properties(const std::vector<std::pair<std::string, std::vector<RocPoint>>>& runs) {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string d;
  for (const auto& [name, roc] : runs) {
    const bool m = roc_monotone(roc);
    ok = ok && m;
    d += name + (m ? " monotone; " : " NOT monotone; ");
  }
  // Degenerate detectors on ten one-hour negative streams and 20 positives.
  ScoredSet perfect, silent;
  for (int i = 0; i < 30; ++i) {
    ScoredUtterance u;
    u.id = fmt("u%02d", i);
    u.is_keyword = i < 20;
    u.duration_ms = u.is_keyword ? 3000 : 3600000;
    u.keyword_end_ms = u.is_keyword ? 1500 : -1;
    for (std::int64_t t = 0; t < u.duration_ms; t += 20)
      u.scores.push_back({t, u.is_keyword && t >= 1500 && t < 1800 ? 1.0 : 0.0});
    perfect.utterances.push_back(u);
    for (auto& s : u.scores) s.score = 0.0;
    silent.utterances.push_back(u);
  }
  const auto thr = default_thresholds();
  const auto p = roc_curve(perfect, thr);
  const auto s = roc_curve(silent, thr);
  const bool p_ok = std::all_of(p.begin(), p.end(), [](const RocPoint& r) { return r.fr_rate == 0 && r.fa_per_hour == 0; });
  const bool s_ok = std::all_of(s.begin(), s.end(), [](const RocPoint& r) { return r.fr_rate == 1 && r.fa_per_hour == 0; });
  const auto op = fr_at_fa(perfect, 0.1, thr);
  const auto so = fr_at_fa(silent, 0.1, thr);
  ok = ok && p_ok && s_ok && op.fr_rate == 0 && so.fr_rate == 1 && so.fa_per_hour == 0;
  d += fmt("perfect separator: FR 0 and FA 0 at all %zu thresholds %s, FR at 0.1 FA/h %.2f; never-fires: FA 0 "
           "and FR 1 everywhere %s, FR at 0.1 FA/h %.2f",
           thr.size(), p_ok ? "yes" : "no", op.fr_rate, s_ok ? "yes" : "no", so.fr_rate);
  report({9, "ROC properties", ok, d, seconds_since(t0), 5});
}

// ---------------------------------------------------------------- 10 and 6

ModelConfig scaled_baseline() {
  ModelConfig c;
  c.name = "Baseline_scaled";
  c.context = {30, 10, 3};
  c.layers.push_back(LayerSpec::conv(16, 8, 8, 8, 8));
  for (int i = 0; i < 3; ++i) c.layers.push_back(LayerSpec::dense(64));
  c.layers.push_back(LayerSpec::softmax(9));
  return c;
}

struct Benchmark {
  std::shared_ptr<const Model<float>> e2e;
  std::optional<OperatingPoint> op;
  std::vector<std::pair<std::string, std::vector<RocPoint>>> rocs;
};

Benchmark synthetic_benchmark() {
  const auto t0 = Clock::now();
  const auto spec = KeywordSpec::ok_google();
  Benchmark out;
  std::ostringstream d;

  // Training data: 600 keyword and 2400 non-keyword utterances.
  const auto train_set = gen_synthetic_dataset(11, 600, 2400, spec);
  const auto e2e_config = builtin_config("E2E_40K");
  const int extra = auto_extra(train_set.utterances, spec, e2e_config.context);
  {
    const auto seqs = e2e_sequences(train_set.utterances, spec, e2e_config.context, extra);
    TrainConfig tc;
    tc.epochs = 25;
    tc.seed = 3;
    auto model = Model<float>::initialized(e2e_config, tc.seed);
    const auto r = train(model, seqs, tc);
    out.e2e = std::make_shared<const Model<float>>(std::move(model));
    d << fmt("E2E_40K one_stage: 3000 utterances, extra_positives %d, 25 epochs, CE %.4f (%.0f s)", extra,
             r.final_loss, r.wall_seconds);
  }
  std::shared_ptr<const Model<float>> baseline;
  {
    // A quarter of the negatives keep the 1640-wide stacked inputs in memory.
    std::vector<SynthUtterance> subset(train_set.utterances.begin(), train_set.utterances.begin() + 300);
    subset.insert(subset.end(), train_set.utterances.begin() + 600, train_set.utterances.begin() + 1500);
    const auto cfg = scaled_baseline();
    const auto seqs = subword_sequences(subset, spec, cfg.context);
    TrainConfig tc;
    tc.epochs = 15;
    tc.seed = 4;
    auto model = Model<float>::initialized(cfg, tc.seed);
    const auto r = train(model, seqs, tc);
    baseline = std::make_shared<const Model<float>>(std::move(model));
    d << fmt("; %s (%lld params): 1200 utterances, 15 epochs, CE %.4f (%.0f s)", cfg.name.c_str(),
             static_cast<long long>(count_params(cfg)), r.final_loss, r.wall_seconds);
  }

  // Evaluation suite: 500 held-out keyword utterances and 10 h of negatives.
  auto pos = gen_synthetic_dataset(1001, 500, 1, spec);
  pos.utterances.pop_back();
  auto utts = std::move(pos.utterances);
  for (auto& s : gen_negative_streams(1001, 10.0, spec)) utts.push_back(std::move(s));
  const auto eval_set = make_eval_set(utts, spec);
  KeywordDetector e2e_det(out.e2e);
  DetectorOptions base_opts;
  base_opts.keyword_classes = spec.keyword_class_sequence();
  KeywordDetector base_det(baseline, base_opts);
  const auto t_score = Clock::now();
  const auto scored = score_eval_set(eval_set, {&e2e_det, &base_det}, 1);
  d << fmt("; scored %zu positives and %.1f h of negatives with both models in %.0f s", eval_set.num_positives(),
           eval_set.negative_hours(), seconds_since(t_score));

  const auto thr = default_thresholds();
  const auto e2e_report = evaluate(scored[0], "E2E_40K", 0.5, thr);
  const auto base_report = evaluate(scored[1], "Baseline_scaled", 0.5, thr);
  out.rocs = {{"E2E_40K ROC", e2e_report.roc}, {"Baseline_scaled ROC", base_report.roc}};
  out.op = e2e_report.operating_point;
  auto describe = [](const EvalReport& r) {
    if (!r.operating_point) return std::string("no threshold reaches 0.5 FA/h");
    return fmt("FR %.1f%% at threshold %.4f (%.2f FA/h)", 100 * r.operating_point->fr_rate,
               r.operating_point->threshold, r.operating_point->fa_per_hour);
  };
  d << "; E2E_40K " << describe(e2e_report) << "; Baseline_scaled " << describe(base_report);
  for (double fa : {1.0, 0.1}) {
    try {
      d << fmt("; E2E_40K FR %.1f%% at %.1f FA/h", 100 * fr_at_fa(e2e_report.roc, fa).fr_rate, fa);
    } catch (const NoOperatingPoint&) {
      d << fmt("; E2E_40K has no operating point at %.1f FA/h", fa);
    }
  }
  const bool ok = out.op && out.op->fr_rate < 0.10 && !base_report.roc.empty();
  report({10, "synthetic end-to-end benchmark", ok, d.str(), seconds_since(t0), 900});
  return out;
}

void latency(const Benchmark& bench) {
  const auto t0 = Clock::now();
  if (!bench.op) {
    report({6, "spikiness/latency", false, "no 0.5 FA/h operating point from the benchmark", seconds_since(t0), 120});
    return;
  }
  const auto spec = KeywordSpec::ok_google();
  auto held = gen_synthetic_dataset(2002, 200, 1, spec);
  held.utterances.pop_back();
  KeywordDetector det(bench.e2e);
  const auto scored = score_eval_set(make_eval_set(held.utterances, spec), det, 1);
  const auto lat = latency_report(scored, bench.op->threshold);
  int before = 0, after = 0;
  for (auto l : lat.latencies_ms) {
    before += l < -100;
    after += l > 750;
  }
  // Early events measured against the onset of the final component, where
  // the end-to-end targets begin.
  std::map<std::string, std::int64_t> onset_ms;
  for (const auto& u : held.utterances) {
    const auto a = u.alignment();
    for (const auto& seg : a.segments)
      if (seg.label == spec.last_component()) onset_ms[a.id] = 10 * static_cast<std::int64_t>(seg.start_frame);
  }
  int early_after_onset = 0;
  for (const auto& u : scored.utterances) {
    const auto first = std::find_if(u.scores.begin(), u.scores.end(),
                                    [&](const ScorePoint& p) { return p.score >= bench.op->threshold; });
    if (first == u.scores.end() || first->timestamp_ms - u.keyword_end_ms >= -100) continue;
    early_after_onset += first->timestamp_ms >= onset_ms.at(u.id);
  }
  report({6, "spikiness/latency", lat.in_window_fraction() >= 0.9,
          fmt("200 held-out positives at the 0.5 FA/h threshold %.4f: %d hits, first event within [-100, +750] ms "
              "of keyword end for %.1f%% (need >= 90%%); %d early (%d of them after the onset of the final "
              "component), %d late; median latency %+.0f ms",
              bench.op->threshold, lat.hits, 100 * lat.in_window_fraction(), before, early_after_onset, after,
              lat.median_latency_ms()),
          seconds_since(t0), 120});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the keyword spotting engine"};
  std::vector<int> known;
  bool quick = false;
  std::string report_path;
  app.add_option("--known-failures", known, "Criteria whose FAIL does not change the exit status");
  app.add_flag("--skip-benchmark", quick, "Skip criteria 6 and 10 (the trained-model benchmark)");
  app.add_option("--report", report_path, "Also write all output lines to this file");
  CLI11_PARSE(app, argc, argv);

  const auto t0 = Clock::now();
  streaming_equivalence();
  receptive_field_exactness();
  gradient_checks();
  accounting();
  overfit_convergence();
  recipe_contracts();
  scorer_oracle();
  std::vector<std::pair<std::string, std::vector<RocPoint>>> rocs;
  if (!quick) {
    const auto bench = synthetic_benchmark();
    latency(bench);
    rocs = bench.rocs;
  }
  roc_properties(rocs);

  std::sort(g_outcomes.begin(), g_outcomes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  emit(fmt("\nSummary (%.0f s):\n", seconds_since(t0)));
  int hard = 0;
  for (const auto& o : g_outcomes) {
    const bool excused = !o.ok && std::find(known.begin(), known.end(), o.id) != known.end();
    emit(fmt("  %s %2d %s%s\n", o.ok ? "PASS" : "FAIL", o.id, o.name.c_str(),
             excused ? " (listed as a known failure)" : ""));
    hard += !o.ok && !excused;
  }
  if (!report_path.empty()) {
    std::FILE* f = std::fopen(report_path.c_str(), "w");
    if (!f) {
      std::fprintf(stderr, "cannot write %s\n", report_path.c_str());
      return 1;
    }
    std::fputs(g_log.c_str(), f);
    std::fclose(f);
  }
  return hard == 0 ? 0 : 1;
}
