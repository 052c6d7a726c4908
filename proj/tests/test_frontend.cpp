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

#include <cmath>
#include <numbers>
#include <random>

#include "kws/frontend.hpp"
#include "oracles.hpp"

using namespace kws;

namespace {

std::vector<float> sine(double hz, double amp, int n, double phase = 0.0) {
  std::vector<float> pcm(n);
  for (int i = 0; i < n; ++i)
    pcm[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / kSampleRate + phase));
  return pcm;
}

std::vector<float> noise(std::uint64_t seed, int n, double std = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, std);
  std::vector<float> pcm(n);
  for (auto& s : pcm) s = static_cast<float>(d(rng));
  return pcm;
}

std::vector<FeatureFrame> frames_of(int n, std::uint64_t seed = 1) { return stream_frames(noise(seed, n)); }

}  // namespace

TEST_CASE("mel scale round trip") {
  for (double hz : {0.0, 125.0, 1000.0, 7500.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
}

TEST_CASE("filterbank matches the triangular reference") {
  MelFilterbank fb;
  REQUIRE(fb.weights().rows() == 40);
  REQUIRE(fb.weights().cols() == 257);
  for (int m = 0; m < 40; ++m)
    for (int k = 0; k < 257; ++k)
      CHECK(fb.weights()(m, k) == doctest::Approx(oracle::triangle(m, k * 16000.0 / 512.0)).epsilon(1e-12));
}

TEST_CASE("zero window gives the log floor in every bin") {
  const std::vector<float> zeros(kWindowSamples, 0.0f);
  const FeatureFrame f = compute_log_mel(zeros);
  REQUIRE(f.values.size() == 40);
  for (int m = 0; m < 40; ++m) CHECK(f.values[m] == static_cast<float>(std::log(1e-10)));
}

TEST_CASE("power spectrum and log-mel agree with a direct DFT") {
  const auto pcm = noise(7, kWindowSamples, 0.3);
  MelFilterbank fb;
  const VectorD p = fb.power_spectrum(pcm);
  const auto ref = oracle::power_spectrum(pcm);
  for (int k = 0; k < 257; ++k) CHECK(p[k] == doctest::Approx(ref[k]).epsilon(1e-9).scale(1e-12));
  const VectorF lm = fb.log_mel(pcm);
  const auto ref_lm = oracle::log_mel(pcm);
  for (int m = 0; m < 40; ++m) CHECK(lm[m] == doctest::Approx(ref_lm[m]).epsilon(1e-5));
}

TEST_CASE("1 kHz sine peaks in the bin containing 1 kHz") {
  const auto pcm = sine(1000.0, 0.5, kWindowSamples);
  const auto ref = oracle::log_mel(pcm);
  int peak_bin = 0;
  for (int m = 1; m < 40; ++m)
    if (oracle::triangle(m, 1000.0) > oracle::triangle(peak_bin, 1000.0)) peak_bin = m;
  const FeatureFrame f = compute_log_mel(pcm);
  for (int m = 0; m < 40; ++m) {
    CHECK(f.values[m] == doctest::Approx(ref[m]).epsilon(1e-5));
    if (std::abs(m - peak_bin) >= 3) CHECK(f.values[peak_bin] > f.values[m]);
  }
}

TEST_CASE("compute_log_mel is deterministic and validates its input") {
  const auto pcm = noise(3, kWindowSamples);
  CHECK(compute_log_mel(pcm).values == compute_log_mel(pcm).values);
  CHECK_THROWS_AS(compute_log_mel(std::vector<float>(479, 0.0f)), InvalidArgument);
  auto bad = pcm;
  bad[100] = std::nanf("");
  CHECK_THROWS_AS(compute_log_mel(bad), InvalidArgument);
  MelConfig c;
  c.sample_rate = 8000;
  CHECK_THROWS_AS(MelFilterbank{c}, InvalidArgument);
}

TEST_CASE("frame counts") {
  CHECK(stream_frames(std::vector<float>(1600, 0.0f)).size() == 8);  // 100 ms
  CHECK(stream_frames(std::vector<float>(480, 0.0f)).size() == 1);   // 30 ms
  CHECK(stream_frames(std::vector<float>(464, 0.0f)).empty());       // 29 ms
  const auto frames = frames_of(1600);
  for (std::size_t k = 0; k < frames.size(); ++k) CHECK(frames[k].timestamp_ms == static_cast<std::int64_t>(10 * k));
}

TEST_CASE("frame k covers samples [160k, 160k + 480)") {
  const auto pcm = noise(5, 3200);
  const auto frames = stream_frames(pcm);
  for (std::size_t k = 0; k < frames.size(); k += 7) {
    const std::vector<float> w(pcm.begin() + 160 * k, pcm.begin() + 160 * k + 480);
    CHECK(frames[k].values == compute_log_mel(w).values);
  }
}

TEST_CASE("chunked streaming equals one-shot framing") {
  const auto pcm = noise(11, 16000);
  const auto whole = stream_frames(pcm);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    FrameStreamer fs;
    std::vector<FeatureFrame> got;
    std::size_t pos = 0;
    while (pos < pcm.size()) {
      const std::size_t len = std::min<std::size_t>(pcm.size() - pos, 1 + rng() % 700);
      for (auto& f : fs.push(std::span<const float>(pcm.data() + pos, len))) got.push_back(std::move(f));
      pos += len;
    }
    REQUIRE(got.size() == whole.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].timestamp_ms == whole[k].timestamp_ms);
      CHECK(got[k].values == whole[k].values);
    }
  }
}

TEST_CASE("context windowing geometry") {
  SUBCASE("baseline: 41 frames, 30 left, 10 right, stride 3") {
    const auto frames = frames_of(160 * 40 + 480);
    REQUIRE(frames.size() == 41);
    const auto out = window_context(frames, {30, 10, 3});
    REQUIRE(out.size() == 1);
    CHECK(out[0].values.size() == 1640);
    CHECK(out[0].center_frame == 30);
    CHECK(out[0].center_timestamp_ms == 300);
  }
  SUBCASE("end to end: 3 frames, 1 left, 1 right, stride 2") {
    const auto frames = frames_of(160 * 2 + 480);
    const auto out = window_context(frames, {1, 1, 2});
    REQUIRE(out.size() == 1);
    CHECK(out[0].values.size() == 120);
    CHECK(out[0].values.segment(0, 40) == frames[0].values);
    CHECK(out[0].values.segment(80, 40) == frames[2].values);
  }
  SUBCASE("no context is a passthrough") {
    const auto frames = frames_of(3200);
    const auto out = window_context(frames, {0, 0, 1});
    REQUIRE(out.size() == frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) CHECK(out[k].values == frames[k].values);
  }
  SUBCASE("stride subsamples inference times") {
    CHECK(inference_centers(100, {1, 1, 2}) .size() == 49);
    CHECK(inference_centers(100, {30, 10, 3}).size() == 20);
    const auto c = inference_centers(10, {0, 0, 3});
    CHECK(c == std::vector<std::int64_t>{0, 3, 6, 9});
  }
  CHECK_THROWS_AS(ContextConfig({0, 0, 0}).validate(), InvalidArgument);
}

TEST_CASE("streaming windower equals batch windowing") {
  const auto frames = frames_of(16000, 4);
  for (ContextConfig ctx : {ContextConfig{1, 1, 2}, ContextConfig{30, 10, 3}, ContextConfig{0, 0, 1}, ContextConfig{2, 0, 5}}) {
    const auto batch = window_context(frames, ctx);
    ContextWindower w(ctx);
    std::vector<StackedInput> got;
    for (const auto& f : frames)
      for (auto& s : w.push(f)) got.push_back(std::move(s));
    REQUIRE(got.size() == batch.size());
    const MatrixF stacked = stack_matrix(frames, ctx);
    REQUIRE(stacked.cols() == static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].values.size() == ctx.input_dim());
      CHECK(got[i].values == batch[i].values);
      CHECK(got[i].center_frame == batch[i].center_frame);
      CHECK(VectorF(stacked.col(static_cast<Eigen::Index>(i))) == batch[i].values);
    }
  }
}
