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
#include <span>
#include <vector>

#include "kws/common.hpp"

namespace kws {

/// Log-mel filterbank settings. Only 16 kHz input is accepted.
struct MelConfig {
  int sample_rate = kSampleRate;
  int window_samples = kWindowSamples;
  int hop_samples = kHopSamples;
  int fft_size = 512;
  int num_bins = kMelBins;
  double low_hz = 125.0;
  double high_hz = 7500.0;
  double log_floor = 1e-10;

  bool operator==(const MelConfig&) const = default;
};

/// One 40-dim log-mel vector. timestamp_ms is the start of its 30 ms window.
struct FeatureFrame {
  VectorF values;
  std::int64_t timestamp_ms = 0;
};

struct ContextConfig {
  int left = 0;
  int right = 0;
  int stride = 1;

  int width() const { return left + 1 + right; }
  int input_dim() const { return kMelBins * width(); }
  void validate() const;
  bool operator==(const ContextConfig&) const = default;
};

/// Context-stacked network input, frames concatenated oldest first.
struct StackedInput {
  VectorF values;
  std::int64_t center_timestamp_ms = 0;
  std::int64_t center_frame = 0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Precomputed window and triangular filters; cheap to copy, immutable after
/// construction.
class MelFilterbank {
 public:
  explicit MelFilterbank(const MelConfig& config = {});

  const MelConfig& config() const { return config_; }
  /// Dense num_bins x (fft_size/2 + 1) weight matrix.
  const MatrixD& weights() const { return weights_; }
  const VectorD& window() const { return window_; }

  /// Power spectrum of one analysis window (Hann, zero padded to fft_size).
  VectorD power_spectrum(std::span<const float> pcm) const;
  VectorF log_mel(std::span<const float> pcm) const;

 private:
  MelConfig config_;
  VectorD window_;
  MatrixD weights_;
  // Sparse support of each filter, [first, last) bin.
  std::vector<std::pair<int, int>> support_;
};

/// 480 samples at 16 kHz -> one 40-dim log-mel frame.
FeatureFrame compute_log_mel(std::span<const float> pcm_window,
                             const MelConfig& config = {});

/// Chunk-invariant framer: holds samples until a full 30 ms window is
/// available and emits one frame per 10 ms hop.
class FrameStreamer {
 public:
  explicit FrameStreamer(const MelConfig& config = {});

  std::vector<FeatureFrame> push(std::span<const float> samples);
  void reset();
  std::int64_t frames_emitted() const { return next_frame_; }

 private:
  MelFilterbank filterbank_;
  std::vector<float> pending_;
  std::int64_t next_frame_ = 0;
};

/// One-shot framing of a whole signal. Streams shorter than a window give
/// an empty result.
std::vector<FeatureFrame> stream_frames(std::span<const float> pcm,
                                        const MelConfig& config = {});

/// Centers at t = left, left + stride, ... while t + right is a real frame.
std::vector<StackedInput> window_context(const std::vector<FeatureFrame>& frames,
                                         const ContextConfig& ctx);

/// Center frame indices window_context would emit for n frames.
std::vector<std::int64_t> inference_centers(std::int64_t num_frames,
                                            const ContextConfig& ctx);

/// Columns of window_context packed into an input_dim x L matrix.
MatrixF stack_matrix(const std::vector<FeatureFrame>& frames,
                     const ContextConfig& ctx);

/// Streaming counterpart of window_context.
class ContextWindower {
 public:
  explicit ContextWindower(const ContextConfig& ctx);

  /// Returns the stacked input completed by this frame, if any.
  std::vector<StackedInput> push(const FeatureFrame& frame);
  void reset();

 private:
  ContextConfig ctx_;
  std::deque<FeatureFrame> history_;
  std::int64_t frames_seen_ = 0;
};

}  // namespace kws
