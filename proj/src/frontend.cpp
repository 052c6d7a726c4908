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

#include "kws/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace kws {

void ContextConfig::validate() const {
  if (left < 0 || right < 0) throw InvalidArgument("context sizes must be >= 0");
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(const MelConfig& config) : config_(config) {
  if (config_.sample_rate != kSampleRate)
    throw InvalidArgument("only 16 kHz audio is supported");
  if (config_.fft_size < config_.window_samples)
    throw InvalidArgument("fft_size shorter than the analysis window");

  const int n = config_.window_samples;
  window_.resize(n);
  // Periodic Hann.
  for (int i = 0; i < n; ++i)
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);

  const int num_fft_bins = config_.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(config_.low_hz);
  const double mel_hi = hz_to_mel(config_.high_hz);
  std::vector<double> edges(config_.num_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      (config_.num_bins + 1));

  weights_ = MatrixD::Zero(config_.num_bins, num_fft_bins);
  support_.assign(config_.num_bins, {num_fft_bins, 0});
  const double bin_hz = static_cast<double>(config_.sample_rate) / config_.fft_size;
  for (int m = 0; m < config_.num_bins; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < num_fft_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= center)
        w = (f - lo) / (center - lo);
      else if (f > center && f < hi)
        w = (hi - f) / (hi - center);
      if (w > 0.0) {
        weights_(m, k) = w;
        support_[m].first = std::min(support_[m].first, k);
        support_[m].second = std::max(support_[m].second, k + 1);
      }
    }
  }
}

VectorD MelFilterbank::power_spectrum(std::span<const float> pcm) const {
  if (static_cast<int>(pcm.size()) != config_.window_samples)
    throw InvalidArgument("log-mel window must be exactly " +
                          std::to_string(config_.window_samples) + " samples, got " +
                          std::to_string(pcm.size()));
  thread_local Eigen::FFT<double> fft;
  thread_local std::vector<double> buffer;
  thread_local std::vector<std::complex<double>> spectrum;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);

  buffer.assign(config_.fft_size, 0.0);
  for (int i = 0; i < config_.window_samples; ++i) {
    const float s = pcm[i];
    if (!std::isfinite(s)) throw InvalidArgument("non-finite sample in window");
    buffer[i] = window_[i] * s;
  }
  fft.fwd(spectrum, buffer);

  const int num_fft_bins = config_.fft_size / 2 + 1;
  VectorD power(num_fft_bins);
  for (int k = 0; k < num_fft_bins; ++k) power[k] = std::norm(spectrum[k]);
  return power;
}

VectorF MelFilterbank::log_mel(std::span<const float> pcm) const {
  const VectorD power = power_spectrum(pcm);
  VectorF out(config_.num_bins);
  for (int m = 0; m < config_.num_bins; ++m) {
    const auto [first, last] = support_[m];
    double energy = 0.0;
    for (int k = first; k < last; ++k) energy += weights_(m, k) * power[k];
    out[m] = static_cast<float>(std::log(std::max(energy, config_.log_floor)));
  }
  return out;
}

FeatureFrame compute_log_mel(std::span<const float> pcm_window, const MelConfig& config) {
  thread_local MelFilterbank cached{};
  if (config == cached.config()) return FeatureFrame{cached.log_mel(pcm_window), 0};
  return FeatureFrame{MelFilterbank(config).log_mel(pcm_window), 0};
}

FrameStreamer::FrameStreamer(const MelConfig& config) : filterbank_(config) {}

std::vector<FeatureFrame> FrameStreamer::push(std::span<const float> samples) {
  pending_.insert(pending_.end(), samples.begin(), samples.end());
  const auto& cfg = filterbank_.config();
  std::vector<FeatureFrame> out;
  std::size_t offset = 0;
  while (pending_.size() - offset >= static_cast<std::size_t>(cfg.window_samples)) {
    FeatureFrame frame;
    frame.values = filterbank_.log_mel(
        std::span<const float>(pending_.data() + offset, cfg.window_samples));
    frame.timestamp_ms = next_frame_ * cfg.hop_samples * 1000 / cfg.sample_rate;
    out.push_back(std::move(frame));
    ++next_frame_;
    offset += cfg.hop_samples;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(offset));
  return out;
}

void FrameStreamer::reset() {
  pending_.clear();
  next_frame_ = 0;
}

std::vector<FeatureFrame> stream_frames(std::span<const float> pcm, const MelConfig& config) {
  FrameStreamer streamer(config);
  return streamer.push(pcm);
}

std::vector<std::int64_t> inference_centers(std::int64_t num_frames, const ContextConfig& ctx) {
  ctx.validate();
  std::vector<std::int64_t> centers;
  for (std::int64_t t = ctx.left; t + ctx.right < num_frames; t += ctx.stride)
    centers.push_back(t);
  return centers;
}

std::vector<StackedInput> window_context(const std::vector<FeatureFrame>& frames,
                                         const ContextConfig& ctx) {
  std::vector<StackedInput> out;
  for (std::int64_t t : inference_centers(static_cast<std::int64_t>(frames.size()), ctx)) {
    StackedInput in;
    in.values.resize(ctx.input_dim());
    for (int k = 0; k < ctx.width(); ++k)
      in.values.segment(k * kMelBins, kMelBins) = frames[t - ctx.left + k].values;
    in.center_timestamp_ms = frames[t].timestamp_ms;
    in.center_frame = t;
    out.push_back(std::move(in));
  }
  return out;
}

MatrixF stack_matrix(const std::vector<FeatureFrame>& frames, const ContextConfig& ctx) {
  const auto centers = inference_centers(static_cast<std::int64_t>(frames.size()), ctx);
  MatrixF out(ctx.input_dim(), static_cast<Eigen::Index>(centers.size()));
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (int k = 0; k < ctx.width(); ++k)
      out.col(static_cast<Eigen::Index>(c)).segment(k * kMelBins, kMelBins) =
          frames[centers[c] - ctx.left + k].values;
  return out;
}

ContextWindower::ContextWindower(const ContextConfig& ctx) : ctx_(ctx) { ctx_.validate(); }

std::vector<StackedInput> ContextWindower::push(const FeatureFrame& frame) {
  history_.push_back(frame);
  if (static_cast<int>(history_.size()) > ctx_.width()) history_.pop_front();
  const std::int64_t newest = frames_seen_++;
  const std::int64_t center = newest - ctx_.right;
  std::vector<StackedInput> out;
  if (center < ctx_.left || (center - ctx_.left) % ctx_.stride != 0) return out;

  StackedInput in;
  in.values.resize(ctx_.input_dim());
  for (int k = 0; k < ctx_.width(); ++k)
    in.values.segment(k * kMelBins, kMelBins) = history_[k].values;
  in.center_timestamp_ms = history_[ctx_.left].timestamp_ms;
  in.center_frame = center;
  out.push_back(std::move(in));
  return out;
}

void ContextWindower::reset() {
  history_.clear();
  frames_seen_ = 0;
}

}  // namespace kws
