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
#include <string>
#include <string_view>
#include <vector>

#include "kws/common.hpp"
#include "kws/frontend.hpp"

namespace kws {

enum class Activation { kIdentity, kRelu, kSoftmax };

enum class LayerKind { kSvdf, kBottleneck, kDense, kSoftmax, kConv };

std::string_view to_string(Activation a);
std::string_view to_string(LayerKind k);

/// One entry of a linear layer stack.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int units = 0;   // SVDF nodes, dense outputs, softmax classes or conv filters
  int memory = 1;  // SVDF time-filter length
  Activation activation = Activation::kRelu;
  bool bias = true;
  int kernel_time = 8, kernel_freq = 8;
  int stride_time = 8, stride_freq = 8;

  static LayerSpec svdf(int nodes, int memory, Activation act = Activation::kRelu,
                        bool bias = true);
  static LayerSpec bottleneck(int size, bool bias = true);
  static LayerSpec dense(int size, Activation act = Activation::kRelu, bool bias = true);
  static LayerSpec softmax(int classes);
  static LayerSpec conv(int filters, int kernel_time = 8, int kernel_freq = 8,
                        int stride_time = 8, int stride_freq = 8, bool bias = true);

  bool operator==(const LayerSpec&) const = default;
};

/// Resolved dimensions of a layer inside a config.
struct LayerShape {
  int input_dim = 0;
  int output_dim = 0;
  // Conv only: input grid (time x freq) and output positions.
  int grid_time = 0, grid_freq = 0;
  int out_time = 0, out_freq = 0;
};

struct ModelConfig {
  std::string name;
  ContextConfig context;
  // Explicit input width; 0 means 40 x context width. Decoder-only configs
  // that consume encoder posteriors set this.
  int input_dim = 0;
  std::vector<LayerSpec> layers;
  // Layers [0, encoder_boundary) form the encoder. When the encoder ends in a
  // softmax it is the intermediate softmax used by two-stage training.
  int encoder_boundary = 0;

  int resolved_input_dim() const;
  bool intermediate_softmax() const;
  int num_classes() const;
  /// Throws ConfigError on any structural problem.
  void validate() const;
  std::vector<LayerShape> shapes() const;

  bool operator==(const ModelConfig&) const = default;
};

/// E2E_700K, E2E_318K, E2E_40K or Baseline_1850K.
ModelConfig builtin_config(std::string_view name);
std::vector<std::string> builtin_config_names();

/// Inserts a softmax{classes} at the encoder boundary.
ModelConfig with_intermediate_softmax(const ModelConfig& config, int classes = 9);
/// Encoder layers plus their softmax, as trained in the first stage.
ModelConfig encoder_config(const ModelConfig& config, int classes = 9);
/// Layers after the encoder, fed by `input_dim` encoder posteriors.
ModelConfig decoder_config(const ModelConfig& config, int input_dim = 9);
/// Encoder (ending in softmax) followed by decoder. Throws ConfigError if the
/// decoder does not accept the encoder's class count.
ModelConfig compose(const ModelConfig& encoder, const ModelConfig& decoder);

std::int64_t count_params(const ModelConfig& config);
std::int64_t count_bias_params(const ModelConfig& config);

enum class MacConvention { kPerInference, kPer10msFrame };
/// Multiply-accumulates excluding bias adds and softmax exponentials.
/// kPer10msFrame amortizes one inference over its stride, rounded to nearest.
std::int64_t count_macs(const ModelConfig& config, MacConvention convention);

struct ReceptiveField {
  int inference_steps = 0;      // sum over SVDF layers of (T - 1)
  int left_context_frames = 0;  // C_l of the stacked input
  int milliseconds = 0;         // inference_steps x stride x 10 ms
};
ReceptiveField receptive_field(const ModelConfig& config);

/// Canonical text form; parse_config_text(to_text(c)) == c.
std::string to_text(const ModelConfig& config);
ModelConfig parse_config_text(std::string_view text);
/// Builtin name or path to a config text file.
ModelConfig load_config(const std::string& name_or_path);

}  // namespace kws
