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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kws/labeling.hpp"
#include "kws/model.hpp"

namespace kws {

enum class Recipe { kOneStage, kTwoStage };

std::string_view to_string(Recipe r);
Recipe parse_recipe(std::string_view s);

struct TrainConfig {
  double learning_rate = 0.02;
  double momentum = 0.9;
  int batch_size = 8;  // sequences per step
  int epochs = 10;
  std::uint64_t seed = 1;
  Recipe recipe = Recipe::kOneStage;
  // one_stage only: multiplier on encoder gradients. 0 behaves like a frozen encoder.
  double adaptation_rate = 1.0;
  std::string encoder_init;  // model file whose encoder layers seed this model
  bool freeze_encoder = false;
  double clip_norm = 5.0;  // <= 0 disables clipping
  int truncation = 0;      // BPTT chunk length, 0 = full unroll
  double target_loss = 0.0;  // stop once an epoch's mean loss is below this
  int checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const;
};

/// key = value lines, '#' comments. Unknown keys are rejected.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
std::string to_text(const TrainConfig& config);

struct TrainReport {
  std::vector<double> epoch_losses;  // running per-frame CE during each epoch
  double final_loss = 0.0;           // per-frame CE of the trained model over the dataset
  std::uint32_t checksum = 0;
  double wall_seconds = 0.0;
  int epochs_run = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, TrainReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

/// -log output[c], with the probability floored at 1e-12.
double ce_loss(std::span<const double> output, int c);
double ce_loss(const Eigen::Ref<const VectorF>& output, int c);

/// SGD with classical momentum. Holds one velocity buffer per parameter.
template <typename S>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(const Model<S>& model) : velocity_(model) {}

  /// Frozen layers are untouched. In the one_stage recipe encoder gradients
  /// are scaled by adaptation_rate. Gradients are then clipped to clip_norm
  /// and applied: v <- momentum v + g, w <- w - lr v. Throws
  /// TrainingDiverged on non-finite gradients. `grads` is modified.
  void step(Model<S>& model, Gradients<S>& grads, const TrainConfig& config);

 private:
  Gradients<S> velocity_;
};

/// One sgd_step with a fresh optimizer (no momentum history).
template <typename S>
void sgd_step(Model<S>& model, Gradients<S>& grads, const TrainConfig& config);

/// Lowest layer whose parameters can change under `config`.
int first_trainable_layer(const Model<float>& model, const TrainConfig& config);

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Frame-level cross-entropy training over whole sequences (memory reset at
/// every sequence start). Deterministic for a fixed seed.
TrainReport train(Model<float>& model, const std::vector<LabeledSequence>& dataset,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean per-frame CE over a dataset.
double evaluate_loss(const Model<float>& model, const std::vector<LabeledSequence>& dataset);

struct TwoStageResult {
  Model<float> model;
  TrainReport encoder_report;
  TrainReport decoder_report;
};

/// Stage 1 trains the encoder (ending in its softmax) on subword targets;
/// stage 2 appends the decoder, freezes the encoder and trains on binary
/// targets. The composed model keeps the intermediate softmax.
TwoStageResult train_two_stage(const ModelConfig& encoder, const ModelConfig& decoder,
                               const std::vector<LabeledSequence>& encoder_data,
                               const std::vector<LabeledSequence>& decoder_data,
                               const TrainConfig& encoder_train, const TrainConfig& decoder_train,
                               const EpochCallback& on_epoch = {});

}  // namespace kws
