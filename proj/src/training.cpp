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

#include "kws/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "kws/model_io.hpp"

namespace kws {

std::string_view to_string(Recipe r) { return r == Recipe::kOneStage ? "one_stage" : "two_stage"; }

Recipe parse_recipe(std::string_view s) {
  if (s == "one_stage" || s == "1stage") return Recipe::kOneStage;
  if (s == "two_stage" || s == "2stage") return Recipe::kTwoStage;
  throw InvalidArgument("unknown recipe '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw InvalidArgument("momentum must be in [0, 1)");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (adaptation_rate < 0.0 || adaptation_rate > 1.0)
    throw InvalidArgument("adaptation_rate must be in [0, 1]");
  if (truncation < 0) throw InvalidArgument("truncation must be >= 0");
  if (checkpoint_every > 0 && checkpoint_path.empty())
    throw InvalidArgument("checkpoint_every needs checkpoint_path");
}

TrainConfig parse_train_config(std::string_view text, TrainConfig c) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw InvalidArgument("train config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "learning_rate") c.learning_rate = std::stod(value);
      else if (key == "momentum") c.momentum = std::stod(value);
      else if (key == "batch_size") c.batch_size = std::stoi(value);
      else if (key == "epochs") c.epochs = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "recipe") c.recipe = parse_recipe(value);
      else if (key == "adaptation_rate") c.adaptation_rate = std::stod(value);
      else if (key == "encoder_init") c.encoder_init = value;
      else if (key == "freeze_encoder") c.freeze_encoder = value == "1" || value == "true";
      else if (key == "clip_norm") c.clip_norm = std::stod(value);
      else if (key == "truncation") c.truncation = std::stoi(value);
      else if (key == "target_loss") c.target_loss = std::stod(value);
      else if (key == "checkpoint_every") c.checkpoint_every = std::stoi(value);
      else if (key == "checkpoint_path") c.checkpoint_path = value;
      else throw InvalidArgument("train config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidArgument*>(&e)) throw;
      throw InvalidArgument("train config line " + std::to_string(line_no) + ": bad value '" + value + "'");
    }
  }
  c.validate();
  return c;
}

std::string to_text(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "learning_rate = " << c.learning_rate << "\n"
      << "momentum = " << c.momentum << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "epochs = " << c.epochs << "\n"
      << "seed = " << c.seed << "\n"
      << "recipe = " << to_string(c.recipe) << "\n"
      << "adaptation_rate = " << c.adaptation_rate << "\n"
      << "encoder_init = " << c.encoder_init << "\n"
      << "freeze_encoder = " << (c.freeze_encoder ? "true" : "false") << "\n"
      << "clip_norm = " << c.clip_norm << "\n"
      << "truncation = " << c.truncation << "\n"
      << "target_loss = " << c.target_loss << "\n"
      << "checkpoint_every = " << c.checkpoint_every << "\n"
      << "checkpoint_path = " << c.checkpoint_path << "\n";
  return out.str();
}

double ce_loss(std::span<const double> output, int c) {
  if (c < 0 || c >= static_cast<int>(output.size()))
    throw InvalidArgument("class " + std::to_string(c) + " out of range");
  return -std::log(std::max(output[c], kProbabilityFloor));
}

double ce_loss(const Eigen::Ref<const VectorF>& output, int c) {
  const VectorD p = output.cast<double>();
  return ce_loss(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), c);
}

namespace {

template <typename S>
std::vector<Eigen::Map<Vector<S>>> block_maps(Layer<S>& layer) {
  std::vector<Eigen::Map<Vector<S>>> out;
  for_each_param_block(layer, [&](auto block, std::string_view) { out.push_back(block); });
  return out;
}

}  // namespace

template <typename S>
void SgdOptimizer<S>::step(Model<S>& model, Gradients<S>& grads, const TrainConfig& config) {
  const bool adapt = config.recipe == Recipe::kOneStage && config.adaptation_rate != 1.0;
  for (int i = 0; i < model.num_layers(); ++i) {
    const bool frozen = model.layer_frozen(i) || (config.freeze_encoder && model.is_encoder_layer(i));
    for (auto& g : block_maps(grads.layers[i])) {
      if (frozen)
        g.setZero();
      else if (adapt && model.is_encoder_layer(i))
        g *= static_cast<S>(config.adaptation_rate);
    }
  }
  const double norm = std::sqrt(static_cast<double>(grads.squared_norm()));
  if (!std::isfinite(norm)) throw TrainingDiverged("non-finite gradient", {});
  if (config.clip_norm > 0.0 && norm > config.clip_norm) {
    const S scale = static_cast<S>(config.clip_norm / norm);
    for (auto& layer : grads.layers)
      for (auto& g : block_maps(layer)) g *= scale;
  }
  const S lr = static_cast<S>(config.learning_rate);
  const S mu = static_cast<S>(config.momentum);
  for (int i = 0; i < model.num_layers(); ++i) {
    if (model.layer_frozen(i) || (config.freeze_encoder && model.is_encoder_layer(i))) continue;
    auto params = block_maps(model.layers()[i]);
    auto g = block_maps(grads.layers[i]);
    auto v = block_maps(velocity_.layers[i]);
    for (std::size_t b = 0; b < params.size(); ++b) {
      v[b] = mu * v[b] + g[b];
      params[b] -= lr * v[b];
    }
  }
}

template <typename S>
void sgd_step(Model<S>& model, Gradients<S>& grads, const TrainConfig& config) {
  SgdOptimizer<S>(model).step(model, grads, config);
}

template class SgdOptimizer<float>;
template class SgdOptimizer<double>;
template void sgd_step(Model<float>&, Gradients<float>&, const TrainConfig&);
template void sgd_step(Model<double>&, Gradients<double>&, const TrainConfig&);

int first_trainable_layer(const Model<float>& model, const TrainConfig& config) {
  for (int i = 0; i < model.num_layers(); ++i) {
    if (model.layer_frozen(i)) continue;
    if (model.is_encoder_layer(i)) {
      if (config.freeze_encoder) continue;
      if (config.recipe == Recipe::kOneStage && config.adaptation_rate == 0.0) continue;
    }
    return i;
  }
  return model.num_layers();
}

double evaluate_loss(const Model<float>& model, const std::vector<LabeledSequence>& dataset) {
  double loss = 0.0;
  std::size_t frames = 0;
  for (const auto& seq : dataset) {
    if (seq.labels.empty()) continue;
    loss += sequence_loss(model, seq.inputs, seq.labels);
    frames += seq.labels.size();
  }
  return frames == 0 ? 0.0 : loss / static_cast<double>(frames);
}

namespace {

void check_dataset(const Model<float>& model, const std::vector<LabeledSequence>& dataset) {
  if (dataset.empty()) throw InvalidArgument("training dataset is empty");
  for (const auto& seq : dataset) {
    if (seq.inputs.rows() != model.input_dim())
      throw InvalidArgument(seq.id + ": input dimension " + std::to_string(seq.inputs.rows()) +
                            " does not match the model (" + std::to_string(model.input_dim()) + ")");
    if (static_cast<std::size_t>(seq.inputs.cols()) != seq.labels.size())
      throw InvalidArgument(seq.id + ": label count differs from input count");
    for (int c : seq.labels)
      if (c < 0 || c >= model.num_classes())
        throw InvalidArgument(seq.id + ": label " + std::to_string(c) + " out of range");
  }
}

}  // namespace

TrainReport train(Model<float>& model, const std::vector<LabeledSequence>& dataset,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_dataset(model, dataset);
  const auto started = std::chrono::steady_clock::now();

  if (!config.encoder_init.empty()) {
    const Model<float> source = load_model(config.encoder_init);
    model.copy_layers_from(source, 0, model.config().encoder_boundary);
  }
  if (config.freeze_encoder) model.freeze_encoder(true);

  TrainReport report;
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  SgdOptimizer<float> optimizer(model);
  Gradients<float> grads(model);
  SequenceCache<float> cache;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  BackwardOptions backward;
  backward.truncation = config.truncation;
  backward.stop_layer = first_trainable_layer(model, config);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_frames = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t frames = 0;
      for (std::size_t k = start; k < end; ++k) frames += dataset[order[k]].labels.size();
      if (frames == 0) continue;
      grads.zero();
      backward.loss_scale = 1.0 / static_cast<double>(frames);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& seq = dataset[order[k]];
        if (seq.labels.empty()) continue;
        network_forward(model, seq.inputs, &cache);
        batch_loss += network_backward(model, cache, seq.labels, grads, backward);
      }
      if (!std::isfinite(batch_loss)) {
        report.wall_seconds = elapsed();
        throw TrainingDiverged("non-finite loss in epoch " + std::to_string(epoch + 1), report);
      }
      try {
        optimizer.step(model, grads, config);
      } catch (const TrainingDiverged& e) {
        report.wall_seconds = elapsed();
        throw TrainingDiverged(std::string(e.what()) + " in epoch " + std::to_string(epoch + 1), report);
      }
      epoch_loss += batch_loss;
      epoch_frames += frames;
    }
    const double mean = epoch_frames ? epoch_loss / static_cast<double>(epoch_frames) : 0.0;
    report.epoch_losses.push_back(mean);
    report.epochs_run = epoch + 1;
    if (on_epoch) on_epoch(epoch + 1, mean);
    if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0)
      save_model(model, config.checkpoint_path);
    if (config.target_loss > 0.0 && mean < config.target_loss &&
        evaluate_loss(model, dataset) < config.target_loss)
      break;
  }

  report.final_loss = evaluate_loss(model, dataset);
  if (!std::isfinite(report.final_loss)) {
    report.wall_seconds = elapsed();
    throw TrainingDiverged("non-finite loss after training", report);
  }
  report.checksum = parameter_checksum(model);
  report.wall_seconds = elapsed();
  return report;
}

TwoStageResult train_two_stage(const ModelConfig& encoder, const ModelConfig& decoder,
                               const std::vector<LabeledSequence>& encoder_data,
                               const std::vector<LabeledSequence>& decoder_data,
                               const TrainConfig& encoder_train, const TrainConfig& decoder_train,
                               const EpochCallback& on_epoch) {
  const ModelConfig full = compose(encoder, decoder);

  Model<float> enc = Model<float>::initialized(encoder, encoder_train.seed);
  TrainConfig stage1 = encoder_train;
  stage1.freeze_encoder = false;
  stage1.encoder_init.clear();
  TwoStageResult result{Model<float>::initialized(full, decoder_train.seed), {}, {}};
  result.encoder_report = train(enc, encoder_data, stage1, on_epoch);

  result.model.copy_layers_from(enc, 0, enc.num_layers());
  result.model.freeze_encoder(true);
  TrainConfig stage2 = decoder_train;
  stage2.recipe = Recipe::kTwoStage;
  stage2.freeze_encoder = true;
  stage2.encoder_init.clear();
  result.decoder_report = train(result.model, decoder_data, stage2, on_epoch);
  return result;
}

}  // namespace kws
