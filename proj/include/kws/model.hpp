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
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "kws/nnet.hpp"
#include "kws/topology.hpp"

namespace kws {

template <typename S>
using Layer = std::variant<SvdfLayer<S>, DenseLayer<S>, ConvLayer<S>>;

/// Calls f(Eigen::Map<Vector>, role) for every parameter matrix of a layer, in
/// serialization order. Works on const and mutable layers.
template <typename LayerT, typename F>
void for_each_param_block(LayerT& layer, F&& f) {
  auto flat = [](auto& m) {
    using M = std::remove_reference_t<decltype(m)>;
    using Scalar = typename std::remove_const_t<M>::Scalar;
    if constexpr (std::is_const_v<M>)
      return Eigen::Map<const Vector<Scalar>>(m.data(), m.size());
    else
      return Eigen::Map<Vector<Scalar>>(m.data(), m.size());
  };
  std::visit(
      [&](auto& l) {
        if constexpr (requires { l.beta; }) {
          f(flat(l.beta), std::string_view("beta"));
          f(flat(l.alpha), std::string_view("alpha"));
        } else if constexpr (requires { l.weights; }) {
          f(flat(l.weights), std::string_view("weights"));
        } else {
          f(flat(l.filters), std::string_view("filters"));
        }
        if (l.has_bias()) f(flat(l.bias), std::string_view("bias"));
      },
      layer);
}

struct ParamBlockInfo {
  int layer = 0;
  std::string role;
  std::int64_t offset = 0;
  std::int64_t size = 0;
  bool frozen = false;
};

/// A linear layer stack built from a ModelConfig plus per-layer frozen flags.
template <typename S>
class Model {
 public:
  using Scalar = S;

  Model() = default;
  /// All parameters zero.
  explicit Model(ModelConfig config);

  /// Uniform Glorot feature/dense weights, time filters in +-sqrt(3/T), zero
  /// biases; deterministic in `seed`.
  void initialize(std::uint64_t seed);
  static Model initialized(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<Layer<S>>& layers() const { return layers_; }
  std::vector<Layer<S>>& layers() { return layers_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return config_.resolved_input_dim(); }
  int num_classes() const { return config_.num_classes(); }

  std::int64_t num_params() const;
  std::vector<ParamBlockInfo> blocks() const;

  bool is_encoder_layer(int layer) const { return layer < config_.encoder_boundary; }
  bool layer_frozen(int layer) const { return frozen_.at(layer); }
  void set_layer_frozen(int layer, bool frozen) { frozen_.at(layer) = frozen; }
  void freeze_encoder(bool frozen = true);
  const std::vector<bool>& frozen_flags() const { return frozen_; }

  Vector<S> flat_parameters() const;
  void set_flat_parameters(const VectorCRef<S>& values);
  /// Copies layers [first, last) from a model with identical shapes there.
  void copy_layers_from(const Model& other, int first, int last);

  /// Zero-filled layers with this model's shapes, used as a gradient store.
  std::vector<Layer<S>> zero_layers() const;

  template <typename T>
  Model<T> cast() const;

 private:
  template <typename T>
  friend class Model;

  ModelConfig config_;
  std::vector<Layer<S>> layers_;
  std::vector<bool> frozen_;
};

/// Gradient store with the same layout as the model it was made from.
template <typename S>
struct Gradients {
  std::vector<Layer<S>> layers;

  Gradients() = default;
  explicit Gradients(const Model<S>& model) : layers(model.zero_layers()) {}
  void zero();
  Vector<S> flat() const;
  accum_t<S> squared_norm() const;
};

/// Per-layer streaming memory for one detector.
template <typename S>
class NetworkState {
 public:
  NetworkState() = default;
  explicit NetworkState(const Model<S>& model);
  void reset();
  /// Empty for non-SVDF layers.
  std::vector<SvdfState<S>>& layers() { return states_; }
  const std::vector<SvdfState<S>>& layers() const { return states_; }

 private:
  std::vector<SvdfState<S>> states_;
};

template <typename S>
struct StepResult {
  std::vector<Vector<S>> activations;  // output of every layer
  const Vector<S>& output() const { return activations.back(); }
};

/// One streaming inference: every SVDF pushes one entry into its memory.
template <typename S>
StepResult<S> network_forward_step(const Model<S>& model, NetworkState<S>& state,
                                   const VectorCRef<S>& x);

/// Activations of a whole sequence kept for the backward pass.
template <typename S>
struct SequenceCache {
  std::vector<Matrix<S>> inputs;     // input of each layer
  std::vector<Matrix<S>> projected;  // SVDF feature-filter outputs (empty otherwise)
  std::vector<Matrix<S>> pre;        // pre-activations
  std::vector<Matrix<S>> outputs;    // post-activations
  bool valid() const { return !inputs.empty(); }
  void clear();
};

/// Sequence forward from zero state. x is input_dim x L; returns the final
/// softmax output (classes x L). Fills `cache` when non-null.
template <typename S>
Matrix<S> network_forward(const Model<S>& model, const Matrix<S>& x,
                          SequenceCache<S>* cache = nullptr);

struct BackwardOptions {
  int truncation = 0;      // 0 = full unroll
  int stop_layer = 0;      // no gradients below this layer
  double loss_scale = 1.0; // multiplies gradients (e.g. 1 / frames)
};

/// Cross-entropy backward for per-step labels. Accumulates into `grads` and
/// returns the summed (unscaled) loss. Throws PreconditionViolation when the
/// cache is empty.
template <typename S>
double network_backward(const Model<S>& model, const SequenceCache<S>& cache,
                        std::span<const int> labels, Gradients<S>& grads,
                        const BackwardOptions& options = {});

/// Summed cross entropy of a sequence, forward only.
template <typename S>
double sequence_loss(const Model<S>& model, const Matrix<S>& x, std::span<const int> labels);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace kws
