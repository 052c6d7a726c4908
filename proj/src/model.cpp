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

#include "kws/model.hpp"

#include <cmath>
#include <random>

namespace kws {

template <typename S>
Model<S>::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto shapes = config_.shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const LayerSpec& spec = config_.layers[i];
    const LayerShape& shape = shapes[i];
    switch (spec.kind) {
      case LayerKind::kSvdf:
        layers_.emplace_back(SvdfLayer<S>(spec.units, spec.memory, shape.input_dim,
                                          spec.activation, spec.bias));
        break;
      case LayerKind::kBottleneck:
        layers_.emplace_back(
            DenseLayer<S>(spec.units, shape.input_dim, Activation::kIdentity, spec.bias));
        break;
      case LayerKind::kDense:
        layers_.emplace_back(DenseLayer<S>(spec.units, shape.input_dim, spec.activation, spec.bias));
        break;
      case LayerKind::kSoftmax:
        layers_.emplace_back(DenseLayer<S>(spec.units, shape.input_dim, Activation::kSoftmax, true));
        break;
      case LayerKind::kConv: {
        ConvGeometry g;
        g.grid_time = shape.grid_time;
        g.grid_freq = shape.grid_freq;
        g.kernel_time = spec.kernel_time;
        g.kernel_freq = spec.kernel_freq;
        g.stride_time = spec.stride_time;
        g.stride_freq = spec.stride_freq;
        layers_.emplace_back(ConvLayer<S>(spec.units, g, spec.bias));
        break;
      }
    }
  }
  frozen_.assign(layers_.size(), false);
}

template <typename S>
void Model<S>::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&rng](auto& m, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(dist(rng));
  };
  for (auto& layer : layers_) {
    std::visit(
        [&](auto& l) {
          if constexpr (requires { l.beta; }) {
            fill(l.beta, std::sqrt(6.0 / (l.input_dim() + l.nodes())));
            fill(l.alpha, std::sqrt(3.0 / l.memory()));
          } else if constexpr (requires { l.weights; }) {
            fill(l.weights, std::sqrt(6.0 / (l.input_dim() + l.output_dim())));
          } else {
            fill(l.filters, std::sqrt(6.0 / (l.geometry.patch_size() + l.num_filters())));
          }
          l.bias.setZero();
        },
        layer);
  }
}

template <typename S>
Model<S> Model<S>::initialized(ModelConfig config, std::uint64_t seed) {
  Model m(std::move(config));
  m.initialize(seed);
  return m;
}

template <typename S>
std::int64_t Model<S>::num_params() const {
  std::int64_t n = 0;
  for (const auto& layer : layers_)
    for_each_param_block(layer, [&](const auto& block, std::string_view) { n += block.size(); });
  return n;
}

template <typename S>
std::vector<ParamBlockInfo> Model<S>::blocks() const {
  std::vector<ParamBlockInfo> out;
  std::int64_t offset = 0;
  for (int i = 0; i < num_layers(); ++i)
    for_each_param_block(layers_[i], [&](const auto& block, std::string_view role) {
      out.push_back({i, std::string(role), offset, block.size(), frozen_[i]});
      offset += block.size();
    });
  return out;
}

template <typename S>
void Model<S>::freeze_encoder(bool frozen) {
  for (int i = 0; i < config_.encoder_boundary; ++i) frozen_[i] = frozen;
}

template <typename S>
Vector<S> Model<S>::flat_parameters() const {
  Vector<S> out(num_params());
  Eigen::Index offset = 0;
  for (const auto& layer : layers_)
    for_each_param_block(layer, [&](const auto& block, std::string_view) {
      out.segment(offset, block.size()) = block;
      offset += block.size();
    });
  return out;
}

template <typename S>
void Model<S>::set_flat_parameters(const VectorCRef<S>& values) {
  if (values.size() != num_params())
    throw InvalidArgument("parameter vector has " + std::to_string(values.size()) +
                          " entries, model has " + std::to_string(num_params()));
  Eigen::Index offset = 0;
  for (auto& layer : layers_)
    for_each_param_block(layer, [&](auto block, std::string_view) {
      block = values.segment(offset, block.size());
      offset += block.size();
    });
}

template <typename S>
void Model<S>::copy_layers_from(const Model& other, int first, int last) {
  if (first < 0 || last > num_layers() || last > other.num_layers())
    throw InvalidArgument("layer range outside the model");
  for (int i = first; i < last; ++i) {
    if (config_.layers[i] != other.config_.layers[i] ||
        config_.shapes()[i].input_dim != other.config_.shapes()[i].input_dim)
      throw ConfigError("layer " + std::to_string(i) + " differs between models");
    layers_[i] = other.layers_[i];
  }
}

template <typename S>
std::vector<Layer<S>> Model<S>::zero_layers() const {
  std::vector<Layer<S>> out = layers_;
  for (auto& layer : out)
    for_each_param_block(layer, [](auto block, std::string_view) { block.setZero(); });
  return out;
}

template <typename S>
template <typename T>
Model<T> Model<S>::cast() const {
  Model<T> out(config_);
  out.set_flat_parameters(flat_parameters().template cast<T>());
  out.frozen_ = frozen_;
  return out;
}

template <typename S>
void Gradients<S>::zero() {
  for (auto& layer : layers)
    for_each_param_block(layer, [](auto block, std::string_view) { block.setZero(); });
}

template <typename S>
Vector<S> Gradients<S>::flat() const {
  std::int64_t n = 0;
  for (const auto& layer : layers)
    for_each_param_block(layer, [&](const auto& b, std::string_view) { n += b.size(); });
  Vector<S> out(n);
  Eigen::Index offset = 0;
  for (const auto& layer : layers)
    for_each_param_block(layer, [&](const auto& b, std::string_view) {
      out.segment(offset, b.size()) = b;
      offset += b.size();
    });
  return out;
}

template <typename S>
accum_t<S> Gradients<S>::squared_norm() const {
  accum_t<S> total = 0;
  for (const auto& layer : layers)
    for_each_param_block(layer, [&](const auto& b, std::string_view) {
      total += b.template cast<accum_t<S>>().squaredNorm();
    });
  return total;
}

template <typename S>
NetworkState<S>::NetworkState(const Model<S>& model) {
  for (const auto& layer : model.layers()) {
    if (const auto* svdf = std::get_if<SvdfLayer<S>>(&layer))
      states_.emplace_back(*svdf);
    else
      states_.emplace_back();
  }
}

template <typename S>
void NetworkState<S>::reset() {
  for (auto& s : states_) s.reset();
}

template <typename S>
StepResult<S> network_forward_step(const Model<S>& model, NetworkState<S>& state,
                                   const VectorCRef<S>& x) {
  if (x.size() != model.input_dim())
    throw InvalidArgument("input has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.input_dim()));
  if (static_cast<int>(state.layers().size()) != model.num_layers())
    throw InvalidArgument("network state does not belong to this model");
  StepResult<S> result;
  Vector<S> current = x;
  for (int i = 0; i < model.num_layers(); ++i) {
    current = std::visit(
        [&](const auto& l) -> Vector<S> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, SvdfLayer<S>>) {
            return svdf_forward_stream(l, state.layers()[i], current);
          } else if constexpr (std::is_same_v<L, DenseLayer<S>>) {
            return dense_forward(l, current);
          } else {
            Matrix<S> pre;
            return conv_sequence_forward(l, Matrix<S>(current), pre).col(0);
          }
        },
        model.layers()[i]);
    result.activations.push_back(current);
  }
  return result;
}

template <typename S>
void SequenceCache<S>::clear() {
  inputs.clear();
  projected.clear();
  pre.clear();
  outputs.clear();
}

template <typename S>
Matrix<S> network_forward(const Model<S>& model, const Matrix<S>& x, SequenceCache<S>* cache) {
  if (x.rows() != model.input_dim())
    throw InvalidArgument("input has dimension " + std::to_string(x.rows()) + ", model expects " +
                          std::to_string(model.input_dim()));
  if (cache) cache->clear();
  Matrix<S> current = x;
  for (int i = 0; i < model.num_layers(); ++i) {
    Matrix<S> projected, pre;
    Matrix<S> out = std::visit(
        [&](const auto& l) -> Matrix<S> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, SvdfLayer<S>>)
            return svdf_sequence_forward(l, current, projected, pre);
          else if constexpr (std::is_same_v<L, DenseLayer<S>>)
            return dense_sequence_forward(l, current, pre);
          else
            return conv_sequence_forward(l, current, pre);
        },
        model.layers()[i]);
    if (cache) {
      cache->inputs.push_back(std::move(current));
      cache->projected.push_back(std::move(projected));
      cache->pre.push_back(std::move(pre));
      cache->outputs.push_back(out);
    }
    current = std::move(out);
  }
  return current;
}

template <typename S>
double network_backward(const Model<S>& model, const SequenceCache<S>& cache,
                        std::span<const int> labels, Gradients<S>& grads,
                        const BackwardOptions& options) {
  if (!cache.valid()) throw PreconditionViolation("network_backward called without a forward cache");
  if (static_cast<int>(cache.inputs.size()) != model.num_layers())
    throw PreconditionViolation("forward cache does not match the model");
  if (static_cast<int>(grads.layers.size()) != model.num_layers())
    throw InvalidArgument("gradient store does not match the model");
  const Matrix<S>& y = cache.outputs.back();
  if (static_cast<Eigen::Index>(labels.size()) != y.cols())
    throw InvalidArgument("label count " + std::to_string(labels.size()) +
                          " differs from sequence length " + std::to_string(y.cols()));

  double loss = 0.0;
  Matrix<S> grad = y;
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    const int c = labels[t];
    if (c < 0 || c >= y.rows()) throw InvalidArgument("label " + std::to_string(c) + " out of range");
    loss -= std::log(std::max(static_cast<double>(y(c, t)), kProbabilityFloor));
    grad(c, t) -= S(1);
  }
  grad *= static_cast<S>(options.loss_scale);

  const int last = model.num_layers() - 1;
  for (int i = last; i >= options.stop_layer; --i) {
    grad = std::visit(
        [&](const auto& l) -> Matrix<S> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, SvdfLayer<S>>) {
            return svdf_sequence_backward(l, cache.inputs[i], cache.projected[i], cache.pre[i],
                                          std::move(grad), std::get<L>(grads.layers[i]),
                                          options.truncation);
          } else if constexpr (std::is_same_v<L, DenseLayer<S>>) {
            Matrix<S> dpre;
            if (i == last)
              dpre = std::move(grad);  // fused softmax + cross entropy
            else if (l.activation == Activation::kSoftmax)
              dpre = softmax_backward(grad, cache.outputs[i]);
            else {
              dpre = std::move(grad);
              activation_backward(dpre, cache.pre[i], l.activation);
            }
            return dense_sequence_backward(l, cache.inputs[i], dpre, std::get<L>(grads.layers[i]));
          } else {
            return conv_sequence_backward(l, cache.inputs[i], cache.pre[i], std::move(grad),
                                          std::get<L>(grads.layers[i]));
          }
        },
        model.layers()[i]);
  }
  return loss;
}

template <typename S>
double sequence_loss(const Model<S>& model, const Matrix<S>& x, std::span<const int> labels) {
  const Matrix<S> y = network_forward(model, x);
  if (static_cast<Eigen::Index>(labels.size()) != y.cols())
    throw InvalidArgument("label count differs from sequence length");
  double loss = 0.0;
  for (Eigen::Index t = 0; t < y.cols(); ++t)
    loss -= std::log(std::max(static_cast<double>(y(labels[t], t)), kProbabilityFloor));
  return loss;
}

#define KWS_INSTANTIATE_MODEL(S)                                                               \
  template class Model<S>;                                                                     \
  template struct Gradients<S>;                                                                \
  template class NetworkState<S>;                                                              \
  template struct SequenceCache<S>;                                                            \
  template StepResult<S> network_forward_step(const Model<S>&, NetworkState<S>&,               \
                                              const VectorCRef<S>&);             \
  template Matrix<S> network_forward(const Model<S>&, const Matrix<S>&, SequenceCache<S>*);    \
  template double network_backward(const Model<S>&, const SequenceCache<S>&,                   \
                                   std::span<const int>, Gradients<S>&, const BackwardOptions&); \
  template double sequence_loss(const Model<S>&, const Matrix<S>&, std::span<const int>);

KWS_INSTANTIATE_MODEL(float)
KWS_INSTANTIATE_MODEL(double)

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace kws
