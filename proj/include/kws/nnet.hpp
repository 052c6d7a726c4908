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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kws/common.hpp"
#include "kws/topology.hpp"

namespace kws {

// ---------------------------------------------------------------------------
// Activations

template <typename Derived>
void apply_activation(Eigen::MatrixBase<Derived>& z, Activation act) {
  using S = typename Derived::Scalar;
  switch (act) {
    case Activation::kIdentity: break;
    case Activation::kRelu: z = z.cwiseMax(S(0)); break;
    case Activation::kSoftmax:
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        auto col = z.col(c);
        const S peak = col.maxCoeff();
        col = (col.array() - peak).exp().matrix();
        col /= col.sum();
      }
      break;
  }
}

/// In-place backward of an elementwise activation given its pre-activation.
template <typename S>
void activation_backward(Matrix<S>& grad, const Matrix<S>& pre, Activation act) {
  if (act == Activation::kRelu)
    grad = (pre.array() > S(0)).select(grad, S(0));
  else if (act == Activation::kSoftmax)
    throw PreconditionViolation("softmax backward needs its output, use softmax_backward");
}

/// d loss / d z for y = softmax(z), given d loss / d y (column-wise).
template <typename S>
Matrix<S> softmax_backward(const Matrix<S>& grad_out, const Matrix<S>& y) {
  const RowVector<S> dots = (grad_out.array() * y.array()).colwise().sum();
  return (y.array() * (grad_out.rowwise() - dots).array()).matrix();
}

// ---------------------------------------------------------------------------
// Rank-1 SVDF

/// N nodes, each with a feature filter over F inputs and a time filter over
/// the last T feature-filter outputs.
template <typename S>
struct SvdfLayer {
  Matrix<S> beta;   // N x F
  Matrix<S> alpha;  // N x T; column T-1 weights the newest entry
  Vector<S> bias;   // N, or empty
  Activation activation = Activation::kRelu;

  SvdfLayer() = default;
  SvdfLayer(int nodes, int memory, int input_dim, Activation act = Activation::kRelu,
            bool with_bias = true)
      : beta(Matrix<S>::Zero(nodes, input_dim)),
        alpha(Matrix<S>::Zero(nodes, memory)),
        bias(with_bias ? Vector<S>::Zero(nodes) : Vector<S>()),
        activation(act) {
    if (nodes < 1 || memory < 1 || input_dim < 1)
      throw InvalidArgument("SVDF layer needs N, T, F >= 1");
  }

  int nodes() const { return static_cast<int>(beta.rows()); }
  int memory() const { return static_cast<int>(alpha.cols()); }
  int input_dim() const { return static_cast<int>(beta.cols()); }
  bool has_bias() const { return bias.size() > 0; }
};

/// Per-layer memory of past feature-filter outputs. Entries that were never
/// written stay exactly zero.
template <typename S>
class SvdfState {
 public:
  using Acc = accum_t<S>;

  SvdfState() = default;
  SvdfState(int nodes, int memory) : buffer_(Matrix<Acc>::Zero(nodes, memory)) {}
  explicit SvdfState(const SvdfLayer<S>& layer) : SvdfState(layer.nodes(), layer.memory()) {}

  void reset() {
    buffer_.setZero();
    head_ = 0;
    fill_count_ = 0;
  }

  /// Evicts the oldest entry of every node.
  void push(const Vector<Acc>& projected) {
    buffer_.col(head_) = projected;
    head_ = (head_ + 1) % memory();
    ++fill_count_;
  }

  /// age 0 is the oldest entry, memory()-1 the newest.
  Acc entry(int node, int age) const { return buffer_(node, (head_ + age) % memory()); }

  int nodes() const { return static_cast<int>(buffer_.rows()); }
  int memory() const { return static_cast<int>(buffer_.cols()); }
  std::int64_t fill_count() const { return fill_count_; }

 private:
  Matrix<Acc> buffer_;
  int head_ = 0;
  std::int64_t fill_count_ = 0;
};

template <typename S>
Vector<S> svdf_forward_stream(const SvdfLayer<S>& layer, SvdfState<S>& state,
                              const VectorCRef<S>& x) {
  using Acc = accum_t<S>;
  if (x.size() != layer.input_dim())
    throw InvalidArgument("SVDF input has dimension " + std::to_string(x.size()) +
                          ", layer expects " + std::to_string(layer.input_dim()));
  if (state.nodes() != layer.nodes() || state.memory() != layer.memory())
    throw InvalidArgument("SVDF state does not belong to this layer");

  const int n = layer.nodes(), t = layer.memory();
  const Vector<Acc> xa = x.template cast<Acc>();
  Vector<Acc> projected(n);
  for (int m = 0; m < n; ++m) projected[m] = layer.beta.row(m).template cast<Acc>().dot(xa);
  state.push(projected);

  Vector<S> out(n);
  for (int m = 0; m < n; ++m) {
    Acc acc = layer.has_bias() ? Acc(layer.bias[m]) : Acc(0);
    for (int i = 0; i < t; ++i) acc += Acc(layer.alpha(m, i)) * state.entry(m, i);
    out[m] = static_cast<S>(acc);
  }
  apply_activation(out, layer.activation);
  return out;
}

/// Direct evaluation of the SVDF sum at every step, recomputing every
/// feature-filter product; inputs before the sequence start count as zero.
template <typename S>
std::vector<Vector<S>> svdf_forward_batch(const SvdfLayer<S>& layer,
                                          const std::vector<Vector<S>>& inputs) {
  using Acc = accum_t<S>;
  const int n = layer.nodes(), t_mem = layer.memory(), f = layer.input_dim();
  for (const auto& x : inputs)
    if (x.size() != f) throw InvalidArgument("SVDF batch input has wrong dimension");

  std::vector<Vector<S>> out;
  out.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Vector<S> a(n);
    for (int m = 0; m < n; ++m) {
      Acc acc = layer.has_bias() ? Acc(layer.bias[m]) : Acc(0);
      for (int i = 0; i < t_mem; ++i) {
        const auto src = static_cast<std::int64_t>(t) - t_mem + 1 + i;
        if (src < 0) continue;
        Acc inner = 0;
        for (int j = 0; j < f; ++j) inner += Acc(layer.beta(m, j)) * Acc(inputs[src][j]);
        acc += Acc(layer.alpha(m, i)) * inner;
      }
      a[m] = static_cast<S>(acc);
    }
    apply_activation(a, layer.activation);
    out.push_back(std::move(a));
  }
  return out;
}

/// Whole-sequence forward (columns are time steps) from a zero state.
/// Fills the projections P = beta X and pre-activations Z; returns f(Z).
template <typename S>
Matrix<S> svdf_sequence_forward(const SvdfLayer<S>& layer, const Matrix<S>& x,
                                Matrix<S>& projected, Matrix<S>& pre) {
  if (x.rows() != layer.input_dim()) throw InvalidArgument("SVDF sequence input has wrong dimension");
  const Eigen::Index len = x.cols();
  const int t_mem = layer.memory();
  projected.noalias() = layer.beta * x;
  pre.setZero(layer.nodes(), len);
  for (int i = 0; i < t_mem; ++i) {
    const Eigen::Index shift = t_mem - 1 - i;
    if (shift >= len) continue;
    pre.rightCols(len - shift).array() +=
        projected.leftCols(len - shift).array().colwise() * layer.alpha.col(i).array();
  }
  if (layer.has_bias()) pre.colwise() += layer.bias;
  Matrix<S> out = pre;
  apply_activation(out, layer.activation);
  return out;
}

/// Backward through the full unrolled sequence. With truncation > 0 the
/// gradient through the memory stops at chunk boundaries of that length.
/// Accumulates into `grad` and returns d loss / d x.
template <typename S>
Matrix<S> svdf_sequence_backward(const SvdfLayer<S>& layer, const Matrix<S>& x,
                                 const Matrix<S>& projected, const Matrix<S>& pre,
                                 Matrix<S> grad_out, SvdfLayer<S>& grad, int truncation = 0) {
  const Eigen::Index len = x.cols();
  const int t_mem = layer.memory();
  activation_backward(grad_out, pre, layer.activation);
  const Matrix<S>& dz = grad_out;
  if (layer.has_bias()) grad.bias += dz.rowwise().sum();

  Matrix<S> dproj = Matrix<S>::Zero(layer.nodes(), len);
  const Eigen::Index chunk = truncation > 0 ? truncation : std::max<Eigen::Index>(len, 1);
  for (int i = 0; i < t_mem; ++i) {
    const Eigen::Index shift = t_mem - 1 - i;
    if (shift >= len) continue;
    grad.alpha.col(i) += (dz.rightCols(len - shift).array() *
                          projected.leftCols(len - shift).array())
                             .rowwise()
                             .sum()
                             .matrix();
    for (Eigen::Index c0 = 0; c0 < len; c0 += chunk) {
      const Eigen::Index c1 = std::min(len, c0 + chunk);
      const Eigen::Index n = c1 - c0 - shift;
      if (n <= 0) continue;
      dproj.middleCols(c0, n).array() +=
          dz.middleCols(c0 + shift, n).array().colwise() * layer.alpha.col(i).array();
    }
  }
  grad.beta.noalias() += dproj * x.transpose();
  return layer.beta.transpose() * dproj;
}

// ---------------------------------------------------------------------------
// Dense (fully connected, bottleneck, softmax)

template <typename S>
struct DenseLayer {
  Matrix<S> weights;  // out x in
  Vector<S> bias;     // out, or empty
  Activation activation = Activation::kRelu;

  DenseLayer() = default;
  DenseLayer(int out, int in, Activation act, bool with_bias = true)
      : weights(Matrix<S>::Zero(out, in)),
        bias(with_bias ? Vector<S>::Zero(out) : Vector<S>()),
        activation(act) {}

  int output_dim() const { return static_cast<int>(weights.rows()); }
  int input_dim() const { return static_cast<int>(weights.cols()); }
  bool has_bias() const { return bias.size() > 0; }
};

template <typename S>
Vector<S> dense_forward(const DenseLayer<S>& layer, const VectorCRef<S>& x) {
  using Acc = accum_t<S>;
  if (x.size() != layer.input_dim()) throw InvalidArgument("dense input has wrong dimension");
  const Vector<Acc> xa = x.template cast<Acc>();
  Vector<S> z(layer.output_dim());
  for (int o = 0; o < layer.output_dim(); ++o) {
    Acc acc = layer.has_bias() ? Acc(layer.bias[o]) : Acc(0);
    acc += layer.weights.row(o).template cast<Acc>().dot(xa);
    z[o] = static_cast<S>(acc);
  }
  apply_activation(z, layer.activation);
  return z;
}

template <typename S>
Matrix<S> dense_sequence_forward(const DenseLayer<S>& layer, const Matrix<S>& x, Matrix<S>& pre) {
  if (x.rows() != layer.input_dim()) throw InvalidArgument("dense input has wrong dimension");
  pre.noalias() = layer.weights * x;
  if (layer.has_bias()) pre.colwise() += layer.bias;
  Matrix<S> out = pre;
  apply_activation(out, layer.activation);
  return out;
}

/// `grad_pre` is d loss / d pre-activation.
template <typename S>
Matrix<S> dense_sequence_backward(const DenseLayer<S>& layer, const Matrix<S>& x,
                                  const Matrix<S>& grad_pre, DenseLayer<S>& grad) {
  grad.weights.noalias() += grad_pre * x.transpose();
  if (layer.has_bias()) grad.bias += grad_pre.rowwise().sum();
  return layer.weights.transpose() * grad_pre;
}

// ---------------------------------------------------------------------------
// Strided 2-D patch convolution over a (time x freq) grid, "1-D" in the sense
// that filters slide over non-overlapping tiles.

struct ConvGeometry {
  int grid_time = 0, grid_freq = 0;
  int kernel_time = 8, kernel_freq = 8;
  int stride_time = 8, stride_freq = 8;

  int out_time() const { return (grid_time - kernel_time) / stride_time + 1; }
  int out_freq() const { return (grid_freq - kernel_freq) / stride_freq + 1; }
  int patch_size() const { return kernel_time * kernel_freq; }
  int input_dim() const { return grid_time * grid_freq; }
  void validate() const {
    if (kernel_time < 1 || kernel_freq < 1 || stride_time < 1 || stride_freq < 1)
      throw InvalidArgument("conv kernel and stride must be positive");
    if (grid_time < kernel_time || grid_freq < kernel_freq)
      throw InvalidArgument("conv input grid " + std::to_string(grid_time) + "x" +
                            std::to_string(grid_freq) + " smaller than kernel");
  }
};

template <typename S>
struct ConvLayer {
  Matrix<S> filters;  // K x (kernel_time * kernel_freq), patch index dt * kernel_freq + df
  Vector<S> bias;     // K, or empty
  ConvGeometry geometry;

  ConvLayer() = default;
  ConvLayer(int num_filters, const ConvGeometry& geom, bool with_bias = true)
      : filters(Matrix<S>::Zero(num_filters, geom.patch_size())),
        bias(with_bias ? Vector<S>::Zero(num_filters) : Vector<S>()),
        geometry(geom) {
    geometry.validate();
  }

  int num_filters() const { return static_cast<int>(filters.rows()); }
  bool has_bias() const { return bias.size() > 0; }
  int output_dim() const { return geometry.out_time() * geometry.out_freq() * num_filters(); }
};

namespace detail {

/// Gathers the patch at output position (tp, fp) for every column of x.
template <typename S>
Matrix<S> gather_patch(const ConvGeometry& g, const Matrix<S>& x, int tp, int fp) {
  Matrix<S> patch(g.patch_size(), x.cols());
  for (int dt = 0; dt < g.kernel_time; ++dt) {
    const Eigen::Index row = static_cast<Eigen::Index>(tp * g.stride_time + dt) * g.grid_freq +
                             fp * g.stride_freq;
    patch.middleRows(dt * g.kernel_freq, g.kernel_freq) = x.middleRows(row, g.kernel_freq);
  }
  return patch;
}

}  // namespace detail

/// Sequence form: x is input_dim x L with each column a flattened
/// (time x freq) grid, row-major in time. Output rows are ordered
/// (out_time, out_freq, filter).
template <typename S>
Matrix<S> conv_sequence_forward(const ConvLayer<S>& layer, const Matrix<S>& x, Matrix<S>& pre) {
  const ConvGeometry& g = layer.geometry;
  if (x.rows() != g.input_dim()) throw InvalidArgument("conv input has wrong dimension");
  const int k = layer.num_filters();
  pre.resize(layer.output_dim(), x.cols());
  for (int tp = 0; tp < g.out_time(); ++tp)
    for (int fp = 0; fp < g.out_freq(); ++fp) {
      auto block = pre.middleRows(static_cast<Eigen::Index>(tp * g.out_freq() + fp) * k, k);
      block.noalias() = layer.filters * detail::gather_patch(g, x, tp, fp);
      if (layer.has_bias()) block.colwise() += layer.bias;
    }
  Matrix<S> out = pre;
  apply_activation(out, Activation::kRelu);
  return out;
}

template <typename S>
Matrix<S> conv_sequence_backward(const ConvLayer<S>& layer, const Matrix<S>& x,
                                 const Matrix<S>& pre, Matrix<S> grad_out, ConvLayer<S>& grad) {
  const ConvGeometry& g = layer.geometry;
  const int k = layer.num_filters();
  activation_backward(grad_out, pre, Activation::kRelu);
  Matrix<S> dx = Matrix<S>::Zero(x.rows(), x.cols());
  for (int tp = 0; tp < g.out_time(); ++tp)
    for (int fp = 0; fp < g.out_freq(); ++fp) {
      const auto dz = grad_out.middleRows(static_cast<Eigen::Index>(tp * g.out_freq() + fp) * k, k);
      grad.filters.noalias() += dz * detail::gather_patch(g, x, tp, fp).transpose();
      if (layer.has_bias()) grad.bias += dz.rowwise().sum();
      const Matrix<S> dpatch = layer.filters.transpose() * dz;
      for (int dt = 0; dt < g.kernel_time; ++dt) {
        const Eigen::Index row =
            static_cast<Eigen::Index>(tp * g.stride_time + dt) * g.grid_freq + fp * g.stride_freq;
        dx.middleRows(row, g.kernel_freq) += dpatch.middleRows(dt * g.kernel_freq, g.kernel_freq);
      }
    }
  return dx;
}

/// Single grid (time x freq) -> flattened out_time x out_freq x filters,
/// ReLU applied. Trailing partial tiles are dropped.
template <typename S>
Vector<S> conv1d_forward(const ConvLayer<S>& layer, const Matrix<S>& grid) {
  ConvGeometry g = layer.geometry;
  if (grid.rows() != g.grid_time || grid.cols() != g.grid_freq) {
    if (grid.rows() < g.kernel_time || grid.cols() < g.kernel_freq)
      throw InvalidArgument("conv input grid smaller than the kernel");
    throw InvalidArgument("conv input grid does not match the layer geometry");
  }
  Matrix<S> flat(g.input_dim(), 1);
  for (int t = 0; t < g.grid_time; ++t)
    for (int f = 0; f < g.grid_freq; ++f) flat(t * g.grid_freq + f, 0) = grid(t, f);
  Matrix<S> pre;
  return conv_sequence_forward(layer, flat, pre).col(0);
}

}  // namespace kws
