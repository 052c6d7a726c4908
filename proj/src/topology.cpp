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

#include "kws/topology.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <tuple>

namespace kws {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::kSvdf: return "svdf";
    case LayerKind::kBottleneck: return "bottleneck";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kConv: return "conv";
  }
  return "?";
}

LayerSpec LayerSpec::svdf(int nodes, int memory, Activation act, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::kSvdf;
  s.units = nodes;
  s.memory = memory;
  s.activation = act;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::bottleneck(int size, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::kBottleneck;
  s.units = size;
  s.activation = Activation::kIdentity;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::dense(int size, Activation act, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.units = size;
  s.activation = act;
  s.bias = bias;
  return s;
}

LayerSpec LayerSpec::softmax(int classes) {
  LayerSpec s;
  s.kind = LayerKind::kSoftmax;
  s.units = classes;
  s.activation = Activation::kSoftmax;
  s.bias = true;
  return s;
}

LayerSpec LayerSpec::conv(int filters, int kernel_time, int kernel_freq, int stride_time,
                          int stride_freq, bool bias) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.units = filters;
  s.activation = Activation::kRelu;
  s.bias = bias;
  s.kernel_time = kernel_time;
  s.kernel_freq = kernel_freq;
  s.stride_time = stride_time;
  s.stride_freq = stride_freq;
  return s;
}

int ModelConfig::resolved_input_dim() const {
  return input_dim > 0 ? input_dim : context.input_dim();
}

bool ModelConfig::intermediate_softmax() const {
  return encoder_boundary > 0 && encoder_boundary < static_cast<int>(layers.size()) &&
         layers[encoder_boundary - 1].kind == LayerKind::kSoftmax;
}

int ModelConfig::num_classes() const {
  return layers.empty() ? 0 : layers.back().units;
}

std::vector<LayerShape> ModelConfig::shapes() const {
  std::vector<LayerShape> out;
  int dim = resolved_input_dim();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    LayerShape s;
    s.input_dim = dim;
    if (l.kind == LayerKind::kConv) {
      if (i != 0) throw ConfigError("conv layer must be the first layer");
      if (dim % kMelBins != 0)
        throw ConfigError("conv input is not a whole number of 40-bin frames");
      s.grid_time = dim / kMelBins;
      s.grid_freq = kMelBins;
      if (s.grid_time < l.kernel_time || s.grid_freq < l.kernel_freq)
        throw ConfigError("conv input grid smaller than its kernel");
      s.out_time = (s.grid_time - l.kernel_time) / l.stride_time + 1;
      s.out_freq = (s.grid_freq - l.kernel_freq) / l.stride_freq + 1;
      s.output_dim = s.out_time * s.out_freq * l.units;
    } else {
      s.output_dim = l.units;
    }
    dim = s.output_dim;
    out.push_back(s);
  }
  return out;
}

void ModelConfig::validate() const {
  try {
    context.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (resolved_input_dim() < 1) throw ConfigError("input dimension must be positive");
  if (layers.empty()) throw ConfigError("config has no layers");
  if (encoder_boundary < 0 || encoder_boundary > static_cast<int>(layers.size()))
    throw ConfigError("encoder_boundary outside the layer list");
  if (layers.back().kind != LayerKind::kSoftmax)
    throw ConfigError("last layer must be a softmax");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.units < 1) throw ConfigError("layer " + std::to_string(i) + " has no units");
    if (l.kind == LayerKind::kSvdf) {
      if (l.memory < 1) throw ConfigError("SVDF memory must be >= 1");
      if (l.activation == Activation::kSoftmax)
        throw ConfigError("SVDF activation must be relu or identity");
    }
    if (l.kind == LayerKind::kConv &&
        (l.kernel_time < 1 || l.kernel_freq < 1 || l.stride_time < 1 || l.stride_freq < 1))
      throw ConfigError("conv kernel and stride must be positive");
    if (l.kind == LayerKind::kDense && l.activation == Activation::kSoftmax)
      throw ConfigError("use a softmax layer instead of a softmax dense layer");
    const bool last = i + 1 == layers.size();
    const bool at_boundary = static_cast<int>(i) + 1 == encoder_boundary;
    if (l.kind == LayerKind::kSoftmax && !last && !at_boundary)
      throw ConfigError("softmax allowed only as the final layer or at the encoder boundary");
  }
  (void)shapes();
}

namespace {

ModelConfig e2e(std::string name, int nodes, int bottleneck) {
  ModelConfig c;
  c.name = std::move(name);
  c.context = {1, 1, 2};
  for (int i = 0; i < 4; ++i) {
    c.layers.push_back(LayerSpec::svdf(nodes, 8));
    if (i < 3) c.layers.push_back(LayerSpec::bottleneck(bottleneck));
  }
  c.encoder_boundary = static_cast<int>(c.layers.size());
  for (int i = 0; i < 3; ++i) c.layers.push_back(LayerSpec::svdf(32, 32));
  c.layers.push_back(LayerSpec::softmax(2));
  return c;
}

}  // namespace

ModelConfig builtin_config(std::string_view name) {
  if (name == "E2E_700K") return e2e("E2E_700K", 1280, 64);
  if (name == "E2E_318K") return e2e("E2E_318K", 576, 64);
  if (name == "E2E_40K") return e2e("E2E_40K", 96, 32);
  if (name == "Baseline_1850K") {
    ModelConfig c;
    c.name = "Baseline_1850K";
    c.context = {30, 10, 3};
    c.layers.push_back(LayerSpec::conv(92, 8, 8, 8, 8));
    for (int i = 0; i < 3; ++i) c.layers.push_back(LayerSpec::dense(512));
    c.layers.push_back(LayerSpec::softmax(9));
    c.encoder_boundary = 0;
    return c;
  }
  throw InvalidArgument("unknown builtin config '" + std::string(name) + "'");
}

std::vector<std::string> builtin_config_names() {
  return {"E2E_700K", "E2E_318K", "E2E_40K", "Baseline_1850K"};
}

ModelConfig with_intermediate_softmax(const ModelConfig& config, int classes) {
  if (config.intermediate_softmax()) return config;
  if (config.encoder_boundary < 1) throw ConfigError("config has no encoder section");
  ModelConfig out = config;
  out.layers.insert(out.layers.begin() + config.encoder_boundary, LayerSpec::softmax(classes));
  out.encoder_boundary = config.encoder_boundary + 1;
  return out;
}

ModelConfig encoder_config(const ModelConfig& config, int classes) {
  if (config.encoder_boundary < 1) throw ConfigError("config has no encoder section");
  ModelConfig out;
  out.name = config.name + ".encoder";
  out.context = config.context;
  out.input_dim = config.input_dim;
  out.layers.assign(config.layers.begin(), config.layers.begin() + config.encoder_boundary);
  if (out.layers.back().kind != LayerKind::kSoftmax)
    out.layers.push_back(LayerSpec::softmax(classes));
  out.encoder_boundary = static_cast<int>(out.layers.size());
  return out;
}

ModelConfig decoder_config(const ModelConfig& config, int input_dim) {
  if (config.encoder_boundary < 1 ||
      config.encoder_boundary >= static_cast<int>(config.layers.size()))
    throw ConfigError("config has no decoder section");
  ModelConfig out;
  out.name = config.name + ".decoder";
  out.context = config.context;
  out.input_dim = input_dim;
  out.layers.assign(config.layers.begin() + config.encoder_boundary, config.layers.end());
  out.encoder_boundary = 0;
  return out;
}

ModelConfig compose(const ModelConfig& encoder, const ModelConfig& decoder) {
  encoder.validate();
  decoder.validate();
  if (decoder.resolved_input_dim() != encoder.num_classes())
    throw ConfigError("decoder input dim " + std::to_string(decoder.resolved_input_dim()) +
                      " does not match encoder output dim " +
                      std::to_string(encoder.num_classes()));
  ModelConfig out;
  out.name = encoder.name;
  const auto suffix = std::string_view(".encoder");
  if (out.name.size() > suffix.size() && out.name.ends_with(suffix))
    out.name.resize(out.name.size() - suffix.size());
  out.context = encoder.context;
  out.input_dim = encoder.input_dim;
  out.layers = encoder.layers;
  out.encoder_boundary = static_cast<int>(encoder.layers.size());
  out.layers.insert(out.layers.end(), decoder.layers.begin(), decoder.layers.end());
  out.validate();
  return out;
}

std::int64_t count_params(const ModelConfig& config) {
  const auto shapes = config.shapes();
  std::int64_t total = 0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const LayerShape& s = shapes[i];
    const std::int64_t units = l.units;
    const std::int64_t bias = l.bias ? units : 0;
    switch (l.kind) {
      case LayerKind::kSvdf: total += units * s.input_dim + units * l.memory + bias; break;
      case LayerKind::kConv:
        total += units * l.kernel_time * l.kernel_freq + bias;
        break;
      default: total += units * s.input_dim + bias; break;
    }
  }
  return total;
}

std::int64_t count_bias_params(const ModelConfig& config) {
  std::int64_t total = 0;
  for (const auto& l : config.layers)
    if (l.bias) total += l.units;
  return total;
}

std::int64_t count_macs(const ModelConfig& config, MacConvention convention) {
  const auto shapes = config.shapes();
  std::int64_t total = 0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const LayerShape& s = shapes[i];
    const std::int64_t units = l.units;
    switch (l.kind) {
      // Memoized: one feature-filter product per node plus the time filter.
      case LayerKind::kSvdf: total += units * s.input_dim + units * l.memory; break;
      case LayerKind::kConv:
        total += static_cast<std::int64_t>(s.out_time) * s.out_freq * units * l.kernel_time *
                 l.kernel_freq;
        break;
      default: total += units * s.input_dim; break;
    }
  }
  if (convention == MacConvention::kPer10msFrame) {
    const std::int64_t stride = config.context.stride;
    total = (total + stride / 2) / stride;
  }
  return total;
}

ReceptiveField receptive_field(const ModelConfig& config) {
  ReceptiveField rf;
  for (const auto& l : config.layers)
    if (l.kind == LayerKind::kSvdf) rf.inference_steps += l.memory - 1;
  rf.left_context_frames = config.context.left;
  rf.milliseconds = rf.inference_steps * config.context.stride * kHopMs;
  return rf;
}

std::string to_text(const ModelConfig& config) {
  std::ostringstream out;
  out << "kws-config 1\n";
  out << "name " << config.name << "\n";
  out << "context left=" << config.context.left << " right=" << config.context.right
      << " stride=" << config.context.stride << "\n";
  if (config.input_dim > 0) out << "input " << config.input_dim << "\n";
  out << "encoder_boundary " << config.encoder_boundary << "\n";
  for (const auto& l : config.layers) {
    out << to_string(l.kind) << " units=" << l.units;
    switch (l.kind) {
      case LayerKind::kSvdf:
        out << " memory=" << l.memory << " activation=" << to_string(l.activation)
            << " bias=" << l.bias;
        break;
      case LayerKind::kDense:
        out << " activation=" << to_string(l.activation) << " bias=" << l.bias;
        break;
      case LayerKind::kBottleneck: out << " bias=" << l.bias; break;
      case LayerKind::kConv:
        out << " kernel=" << l.kernel_time << "x" << l.kernel_freq << " stride=" << l.stride_time
            << "x" << l.stride_freq << " bias=" << l.bias;
        break;
      case LayerKind::kSoftmax: break;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

int parse_int(const std::string& v, int line_no) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": bad integer '" + v + "'");
  }
}

Activation parse_activation(const std::string& v, int line_no) {
  if (v == "relu") return Activation::kRelu;
  if (v == "identity") return Activation::kIdentity;
  if (v == "softmax") return Activation::kSoftmax;
  throw ConfigError("line " + std::to_string(line_no) + ": unknown activation '" + v + "'");
}

std::pair<int, int> parse_pair(const std::string& v, int line_no) {
  const auto x = v.find('x');
  if (x == std::string::npos)
    throw ConfigError("line " + std::to_string(line_no) + ": expected AxB, got '" + v + "'");
  return {parse_int(v.substr(0, x), line_no), parse_int(v.substr(x + 1), line_no)};
}

}  // namespace

ModelConfig parse_config_text(std::string_view text) {
  ModelConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "kws-config") {
      std::string version;
      ls >> version;
      if (version != "1") throw ConfigError("unsupported config version '" + version + "'");
      saw_header = true;
      continue;
    }
    if (key == "name") {
      std::getline(ls >> std::ws, c.name);
      continue;
    }
    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<std::string> positional;
    for (std::string tok; ls >> tok;) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        positional.push_back(tok);
      else
        kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    auto take = [&](const std::string& k) -> std::optional<std::string> {
      for (auto it = kv.begin(); it != kv.end(); ++it)
        if (it->first == k) {
          auto v = it->second;
          kv.erase(it);
          return v;
        }
      return std::nullopt;
    };
    if (key == "context") {
      if (auto v = take("left")) c.context.left = parse_int(*v, line_no);
      if (auto v = take("right")) c.context.right = parse_int(*v, line_no);
      if (auto v = take("stride")) c.context.stride = parse_int(*v, line_no);
    } else if (key == "input") {
      if (positional.size() != 1) throw ConfigError("line " + std::to_string(line_no) + ": input needs one value");
      c.input_dim = parse_int(positional[0], line_no);
      positional.clear();
    } else if (key == "encoder_boundary") {
      if (positional.size() != 1)
        throw ConfigError("line " + std::to_string(line_no) + ": encoder_boundary needs one value");
      c.encoder_boundary = parse_int(positional[0], line_no);
      positional.clear();
    } else {
      const int units = parse_int(take("units").value_or("0"), line_no);
      LayerSpec l;
      if (key == "svdf") {
        l = LayerSpec::svdf(units, parse_int(take("memory").value_or("1"), line_no));
      } else if (key == "bottleneck") {
        l = LayerSpec::bottleneck(units);
      } else if (key == "dense") {
        l = LayerSpec::dense(units);
      } else if (key == "softmax") {
        l = LayerSpec::softmax(units);
      } else if (key == "conv") {
        l = LayerSpec::conv(units);
        if (auto v = take("kernel")) std::tie(l.kernel_time, l.kernel_freq) = parse_pair(*v, line_no);
        if (auto v = take("stride")) std::tie(l.stride_time, l.stride_freq) = parse_pair(*v, line_no);
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown directive '" + key + "'");
      }
      if (auto v = take("activation")) {
        if (key != "svdf" && key != "dense")
          throw ConfigError("line " + std::to_string(line_no) + ": activation not configurable for " + key);
        l.activation = parse_activation(*v, line_no);
      }
      if (auto v = take("bias")) {
        if (key == "softmax") throw ConfigError("line " + std::to_string(line_no) + ": softmax always has a bias");
        l.bias = parse_int(*v, line_no) != 0;
      }
      c.layers.push_back(l);
    }
    if (!kv.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + kv.front().first + "'");
    if (!positional.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": unexpected token '" + positional.front() + "'");
  }
  if (!saw_header) throw ConfigError("missing 'kws-config 1' header");
  c.validate();
  return c;
}

ModelConfig load_config(const std::string& name_or_path) {
  for (const auto& n : builtin_config_names())
    if (n == name_or_path) return builtin_config(n);
  std::ifstream in(name_or_path);
  if (!in) throw InvalidArgument("'" + name_or_path + "' is neither a builtin config nor a readable file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace kws
