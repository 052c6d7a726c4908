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

#include "kws/model_io.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace kws {

namespace {

constexpr char kMagic[4] = {'K', 'W', 'S', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename Derived>
void put_floats(std::vector<std::uint8_t>& out, const Eigen::MatrixBase<Derived>& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(values[i]));
}

std::uint32_t crc(const std::uint8_t* data, std::size_t size) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths.
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    c = crc32(c, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("truncated model file while reading ") + what, bytes_.size());
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model<float>& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kModelFormatVersion);
  const std::string text = to_text(model.config());
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  put_u32(out, static_cast<std::uint32_t>(model.num_layers()));
  for (int i = 0; i < model.num_layers(); ++i) out.push_back(model.layer_frozen(i) ? 1 : 0);
  const VectorF params = model.flat_parameters();
  put_u64(out, static_cast<std::uint64_t>(params.size()));
  put_floats(out, params);
  put_u32(out, crc(out.data(), out.size()));
  return out;
}

Model<float> deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const std::string magic = r.text(4, "magic");
  if (magic != std::string(kMagic, 4)) throw FormatError("not a model file (bad magic)", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kModelFormatVersion)
    throw UnsupportedVersion("model format version " + std::to_string(version) +
                             " is not supported (expected " +
                             std::to_string(kModelFormatVersion) + ")");
  const std::size_t config_offset = r.pos();
  const std::uint32_t text_size = r.u32("config length");
  const std::string text = r.text(text_size, "config text");
  ModelConfig config;
  try {
    config = parse_config_text(text);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid embedded config: ") + e.what(), config_offset);
  }
  Model<float> model(config);

  const std::size_t layers_offset = r.pos();
  const std::uint32_t layers = r.u32("layer count");
  if (static_cast<int>(layers) != model.num_layers())
    throw FormatError("frozen-flag count does not match the config", layers_offset);
  std::vector<bool> frozen(layers);
  for (std::uint32_t i = 0; i < layers; ++i) frozen[i] = r.u8("frozen flags") != 0;

  const std::size_t count_offset = r.pos();
  const std::uint64_t count = r.u64("parameter count");
  if (count != static_cast<std::uint64_t>(model.num_params()))
    throw FormatError("parameter count " + std::to_string(count) + " does not match the config (" +
                          std::to_string(model.num_params()) + ")",
                      count_offset);
  r.need(count * 4, "parameters");
  VectorF params(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    params[static_cast<Eigen::Index>(i)] = std::bit_cast<float>(r.u32("parameters"));

  const std::size_t crc_offset = r.pos();
  const std::uint32_t stored = r.u32("checksum");
  if (stored != crc(bytes.data(), crc_offset)) throw FormatError("checksum mismatch", crc_offset);
  if (r.pos() != bytes.size()) throw FormatError("trailing bytes after checksum", r.pos());

  model.set_flat_parameters(params);
  for (std::uint32_t i = 0; i < layers; ++i) model.set_layer_frozen(static_cast<int>(i), frozen[i]);
  return model;
}

void save_model(const Model<float>& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

Model<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

std::uint32_t parameter_checksum(const Model<float>& model) {
  return parameter_checksum(model, 0, model.num_layers());
}

std::uint32_t parameter_checksum(const Model<float>& model, int first, int last) {
  std::vector<std::uint8_t> bytes;
  for (int i = first; i < last; ++i)
    for_each_param_block(model.layers().at(i), [&](const auto& block, std::string_view) {
      put_floats(bytes, block);
    });
  return crc(bytes.data(), bytes.size());
}

}  // namespace kws
