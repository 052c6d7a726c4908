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
#include <vector>

#include "kws/model.hpp"

namespace kws {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Model file layout (all integers little endian):
///   "KWSM" | u32 version | u32 n | n bytes canonical config text
///   | u32 layers | u8 frozen flag per layer | u64 count | count x f32
///   | u32 CRC-32 of everything before it
std::vector<std::uint8_t> serialize_model(const Model<float>& model);
Model<float> deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const Model<float>& model, const std::string& path);
Model<float> load_model(const std::string& path);

/// CRC-32 of the little-endian f32 parameter block.
std::uint32_t parameter_checksum(const Model<float>& model);
/// Same, restricted to layers [first, last).
std::uint32_t parameter_checksum(const Model<float>& model, int first, int last);

}  // namespace kws
