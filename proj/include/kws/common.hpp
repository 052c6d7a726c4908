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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

namespace kws {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixF = Matrix<float>;
using VectorF = Vector<float>;
using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

/// Read-only view of a column vector; excluded from template deduction.
template <typename Scalar>
using VectorCRef = std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>;

// Reductions on float data accumulate in double.
template <typename Scalar>
struct Accumulator {
  using type = double;
};
template <>
struct Accumulator<long double> {
  using type = long double;
};
template <typename Scalar>
using accum_t = typename Accumulator<Scalar>::type;

inline constexpr int kSampleRate = 16000;
inline constexpr int kMelBins = 40;
inline constexpr int kWindowMs = 30;
inline constexpr int kHopMs = 10;
inline constexpr int kWindowSamples = kSampleRate * kWindowMs / 1000;  // 480
inline constexpr int kHopSamples = kSampleRate * kHopMs / 1000;        // 160

// Error taxonomy. The CLI maps these onto exit codes.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class UnsupportedVersion : public DataError {
 public:
  using DataError::DataError;
};

class NoOperatingPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kws
