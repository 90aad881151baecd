// core/include/relid/common.h

// Copyright 2026  relid contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RELID_COMMON_H_
#define RELID_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace relid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
// Feature storage is single precision, like on-disk features.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kFormat,
  kNumerical,
  kIo,
  kMissingArtifact,
  kConfig,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the library. The kind is machine-readable so the
// command-line front end can print a one-line parsable error.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

inline void Require(bool cond, ErrorKind kind, const std::string &what) {
  if (!cond) Fail(kind, what);
}

// Sentinel stored in SNR traces for frames that received no noise.
inline constexpr double kCleanSnrDb = 999.0;

}  // namespace relid

#endif  // RELID_COMMON_H_
