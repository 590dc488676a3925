// tcssd/common.hpp

// Copyright 2026  tcssd authors

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

#ifndef TCSSD_COMMON_HPP_
#define TCSSD_COMMON_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tcssd {

inline constexpr const char* kVersion = "0.3.1";

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Raised for malformed input data, bad files and violated preconditions.
/// The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Class indices used by every 2-class head. Score polarity everywhere in the
/// library: higher means more bonafide.
enum class Key : int { kBonafide = 0, kSpoof = 1 };

inline const char* KeyName(Key k) {
  return k == Key::kBonafide ? "bonafide" : "spoof";
}

inline constexpr int kSampleRate = 16000;
inline constexpr int kFbankHop = 160;
inline constexpr int kFramesPerSecond = kSampleRate / kFbankHop;

}  // namespace tcssd

#endif  // TCSSD_COMMON_HPP_
