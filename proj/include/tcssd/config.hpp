// tcssd/config.hpp

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

#ifndef TCSSD_CONFIG_HPP_
#define TCSSD_CONFIG_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "tcssd/common.hpp"

namespace tcssd {

/// Flat `dotted.key = value` configuration. '#' starts a comment; later
/// assignments override earlier ones.
class FlatConfig {
 public:
  static FlatConfig Parse(std::istream& in, const std::string& source = "<stream>");
  static FlatConfig Load(const std::string& path);

  void Set(const std::string& key, const std::string& value);
  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  long GetInt(const std::string& key, long fallback) const;
  std::uint64_t GetU64(const std::string& key, std::uint64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  /// Sorted `key = value` lines.
  std::string Canonical() const;
  /// FNV-1a (64 bit) of Canonical().
  std::uint64_t Hash() const;
  std::string HashHex() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tcssd

#endif  // TCSSD_CONFIG_HPP_
