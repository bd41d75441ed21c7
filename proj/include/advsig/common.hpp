// advsig/common.hpp

// Copyright 2026  advsig authors

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

#ifndef ADVSIG_COMMON_HPP
#define ADVSIG_COMMON_HPP

#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace advsig {

/// Thrown on violated preconditions and malformed inputs.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void FormatTo(std::ostringstream &) {}

template <typename T, typename... Rest>
void FormatTo(std::ostringstream &os, const T &v, const Rest &...rest) {
  os << v;
  FormatTo(os, rest...);
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void Fail(const Args &...args) {
  std::ostringstream os;
  detail::FormatTo(os, args...);
  throw Error(os.str());
}

template <typename... Args>
void Require(bool cond, const Args &...args) {
  if (!cond) Fail(args...);
}

template <typename... Args>
void Warn(const Args &...args) {
  std::ostringstream os;
  detail::FormatTo(os, args...);
  std::cerr << "WARNING (advsig): " << os.str() << "\n";
}

}  // namespace advsig

#endif  // ADVSIG_COMMON_HPP
