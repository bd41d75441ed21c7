// advsig/hash.hpp

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

#ifndef ADVSIG_HASH_HPP
#define ADVSIG_HASH_HPP

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "advsig/common.hpp"

namespace advsig {

// FNV-1a, 64 bit. Integrity / change detection only, not cryptographic.
class Fnv1a {
 public:
  void Update(const void *data, size_t n) {
    const unsigned char *p = static_cast<const unsigned char *>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  uint64_t Digest() const { return h_; }
  std::string Hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h_;
    return os.str();
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

inline uint64_t HashBytes(const void *data, size_t n) {
  Fnv1a h;
  h.Update(data, n);
  return h.Digest();
}

inline std::string HashFileHex(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), "HashFileHex: cannot open ", path);
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.Update(buf.data(), static_cast<size_t>(in.gcount()));
  }
  return h.Hex();
}

}  // namespace advsig

#endif  // ADVSIG_HASH_HPP
