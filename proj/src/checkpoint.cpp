// src/checkpoint.cpp

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

#include "advsig/nn.hpp"

#include <cstring>
#include <fstream>

namespace advsig {
namespace nn {

namespace {

void WriteU64(std::ofstream &os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char *>(b), 8);
}

uint64_t ReadU64(std::ifstream &is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char *>(b), 8);
  Require(is.good(), "checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void WriteString(std::ofstream &os, const std::string &s) {
  WriteU64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::ifstream &is) {
  uint64_t n = ReadU64(is);
  Require(n < (1ull << 32), "checkpoint: unreasonable string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  Require(is.good(), "checkpoint: truncated string");
  return s;
}

}  // namespace

void SaveCheckpoint(const std::string &path, const std::string &model_kind,
                    const nlohmann::ordered_json &config, const ParamStore<float> &params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  Require(os.good(), "checkpoint: cannot open '", path, "' for writing");
  os.write(kCheckpointMagic, static_cast<std::streamsize>(std::strlen(kCheckpointMagic)));
  os.put('\n');
  WriteString(os, model_kind);
  WriteString(os, config.dump());
  WriteU64(os, params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const auto &m = params.At(i);
    WriteString(os, params.NameAt(i));
    WriteU64(os, static_cast<uint64_t>(m.rows()));
    WriteU64(os, static_cast<uint64_t>(m.cols()));
    // column-major payload, float32 little-endian
    os.write(reinterpret_cast<const char *>(m.data()),
             static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(m.size())));
  }
  Require(os.good(), "checkpoint: write failed for '", path, "'");
}

nlohmann::ordered_json LoadCheckpoint(const std::string &path, const std::string &expect_kind,
                                      ParamStore<float> *params) {
  Require(params != nullptr && params->size() == 0,
          "checkpoint: destination store must be empty");
  std::ifstream is(path, std::ios::binary);
  Require(is.good(), "checkpoint: cannot open '", path, "'");
  std::string magic(std::strlen(kCheckpointMagic), '\0');
  is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  Require(is.good() && magic == kCheckpointMagic && is.get() == '\n',
          "checkpoint: '", path, "' is not a recognized checkpoint file");
  std::string kind = ReadString(is);
  Require(expect_kind.empty() || kind == expect_kind, "checkpoint: '", path, "' holds a '",
          kind, "' model, expected '", expect_kind, "'");
  nlohmann::ordered_json config;
  try {
    config = nlohmann::ordered_json::parse(ReadString(is));
  } catch (const nlohmann::json::exception &e) {
    Fail("checkpoint: bad config block in '", path, "': ", e.what());
  }
  uint64_t count = ReadU64(is);
  Require(count < 100000, "checkpoint: unreasonable parameter count");
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = ReadString(is);
    uint64_t rows = ReadU64(is), cols = ReadU64(is);
    Require(rows < (1ull << 28) && cols < (1ull << 28), "checkpoint: unreasonable shape");
    auto &m = params->Add(name, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    is.read(reinterpret_cast<char *>(m.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<size_t>(m.size())));
    Require(is.good(), "checkpoint: truncated payload at '", name, "'");
  }
  return config;
}

}  // namespace nn
}  // namespace advsig
