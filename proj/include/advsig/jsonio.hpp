// advsig/jsonio.hpp
// Small JSON / JSON-Lines file helpers. All writers produce canonical,
// key-order-preserving output so artifacts are byte-reproducible.

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

#ifndef ADVSIG_JSONIO_HPP
#define ADVSIG_JSONIO_HPP

#include <fstream>
#include <string>
#include <vector>

#include "advsig/common.hpp"

#include <json.hpp>

namespace advsig {

using Json = nlohmann::ordered_json;

inline Json ReadJsonFile(const std::string &path) {
  std::ifstream is(path);
  Require(is.good(), "cannot open JSON file '", path, "'");
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception &e) {
    Fail("failed to parse '", path, "': ", e.what());
  }
}

inline void WriteJsonFile(const std::string &path, const Json &j) {
  std::ofstream os(path, std::ios::trunc);
  Require(os.good(), "cannot open '", path, "' for writing");
  os << j.dump(2) << "\n";
  Require(os.good(), "write failed for '", path, "'");
}

inline std::vector<Json> ReadJsonl(const std::string &path) {
  std::ifstream is(path);
  Require(is.good(), "cannot open JSONL file '", path, "'");
  std::vector<Json> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception &e) {
      Fail("failed to parse line ", rows.size() + 1, " of '", path, "': ", e.what());
    }
  }
  return rows;
}

inline void WriteJsonl(const std::string &path, const std::vector<Json> &rows) {
  std::ofstream os(path, std::ios::trunc);
  Require(os.good(), "cannot open '", path, "' for writing");
  for (const auto &r : rows) os << r.dump() << "\n";
  Require(os.good(), "write failed for '", path, "'");
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string &path) : os_(path, std::ios::trunc), path_(path) {
    Require(os_.good(), "cannot open '", path, "' for writing");
  }
  void Write(const Json &j) {
    os_ << j.dump() << "\n";
    Require(os_.good(), "write failed for '", path_, "'");
  }
  void Flush() { os_.flush(); }

 private:
  std::ofstream os_;
  std::string path_;
};

}  // namespace advsig

#endif  // ADVSIG_JSONIO_HPP
