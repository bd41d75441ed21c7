// src/wav_io.cpp

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

#include "advsig/wav_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace advsig {

namespace {

uint32_t ReadU32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t ReadU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void PutU32(std::vector<unsigned char> *v, uint32_t x) {
  v->push_back(x & 0xff);
  v->push_back((x >> 8) & 0xff);
  v->push_back((x >> 16) & 0xff);
  v->push_back((x >> 24) & 0xff);
}
void PutU16(std::vector<unsigned char> *v, uint16_t x) {
  v->push_back(x & 0xff);
  v->push_back((x >> 8) & 0xff);
}

}  // namespace

Waveform ReadWav(const std::string &path, int expected_rate) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), "ReadWav: cannot open ", path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  Require(bytes.size() >= 44, "ReadWav: ", path, " too short for a WAV header");
  Require(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          "ReadWav: ", path, " is not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  bool have_fmt = false;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *hdr = bytes.data() + pos;
    uint32_t chunk_len = ReadU32(hdr + 4);
    size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      Require(chunk_len >= 16 && body + 16 <= bytes.size(), "ReadWav: bad fmt chunk in ", path);
      format = ReadU16(bytes.data() + body);
      channels = ReadU16(bytes.data() + body + 2);
      rate = ReadU32(bytes.data() + body + 4);
      bits = ReadU16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_off = body;
      data_len = std::min<size_t>(chunk_len, bytes.size() - body);
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  Require(have_fmt && data_off != 0, "ReadWav: missing fmt/data chunk in ", path);
  Require(channels == 1, "ReadWav: ", path, " has ", channels,
          " channels; only mono is supported");
  Require(expected_rate <= 0 || rate == static_cast<uint32_t>(expected_rate),
          "ReadWav: ", path, " sample rate ", rate, " != expected ", expected_rate,
          " (resampling is out of scope)");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    size_t n = data_len / 2;
    w.samples.resize(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      int16_t s = static_cast<int16_t>(ReadU16(bytes.data() + data_off + 2 * i));
      w.samples[static_cast<Eigen::Index>(i)] = static_cast<float>(s) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    size_t n = data_len / 4;
    w.samples.resize(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = ReadU32(bytes.data() + data_off + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[static_cast<Eigen::Index>(i)] = f;
    }
  } else {
    Fail("ReadWav: ", path, " has unsupported encoding (format=", format, ", bits=",
         bits, "); only 16-bit PCM and 32-bit float are supported");
  }
  ValidateWaveform(w, path);
  return w;
}

void WriteWav(const std::string &path, const Waveform &w, WavEncoding enc) {
  ValidateWaveform(w, path);
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint16_t bytes_per = (enc == WavEncoding::Pcm16) ? 2 : 4;
  const uint32_t data_len = n * bytes_per;

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(&out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(&out, 16);
  PutU16(&out, enc == WavEncoding::Pcm16 ? 1 : 3);
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<uint32_t>(w.sample_rate));
  PutU32(&out, static_cast<uint32_t>(w.sample_rate) * bytes_per);
  PutU16(&out, bytes_per);
  PutU16(&out, static_cast<uint16_t>(8 * bytes_per));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(&out, data_len);

  if (enc == WavEncoding::Pcm16) {
    for (uint32_t i = 0; i < n; ++i) {
      float f = std::min(1.0f, std::max(-1.0f, w.samples[static_cast<Eigen::Index>(i)]));
      int v = static_cast<int>(std::lrintf(f * 32768.0f));
      v = std::min(32767, std::max(-32768, v));
      PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
  } else {
    for (uint32_t i = 0; i < n; ++i) {
      float f = w.samples[static_cast<Eigen::Index>(i)];
      uint32_t u;
      std::memcpy(&u, &f, 4);
      PutU32(&out, u);
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  Require(os.good(), "WriteWav: cannot open ", path, " for writing");
  os.write(reinterpret_cast<const char *>(out.data()),
           static_cast<std::streamsize>(out.size()));
  Require(os.good(), "WriteWav: write failed for ", path);
}

}  // namespace advsig
