// advsig/wav_io.hpp

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

#ifndef ADVSIG_WAV_IO_HPP
#define ADVSIG_WAV_IO_HPP

#include <string>

#include "advsig/waveform.hpp"

namespace advsig {

enum class WavEncoding { Pcm16, Float32 };

/// Reads a mono RIFF WAV file (16-bit PCM or 32-bit IEEE float).
/// Multi-channel files and other encodings are rejected. If expected_rate > 0
/// a differing sample rate is rejected (resampling is out of scope).
Waveform ReadWav(const std::string &path, int expected_rate = 0);

/// Writes a mono WAV file. Pcm16 rounds to the nearest 16-bit code with
/// clamping to [-1, 1]; Float32 stores samples bit-exact.
void WriteWav(const std::string &path, const Waveform &w,
              WavEncoding enc = WavEncoding::Pcm16);

}  // namespace advsig

#endif  // ADVSIG_WAV_IO_HPP
