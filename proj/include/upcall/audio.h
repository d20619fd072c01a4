// Copyright 2026  The upcall-mmdl Authors
//
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

#ifndef UPCALL_AUDIO_H_
#define UPCALL_AUDIO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "upcall/common.h"

namespace upcall {

inline constexpr int kDefaultSampleRate = 2000;
inline constexpr double kDefaultClipSeconds = 2.0;

struct AudioSignal {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
  void validate() const;
};

// Fixed-duration mono segment; the unit of detection.
struct Clip {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;
  double duration_s = kDefaultClipSeconds;

  static size_t expected_length(double duration_s, int sample_rate_hz);
  void validate() const;
};

class WavError : public RuntimeFailure {
 public:
  enum class Kind { unreadable, unsupported_encoding, empty };
  WavError(Kind kind, const std::string& what) : RuntimeFailure(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class WavEncoding { pcm16, float32 };

// Reads a RIFF/WAVE file (16-bit PCM or 32-bit IEEE float, any channel
// count). Returns the first channel; PCM samples are scaled by 1/32768.
AudioSignal read_wav(const std::filesystem::path& path);

// Writes a mono WAV. PCM16 values are clamped to the representable range.
void write_wav(const std::filesystem::path& path, const AudioSignal& signal,
               WavEncoding encoding = WavEncoding::float32);

// Linear-interpolation resampler. Output length is round(n * target / source).
AudioSignal resample_linear(const AudioSignal& signal, int target_hz);

// Cuts [start_s, start_s + duration_s) out of the signal, zero-padding past
// the end of the source.
Clip segment_clip(const AudioSignal& signal, double start_s, double duration_s);

struct ManifestEntry {
  std::filesystem::path path;
  Label label;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  size_t count(Label l) const;
};

// CSV with header "path,label". Relative paths are resolved against the
// manifest's directory; every referenced file must exist.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace upcall

#endif  // UPCALL_AUDIO_H_
