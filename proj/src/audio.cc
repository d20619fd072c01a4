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

#include "upcall/audio.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace upcall {

namespace {

uint16_t read_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xfffe;

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

void AudioSignal::validate() const {
  if (sample_rate_hz <= 0) throw ValidationError("audio: sample rate must be positive");
  if (samples.empty()) throw ValidationError("audio: no samples");
}

size_t Clip::expected_length(double duration_s, int sample_rate_hz) {
  return static_cast<size_t>(std::llround(duration_s * sample_rate_hz));
}

void Clip::validate() const {
  if (sample_rate_hz <= 0) throw ValidationError("clip: sample rate must be positive");
  if (samples.size() != expected_length(duration_s, sample_rate_hz))
    throw ValidationError("clip: sample count does not match duration");
}

AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavError::Kind::unreadable, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    throw WavError(WavError::Kind::unreadable, path.string() + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* pcm = nullptr;
  size_t pcm_bytes = 0;

  size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    uint32_t chunk_size = read_u32(chunk + 4);
    size_t body = pos + 8;
    size_t avail = std::min<size_t>(chunk_size, size - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw WavError(WavError::Kind::unreadable, path.string() + ": short fmt chunk");
      format = read_u16(data + body);
      channels = read_u16(data + body + 2);
      rate = read_u32(data + body + 4);
      bits = read_u16(data + body + 14);
      if (format == kFormatExtensible) {
        if (avail < 26)
          throw WavError(WavError::Kind::unreadable, path.string() + ": short extensible fmt chunk");
        format = read_u16(data + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      pcm = data + body;
      pcm_bytes = avail;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt || pcm == nullptr)
    throw WavError(WavError::Kind::unreadable, path.string() + ": missing fmt or data chunk");
  if (channels == 0 || rate == 0)
    throw WavError(WavError::Kind::unreadable, path.string() + ": invalid channel count or rate");
  const bool is_pcm16 = format == kFormatPcm && bits == 16;
  const bool is_float32 = format == kFormatFloat && bits == 32;
  if (!is_pcm16 && !is_float32)
    throw WavError(WavError::Kind::unsupported_encoding,
                   path.string() + ": unsupported encoding (format " + std::to_string(format) +
                       ", " + std::to_string(bits) + " bits)");

  const size_t frame_bytes = static_cast<size_t>(channels) * (bits / 8);
  const size_t frames = pcm_bytes / frame_bytes;
  if (frames == 0) throw WavError(WavError::Kind::empty, path.string() + ": zero-length audio");

  AudioSignal sig;
  sig.sample_rate_hz = static_cast<int>(rate);
  sig.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    const unsigned char* p = pcm + i * frame_bytes;
    if (is_pcm16) {
      sig.samples[i] = static_cast<int16_t>(read_u16(p)) / 32768.0;
    } else {
      uint32_t raw = read_u32(p);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      sig.samples[i] = f;
    }
  }
  return sig;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal, WavEncoding encoding) {
  signal.validate();
  const bool pcm16 = encoding == WavEncoding::pcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint32_t data_bytes = static_cast<uint32_t>(signal.samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(signal.sample_rate_hz));
  put_u32(out, static_cast<uint32_t>(signal.sample_rate_hz) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_bytes);
  for (double x : signal.samples) {
    if (pcm16) {
      double v = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
    } else {
      float f = static_cast<float>(x);
      uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw RuntimeFailure("write failed: " + path.string());
}

AudioSignal resample_linear(const AudioSignal& signal, int target_hz) {
  if (target_hz <= 0) throw ValidationError("resample: target rate must be positive");
  signal.validate();
  if (target_hz == signal.sample_rate_hz) return signal;
  const size_t n = signal.samples.size();
  const size_t m = static_cast<size_t>(
      std::llround(static_cast<double>(n) * target_hz / signal.sample_rate_hz));
  AudioSignal out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(m);
  const double step = static_cast<double>(signal.sample_rate_hz) / target_hz;
  for (size_t i = 0; i < m; ++i) {
    double pos = i * step;
    size_t i0 = static_cast<size_t>(pos);
    if (i0 >= n - 1) {
      out.samples[i] = signal.samples[n - 1];
      continue;
    }
    double frac = pos - static_cast<double>(i0);
    out.samples[i] = signal.samples[i0] + frac * (signal.samples[i0 + 1] - signal.samples[i0]);
  }
  return out;
}

Clip segment_clip(const AudioSignal& signal, double start_s, double duration_s) {
  signal.validate();
  if (start_s < 0) throw ValidationError("segment: negative start");
  if (duration_s <= 0) throw ValidationError("segment: duration must be positive");
  const size_t start = static_cast<size_t>(std::llround(start_s * signal.sample_rate_hz));
  if (start >= signal.samples.size()) throw ValidationError("segment: start beyond end of signal");
  Clip clip;
  clip.sample_rate_hz = signal.sample_rate_hz;
  clip.duration_s = duration_s;
  clip.samples.assign(Clip::expected_length(duration_s, signal.sample_rate_hz), 0.0);
  const size_t avail = std::min(clip.samples.size(), signal.samples.size() - start);
  std::copy_n(signal.samples.begin() + static_cast<std::ptrdiff_t>(start), avail,
              clip.samples.begin());
  return clip;
}

size_t Manifest::count(Label l) const {
  return static_cast<size_t>(
      std::count_if(entries.begin(), entries.end(), [l](const auto& e) { return e.label == l; }));
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "path,label")
    throw ValidationError(path.string() + ": manifest header must be 'path,label'");
  const auto base = path.parent_path();
  Manifest m;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected path,label");
    std::filesystem::path p = trim(line.substr(0, comma));
    Label label = parse_label(trim(line.substr(comma + 1)));
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p))
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": missing file " +
                            p.string());
    m.entries.push_back({p, label});
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ostringstream os;
  os << "path,label\n";
  const auto base = path.parent_path();
  for (const auto& e : manifest.entries) {
    auto p = e.path;
    if (p.is_absolute() && !base.empty()) p = std::filesystem::relative(p, base);
    os << p.generic_string() << ',' << label_name(e.label) << '\n';
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  f << os.str();
}

}  // namespace upcall
