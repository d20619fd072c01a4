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

#include "upcall/io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "upcall/common.h"

namespace upcall {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "model blobs are stored little-endian; big-endian hosts need a byte swap");

namespace {

void write_bytes(const fs::path& path, const char* data, size_t n) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw RuntimeFailure("cannot write " + tmp.string());
    f.write(data, static_cast<std::streamsize>(n));
    if (!f) throw RuntimeFailure("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw RuntimeFailure("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  write_bytes(path, text.data(), text.size());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

nlohmann::json read_json_file(const fs::path& path) {
  std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeFailure(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_f64_file(const fs::path& path, std::span<const double> values) {
  write_bytes(path, reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
}

std::vector<double> read_f64_file(const fs::path& path) {
  std::string bytes = read_text_file(path);
  if (bytes.size() % sizeof(double) != 0)
    throw RuntimeFailure(path.string() + ": size is not a multiple of 8 bytes");
  std::vector<double> v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

}  // namespace upcall
