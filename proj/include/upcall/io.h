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

#ifndef UPCALL_IO_H_
#define UPCALL_IO_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace upcall {

// Writes to a sibling temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Pretty-printed with sorted keys, so equal documents give equal bytes.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Raw little-endian float64 blobs.
void write_f64_file(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64_file(const std::filesystem::path& path);

}  // namespace upcall

#endif  // UPCALL_IO_H_
