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

#ifndef UPCALL_NN_MODEL_IO_H_
#define UPCALL_NN_MODEL_IO_H_

#include <filesystem>

#include "json.hpp"
#include "upcall/nn/network.h"

namespace upcall::nn {

inline constexpr int kModelFormatVersion = 1;

// Directory with model.json (layer list, shapes, format version, caller
// metadata under "extra") and one <layer>_<param>.f64 blob per tensor.
void save_network(const Network& net, const std::filesystem::path& dir,
                  const nlohmann::json& extra = nlohmann::json::object());

// Throws RuntimeFailure on a missing, malformed or inconsistent model.
Network load_network(const std::filesystem::path& dir, nlohmann::json* extra = nullptr);

}  // namespace upcall::nn

#endif  // UPCALL_NN_MODEL_IO_H_
