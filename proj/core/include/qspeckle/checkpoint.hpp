// Copyright 2026 The QSpeckle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "qspeckle/denoiser.hpp"

/// Model checkpoint (.qsf):
///
///     "QSFMDL1\0"          8 magic bytes
///     u64 header_length    little-endian
///     header               JSON: architecture, circuit, spec hash, norm,
///                          loss weights, training config, parameter list
///     parameters           one QTNSR blob per entry of header["params"]
namespace qspeckle::checkpoint {

inline constexpr std::array<char, 8> kMagic{'Q', 'S', 'F', 'M', 'D', 'L', '1', '\0'};

std::string encode(const denoiser::Checkpoint& ckpt);
denoiser::Checkpoint decode(std::string_view bytes);

void save(const std::filesystem::path& path, const denoiser::Checkpoint& ckpt);
denoiser::Checkpoint load(const std::filesystem::path& path);

/// SHA-256 of the encoded checkpoint.
std::string model_id(const denoiser::Checkpoint& ckpt);

} // namespace qspeckle::checkpoint
