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
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "qspeckle/tensor.hpp"

/// QTNSR binary tensor files:
///
///     "QTNSR1\0"            7 magic bytes
///     u32 rank              little-endian
///     u32 dims[rank]        little-endian
///     f32 payload           little-endian, row-major, product(dims) values
namespace qspeckle::qtnsr {

inline constexpr std::array<char, 7> kMagic{'Q', 'T', 'N', 'S', 'R', '1', '\0'};

std::string encode(const Tensor& tensor);

/// Decodes one tensor from the front of `bytes`. When `consumed` is given the
/// number of bytes used is stored there and trailing data is allowed;
/// otherwise trailing bytes are a format error.
Tensor decode(std::string_view bytes, std::size_t* consumed = nullptr);

void save(const std::filesystem::path& path, const Tensor& tensor);
Tensor load(const std::filesystem::path& path);

} // namespace qspeckle::qtnsr
