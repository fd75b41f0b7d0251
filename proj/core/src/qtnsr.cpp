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

#include "qspeckle/qtnsr.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>

#include "qspeckle/io.hpp"

namespace qspeckle::qtnsr {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return v;
}

} // namespace

std::string encode(const Tensor& tensor) {
    std::string out(kMagic.begin(), kMagic.end());
    require(tensor.rank() <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::Format,
            "qtnsr: rank too large");
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) {
        require(d <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::Format,
                "qtnsr: dimension does not fit in u32");
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    out.reserve(out.size() + 4 * tensor.size());
    for (float v : tensor.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Tensor decode(std::string_view bytes, std::size_t* consumed) {
    require(bytes.size() >= kMagic.size() + 4 &&
                std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) == 0,
            ErrorKind::Format, "qtnsr: bad magic");
    std::size_t pos = kMagic.size();
    const std::uint32_t rank = get_u32(bytes, pos);
    pos += 4;
    require(bytes.size() >= pos + 4ull * rank, ErrorKind::Format, "qtnsr: truncated header");
    Shape shape(rank);
    // Saturates just past the payload size so hostile dims cannot wrap the check.
    const std::size_t cap = bytes.size() / 4 + 1;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = get_u32(bytes, pos);
        pos += 4;
        if (shape[i] == 0) {
            count = 0;
        } else if (count != 0) {
            count = count > cap / shape[i] ? cap : std::min(count * shape[i], cap);
        }
    }
    require((bytes.size() - pos) / 4 >= count, ErrorKind::Format,
            "qtnsr: truncated payload for shape " + shape_string(shape));
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<float>(get_u32(bytes, pos));
        pos += 4;
    }
    if (consumed != nullptr) {
        *consumed = pos;
    } else {
        require(pos == bytes.size(), ErrorKind::Format, "qtnsr: trailing bytes after payload");
    }
    return Tensor(std::move(shape), std::move(data));
}

void save(const std::filesystem::path& path, const Tensor& tensor) {
    io::write_file_atomic(path, encode(tensor));
}

Tensor load(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    try {
        return decode(bytes);
    } catch (const Error& e) {
        fail(e.kind(), path.string() + ": " + e.what());
    }
}

} // namespace qspeckle::qtnsr
