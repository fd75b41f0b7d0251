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

#include <cstddef>
#include <filesystem>
#include <span>

#include "qspeckle/tensor.hpp"

namespace qspeckle {

/// Single-channel linear-intensity image, row-major H x W.
class Image {
public:
    Image() : pixels_(Shape{0, 0}) {}
    Image(std::size_t height, std::size_t width, float fill = 0.0f)
        : pixels_(Shape{height, width}, fill) {}
    /// Accepts H x W or H x W x 1 tensors.
    explicit Image(Tensor pixels);

    std::size_t height() const noexcept { return pixels_.dim(0); }
    std::size_t width() const noexcept { return pixels_.dim(1); }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.size() == 0; }

    float& operator()(std::size_t row, std::size_t col) noexcept { return pixels_[row * width() + col]; }
    float operator()(std::size_t row, std::size_t col) const noexcept { return pixels_[row * width() + col]; }

    std::span<float> data() noexcept { return pixels_.data(); }
    std::span<const float> data() const noexcept { return pixels_.data(); }

    const Tensor& tensor() const noexcept { return pixels_; }
    /// H x W x 1 view suitable as conv2d input.
    Tensor as_channels() const { return pixels_.reshaped({height(), width(), 1}); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    Tensor pixels_;
};

void require_same_dims(const Image& a, const Image& b, std::string_view what);

/// Quanvolution output: H x W x C, every value a Z expectation in [-1, 1].
class FeatureMap {
public:
    FeatureMap() : values_(Shape{0, 0, 0}) {}
    /// Validates rank 3 and the [-1, 1] range.
    explicit FeatureMap(Tensor values);

    std::size_t height() const noexcept { return values_.dim(0); }
    std::size_t width() const noexcept { return values_.dim(1); }
    std::size_t channels() const noexcept { return values_.dim(2); }

    float operator()(std::size_t row, std::size_t col, std::size_t channel) const noexcept {
        return values_[(row * width() + col) * channels() + channel];
    }

    const Tensor& tensor() const noexcept { return values_; }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
    Tensor values_;
};

/// 8-bit binary PGM preview, linearly mapping [lo, hi] to [0, 255] with clamping.
void write_pgm(const std::filesystem::path& path, const Image& image, float lo, float hi);

} // namespace qspeckle
