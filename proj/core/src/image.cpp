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

#include "qspeckle/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qspeckle/io.hpp"

namespace qspeckle {

Image::Image(Tensor pixels) : pixels_(std::move(pixels)) {
    if (pixels_.rank() == 3 && pixels_.dim(2) == 1) {
        pixels_ = std::move(pixels_).reshaped({pixels_.dim(0), pixels_.dim(1)});
    }
    require(pixels_.rank() == 2, ErrorKind::Shape,
            "image: expected H x W tensor, got " + shape_string(pixels_.shape()));
}

void require_same_dims(const Image& a, const Image& b, std::string_view what) {
    require(a.height() == b.height() && a.width() == b.width(), ErrorKind::Shape,
            std::string(what) + ": image dims differ (" + std::to_string(a.height()) + "x" +
                std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                std::to_string(b.width()) + ")");
}

FeatureMap::FeatureMap(Tensor values) : values_(std::move(values)) {
    require(values_.rank() == 3, ErrorKind::Shape,
            "feature map: expected H x W x C tensor, got " + shape_string(values_.shape()));
    for (float v : values_.data()) {
        require(v >= -1.0f && v <= 1.0f, ErrorKind::Numeric,
                "feature map: value " + std::to_string(v) + " outside [-1, 1]");
    }
}

void write_pgm(const std::filesystem::path& path, const Image& image, float lo, float hi) {
    require(hi > lo, ErrorKind::InvalidArgument, "pgm: hi must exceed lo");
    std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    const double span = static_cast<double>(hi) - lo;
    for (float v : image.data()) {
        const double t = std::clamp((static_cast<double>(v) - lo) / span, 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
    }
    io::write_file_atomic(path, out);
}

} // namespace qspeckle
