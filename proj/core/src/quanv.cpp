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

#include "qspeckle/quanv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qspeckle/parallel.hpp"

namespace qspeckle::quanv {

namespace {

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) {
        return 0;
    }
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    if (i < 0) {
        i = -i;
    }
    if (i > last) {
        i = 2 * last - i;
    }
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last));
}

void quanvolve_row(const Image& image, const qsim::CircuitSpec& spec, NormBounds norm, std::size_t row,
                   std::span<float> out_row) {
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    std::array<double, kQubits> angles{};
    std::array<double, kQubits> expectations{};
    for (std::size_t col = 0; col < w; ++col) {
        std::size_t q = 0;
        for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
            const std::size_t y = reflect(static_cast<std::ptrdiff_t>(row) + dy, h);
            for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                const std::size_t x = reflect(static_cast<std::ptrdiff_t>(col) + dx, w);
                angles[q++] = encode_pixel(normalize(image(y, x), norm));
            }
        }
        qsim::run_basic_entangler(angles, spec, expectations);
        for (std::size_t c = 0; c < kQubits; ++c) {
            // The probability sum can overshoot 1 by an ulp.
            out_row[col * kQubits + c] = static_cast<float>(std::clamp(expectations[c], -1.0, 1.0));
        }
    }
}

} // namespace

double encode_pixel(double value) {
    return value * std::numbers::pi;
}

double normalize(double value, NormBounds norm) {
    return std::clamp((value - norm.lo) / (norm.hi - norm.lo), 0.0, 1.0);
}

FeatureMap quanvolve_image(const Image& image, const qsim::CircuitSpec& spec, NormBounds norm,
                           Execution execution) {
    require(!image.empty(), ErrorKind::InvalidArgument, "quanvolve: empty image");
    require(norm.hi > norm.lo && std::isfinite(norm.lo) && std::isfinite(norm.hi), ErrorKind::InvalidArgument,
            "quanvolve: normalization requires finite hi > lo");
    require(spec.n_qubits == kQubits, ErrorKind::InvalidArgument,
            "quanvolve: a 3x3 kernel needs a 9-qubit circuit, got " + std::to_string(spec.n_qubits));
    spec.validate();
    for (float v : image.data()) {
        require(std::isfinite(v), ErrorKind::Numeric, "quanvolve: non-finite pixel");
    }

    const std::size_t h = image.height();
    const std::size_t w = image.width();
    Tensor out({h, w, static_cast<std::size_t>(kQubits)});
    const std::span<float> dst = out.data();
    auto body = [&](std::size_t row) {
        quanvolve_row(image, spec, norm, row, dst.subspan(row * w * kQubits, w * kQubits));
    };
    if (execution == Execution::Parallel) {
        parallel_for(h, body);
    } else {
        for (std::size_t row = 0; row < h; ++row) {
            body(row);
        }
    }
    return FeatureMap(std::move(out));
}

std::vector<QuanvolvedSample> quanvolve_dataset(const std::vector<PairInput>& pairs,
                                                const qsim::CircuitSpec& spec, NormBounds norm,
                                                Execution execution) {
    require(!pairs.empty(), ErrorKind::InvalidArgument, "quanvolve_dataset: empty dataset");
    std::vector<QuanvolvedSample> out(pairs.size());
    auto body = [&](std::size_t i) {
        try {
            out[i] = QuanvolvedSample{quanvolve_image(pairs[i].noisy, spec, norm, Execution::Serial),
                                      pairs[i].noisy, pairs[i].clean};
        } catch (const Error& e) {
            fail(e.kind(), "sample " + std::to_string(i) + ": " + e.what());
        }
    };
    if (execution == Execution::Parallel) {
        parallel_for(pairs.size(), body);
    } else {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            body(i);
        }
    }
    return out;
}

} // namespace qspeckle::quanv
