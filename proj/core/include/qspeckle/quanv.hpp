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
#include <vector>

#include "qspeckle/image.hpp"
#include "qspeckle/qsim.hpp"

namespace qspeckle::quanv {

inline constexpr std::size_t kKernel = 3;
inline constexpr int kQubits = 9;

/// Intensity range mapped onto [0, 1] before angle encoding.
struct NormBounds {
    double lo = 0.0;
    double hi = 1.0;

    friend bool operator==(const NormBounds&, const NormBounds&) = default;
};

enum class Execution { Parallel, Serial };

/// angle = value * pi, for value already clamped to [0, 1].
double encode_pixel(double value);

/// (v - lo) / (hi - lo) clamped to [0, 1].
double normalize(double value, NormBounds norm);

/// Stride-1 3x3 quanvolution with reflect padding (edge not repeated). Patch
/// pixels feed qubits row-major: top-left is qubit 0, bottom-right qubit 8.
/// Output channel q holds <Z_q>.
FeatureMap quanvolve_image(const Image& image, const qsim::CircuitSpec& spec, NormBounds norm,
                           Execution execution = Execution::Parallel);

struct PairInput {
    Image noisy;
    Image clean;
};

struct QuanvolvedSample {
    FeatureMap features;
    Image noisy;
    Image clean;
};

/// Quanvolves each noisy image; noisy and clean images are passed through.
/// Parallel across images. Errors name the offending sample index.
std::vector<QuanvolvedSample> quanvolve_dataset(const std::vector<PairInput>& pairs,
                                                const qsim::CircuitSpec& spec, NormBounds norm,
                                                Execution execution = Execution::Parallel);

} // namespace qspeckle::quanv
