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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspeckle/image.hpp"
#include "qspeckle/qsim.hpp"
#include "qspeckle/quanv.hpp"

namespace qspeckle::speckle {

using Rng = std::mt19937_64;

/// Independent generator for sub-stream `stream` of a master seed. Used so
/// per-scene output does not depend on scheduling.
Rng stream_rng(std::uint64_t seed, std::uint64_t stream);

/// Multiplicative speckle gains: i.i.d. Gamma(shape = L, scale = 1/L),
/// so mean 1 and variance 1/L.
struct SpeckleField {
    Image gains;
    double looks = 1.0;
};

SpeckleField sample_speckle(std::size_t height, std::size_t width, double looks, Rng& rng);

/// Per-pixel arithmetic mean of a co-registered stack.
Image temporal_average(std::span<const Image> stack);

/// gt * field, elementwise. No log transform anywhere.
Image apply_speckle(const Image& gt, const SpeckleField& field);

/// Element `variant` (0..7) of the dihedral orbit of a square patch:
/// variant % 4 quarter turns counter-clockwise, then a horizontal flip when
/// variant >= 4.
Image dihedral(const Image& patch, int variant);

/// All 8 dihedral variants, in variant order.
std::array<Image, 8> augment(const Image& patch);

/// Smooth synthetic backscatter texture in [0.01, 1]: piecewise-constant
/// Voronoi fields plus Gaussian blobs.
Image synth_terrain(std::size_t size, Rng& rng);

struct SplitFractions {
    double train = 0.758;
    double val = 0.228;
    double test = 0.014;

    friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

enum class Split { Train = 0, Val = 1, Test = 2 };
inline constexpr std::array<Split, 3> kSplits{Split::Train, Split::Val, Split::Test};
const char* split_name(Split split);

struct DatasetConfig {
    std::uint64_t seed = 0;
    double looks = 1.0;
    std::size_t n_scenes = 24;
    std::size_t stack_len = 16;
    std::size_t scene_size = 64;
    std::size_t patch = 64;
    SplitFractions splits;
    bool augment = false;

    void validate() const;
    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct Sample {
    std::string id;
    std::size_t scene = 0;
    std::size_t patch = 0;
    int variant = 0;
    Split split = Split::Train;
    Image noisy;
    Image clean;
};

struct Dataset {
    DatasetConfig config;
    std::vector<Sample> samples;
    /// Patches cut before augmentation, after discarding constant-zero ones.
    std::size_t base_patches = 0;
    quanv::NormBounds norm;
};

/// Splits `groups` items by largest remainder; every split with a positive
/// fraction gets at least one item when there are enough items.
std::array<std::size_t, 3> split_counts(std::size_t groups, const SplitFractions& fractions);

/// Linear-interpolated percentile (q in [0, 100]) of `values`.
double percentile(std::vector<float> values, double q);

/// Generates every scene, pair and split assignment in memory. Splits are
/// assigned per base patch so all dihedral variants of a patch share a split.
/// Normalization bounds are the 1st/99th percentiles of training noisy pixels.
Dataset generate_dataset(const DatasetConfig& config);

struct ManifestEntry {
    std::string id;
    std::size_t scene = 0;
    std::size_t patch = 0;
    int variant = 0;
    std::string noisy;
    std::string clean;
    /// Empty until the dataset has been quanvolved.
    std::string features;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    DatasetConfig config;
    std::size_t n_pairs = 0;
    std::size_t base_patches = 0;
    quanv::NormBounds norm;
    std::string dataset_id;
    std::array<std::vector<ManifestEntry>, 3> entries;
    std::optional<qsim::CircuitSpec> circuit;
    std::string spec_hash;

    const std::vector<ManifestEntry>& split(Split s) const { return entries[static_cast<std::size_t>(s)]; }
    std::vector<ManifestEntry>& split(Split s) { return entries[static_cast<std::size_t>(s)]; }

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline constexpr const char* kManifestFile = "manifest.json";

nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);
DatasetManifest load_manifest(const std::filesystem::path& dir);
void save_manifest(const std::filesystem::path& dir, const DatasetManifest& manifest);

/// generate_dataset + QTNSR sample files + manifest under `dir`. Optional
/// 8-bit PGM previews under dir/previews.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& dir,
                              bool preview = false);

} // namespace qspeckle::speckle
