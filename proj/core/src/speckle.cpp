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

#include "qspeckle/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qspeckle/hash.hpp"
#include "qspeckle/io.hpp"
#include "qspeckle/parallel.hpp"
#include "qspeckle/qtnsr.hpp"

namespace qspeckle::speckle {

namespace {

// Sub-stream index reserved for split shuffling; scenes use their own index.
constexpr std::uint64_t kSplitStream = ~std::uint64_t{0};

std::string sample_id(std::size_t scene, std::size_t patch, int variant) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "s%04zu_p%03zu_d%d", scene, patch, variant);
    return buf;
}

Image crop(const Image& img, std::size_t row0, std::size_t col0, std::size_t size) {
    Image out(size, size);
    for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) {
            out(r, c) = img(row0 + r, col0 + c);
        }
    }
    return out;
}

struct ScenePatch {
    std::size_t patch;
    Image noisy;
    Image clean;
};

std::vector<ScenePatch> generate_scene(const DatasetConfig& cfg, std::size_t scene) {
    Rng rng = stream_rng(cfg.seed, scene);
    const std::size_t n = cfg.scene_size;
    const Image terrain = synth_terrain(n, rng);

    std::vector<Image> stack;
    stack.reserve(cfg.stack_len);
    for (std::size_t t = 0; t < cfg.stack_len; ++t) {
        stack.push_back(apply_speckle(terrain, sample_speckle(n, n, cfg.looks, rng)));
    }
    const Image gt = temporal_average(stack);
    const Image noisy = apply_speckle(gt, sample_speckle(n, n, cfg.looks, rng));

    std::vector<ScenePatch> out;
    const std::size_t tiles = n / cfg.patch;
    for (std::size_t ty = 0; ty < tiles; ++ty) {
        for (std::size_t tx = 0; tx < tiles; ++tx) {
            Image clean = crop(gt, ty * cfg.patch, tx * cfg.patch, cfg.patch);
            const bool all_zero = std::all_of(clean.data().begin(), clean.data().end(),
                                              [](float v) { return v == 0.0f; });
            if (all_zero) {
                continue;
            }
            out.push_back({ty * tiles + tx, crop(noisy, ty * cfg.patch, tx * cfg.patch, cfg.patch), std::move(clean)});
        }
    }
    return out;
}

nlohmann::json entry_json(const ManifestEntry& e) {
    nlohmann::json j{{"id", e.id},       {"scene", e.scene}, {"patch", e.patch},
                     {"variant", e.variant}, {"noisy", e.noisy}, {"clean", e.clean}};
    if (!e.features.empty()) {
        j["features"] = e.features;
    }
    return j;
}

nlohmann::json config_json(const DatasetConfig& c) {
    return {{"seed", c.seed},
            {"looks", c.looks},
            {"n_scenes", c.n_scenes},
            {"stack_len", c.stack_len},
            {"scene_size", c.scene_size},
            {"patch", c.patch},
            {"augment", c.augment},
            {"splits", {{"train", c.splits.train}, {"val", c.splits.val}, {"test", c.splits.test}}}};
}

std::string compute_dataset_id(const DatasetManifest& m) {
    DatasetManifest bare = m;
    bare.dataset_id.clear();
    bare.circuit.reset();
    bare.spec_hash.clear();
    for (auto& split : bare.entries) {
        for (auto& e : split) {
            e.features.clear();
        }
    }
    return sha256_hex(to_json(bare).dump());
}

} // namespace

Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

SpeckleField sample_speckle(std::size_t height, std::size_t width, double looks, Rng& rng) {
    require(looks > 0.0 && std::isfinite(looks), ErrorKind::InvalidArgument,
            "speckle: number of looks must be positive, got " + std::to_string(looks));
    std::gamma_distribution<double> gamma(looks, 1.0 / looks);
    SpeckleField field{Image(height, width), looks};
    for (float& v : field.gains.data()) {
        v = static_cast<float>(gamma(rng));
    }
    return field;
}

Image temporal_average(std::span<const Image> stack) {
    require(!stack.empty(), ErrorKind::InvalidArgument, "temporal_average: empty stack");
    for (const Image& img : stack) {
        require_same_dims(stack.front(), img, "temporal_average");
    }
    const std::size_t n = stack.front().size();
    std::vector<double> acc(n, 0.0);
    for (const Image& img : stack) {
        const auto data = img.data();
        for (std::size_t i = 0; i < n; ++i) {
            acc[i] += data[i];
        }
    }
    Image out(stack.front().height(), stack.front().width());
    const double count = static_cast<double>(stack.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.data()[i] = static_cast<float>(acc[i] / count);
    }
    return out;
}

Image apply_speckle(const Image& gt, const SpeckleField& field) {
    require_same_dims(gt, field.gains, "apply_speckle");
    Image out(gt.height(), gt.width());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        out.data()[i] = gt.data()[i] * field.gains.data()[i];
    }
    return out;
}

Image dihedral(const Image& patch, int variant) {
    require(patch.height() == patch.width(), ErrorKind::Shape,
            "augment: patch must be square, got " + std::to_string(patch.height()) + "x" +
                std::to_string(patch.width()));
    require(variant >= 0 && variant < 8, ErrorKind::InvalidArgument, "augment: variant must be in [0, 8)");
    const std::size_t n = patch.height();
    Image cur = patch;
    for (int turn = 0; turn < variant % 4; ++turn) {
        Image rotated(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                rotated(i, j) = cur(j, n - 1 - i);
            }
        }
        cur = std::move(rotated);
    }
    if (variant >= 4) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n / 2; ++j) {
                std::swap(cur(i, j), cur(i, n - 1 - j));
            }
        }
    }
    return cur;
}

std::array<Image, 8> augment(const Image& patch) {
    std::array<Image, 8> out;
    for (int v = 0; v < 8; ++v) {
        out[static_cast<std::size_t>(v)] = dihedral(patch, v);
    }
    return out;
}

Image synth_terrain(std::size_t size, Rng& rng) {
    require(size >= 1, ErrorKind::InvalidArgument, "synth_terrain: size must be positive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double n = static_cast<double>(size);

    struct Site {
        double y, x, level;
    };
    const int n_sites = 3 + static_cast<int>(unit(rng) * 4.0);
    std::vector<Site> sites;
    for (int i = 0; i < n_sites; ++i) {
        sites.push_back({unit(rng) * n, unit(rng) * n, 0.05 + 0.55 * unit(rng)});
    }

    struct Blob {
        double y, x, sigma, amplitude;
    };
    const int n_blobs = 4 + static_cast<int>(unit(rng) * 7.0);
    std::vector<Blob> blobs;
    for (int i = 0; i < n_blobs; ++i) {
        blobs.push_back({unit(rng) * n, unit(rng) * n, n * (1.0 / 16.0 + unit(rng) * (1.0 / 4.0 - 1.0 / 16.0)),
                         -0.2 + 0.6 * unit(rng)});
    }

    Image out(size, size);
    for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) {
            const double y = static_cast<double>(r) + 0.5;
            const double x = static_cast<double>(c) + 0.5;
            double best = std::numeric_limits<double>::infinity();
            double v = 0.0;
            for (const Site& s : sites) {
                const double d = (y - s.y) * (y - s.y) + (x - s.x) * (x - s.x);
                if (d < best) {
                    best = d;
                    v = s.level;
                }
            }
            for (const Blob& b : blobs) {
                const double d = (y - b.y) * (y - b.y) + (x - b.x) * (x - b.x);
                v += b.amplitude * std::exp(-d / (2.0 * b.sigma * b.sigma));
            }
            out(r, c) = static_cast<float>(std::clamp(v, 0.01, 1.0));
        }
    }
    return out;
}

const char* split_name(Split split) {
    switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

void DatasetConfig::validate() const {
    const double total = splits.train + splits.val + splits.test;
    require(splits.train >= 0 && splits.val >= 0 && splits.test >= 0 && std::abs(total - 1.0) <= 1e-6,
            ErrorKind::InvalidArgument,
            "dataset: split fractions must be non-negative and sum to 1, got sum " + std::to_string(total));
    require(splits.train > 0, ErrorKind::InvalidArgument, "dataset: training fraction must be positive");
    require(n_scenes >= 1, ErrorKind::InvalidArgument, "dataset: need at least one scene");
    require(stack_len >= 1, ErrorKind::InvalidArgument, "dataset: stack length must be >= 1");
    require(looks > 0 && std::isfinite(looks), ErrorKind::InvalidArgument, "dataset: looks must be positive");
    require(patch >= 2, ErrorKind::InvalidArgument, "dataset: patch size must be >= 2");
    require(patch <= scene_size, ErrorKind::InvalidArgument,
            "dataset: patch " + std::to_string(patch) + " larger than scene " + std::to_string(scene_size));
}

std::array<std::size_t, 3> split_counts(std::size_t groups, const SplitFractions& fractions) {
    const std::array<double, 3> f{fractions.train, fractions.val, fractions.test};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double quota = f[i] * static_cast<double>(groups);
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += counts[i];
    }
    while (assigned < groups) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < 3; ++i) {
            if (remainder[i] > remainder[best]) {
                best = i;
            }
        }
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    while (assigned > groups) {
        // Only reachable through rounding noise in f * groups.
        auto it = std::max_element(counts.begin(), counts.end());
        --*it;
        --assigned;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (f[i] > 0 && counts[i] == 0) {
            auto donor = std::max_element(counts.begin(), counts.end());
            if (*donor > 1) {
                --*donor;
                ++counts[i];
            }
        }
    }
    return counts;
}

double percentile(std::vector<float> values, double q) {
    require(!values.empty(), ErrorKind::InvalidArgument, "percentile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return static_cast<double>(values[lo]) * (1.0 - t) + static_cast<double>(values[hi]) * t;
}

Dataset generate_dataset(const DatasetConfig& config) {
    config.validate();
    std::vector<std::vector<ScenePatch>> scenes(config.n_scenes);
    parallel_for(config.n_scenes, [&](std::size_t s) { scenes[s] = generate_scene(config, s); });

    struct Group {
        std::size_t scene;
        const ScenePatch* patch;
    };
    std::vector<Group> groups;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        for (const auto& p : scenes[s]) {
            groups.push_back({s, &p});
        }
    }
    require(!groups.empty(), ErrorKind::InvalidArgument, "dataset: every patch was discarded");

    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng = stream_rng(config.seed, kSplitStream);
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto counts = split_counts(groups.size(), config.splits);
    std::vector<Split> group_split(groups.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        group_split[order[rank]] = rank < counts[0] ? Split::Train
                                   : rank < counts[0] + counts[1] ? Split::Val
                                                                  : Split::Test;
    }

    Dataset ds;
    ds.config = config;
    ds.base_patches = groups.size();
    const int variants = config.augment ? 8 : 1;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const ScenePatch& p = *groups[g].patch;
        for (int v = 0; v < variants; ++v) {
            Sample sample;
            sample.id = sample_id(groups[g].scene, p.patch, v);
            sample.scene = groups[g].scene;
            sample.patch = p.patch;
            sample.variant = v;
            sample.split = group_split[g];
            sample.noisy = config.augment ? dihedral(p.noisy, v) : p.noisy;
            sample.clean = config.augment ? dihedral(p.clean, v) : p.clean;
            ds.samples.push_back(std::move(sample));
        }
    }

    std::vector<float> train_pixels;
    for (const auto& s : ds.samples) {
        if (s.split == Split::Train) {
            train_pixels.insert(train_pixels.end(), s.noisy.data().begin(), s.noisy.data().end());
        }
    }
    ds.norm = {percentile(train_pixels, 1.0), percentile(train_pixels, 99.0)};
    require(ds.norm.hi > ds.norm.lo, ErrorKind::InvalidArgument,
            "dataset: degenerate normalization bounds (constant training intensities)");
    return ds;
}

nlohmann::json to_json(const DatasetManifest& m) {
    nlohmann::json samples = nlohmann::json::object();
    for (Split s : kSplits) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& e : m.split(s)) {
            list.push_back(entry_json(e));
        }
        samples[split_name(s)] = std::move(list);
    }
    nlohmann::json j{{"format", "qspeckle-dataset/1"},
                     {"config", config_json(m.config)},
                     {"n_pairs", m.n_pairs},
                     {"base_patches", m.base_patches},
                     {"norm", {{"lo", m.norm.lo}, {"hi", m.norm.hi}}},
                     {"dataset_id", m.dataset_id},
                     {"samples", std::move(samples)}};
    if (m.circuit) {
        j["circuit"] = qsim::to_json(*m.circuit);
        j["spec_hash"] = m.spec_hash;
    }
    return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == "qspeckle-dataset/1", ErrorKind::Format,
                "manifest: unsupported format");
        DatasetManifest m;
        const auto& c = j.at("config");
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.looks = c.at("looks").get<double>();
        m.config.n_scenes = c.at("n_scenes").get<std::size_t>();
        m.config.stack_len = c.at("stack_len").get<std::size_t>();
        m.config.scene_size = c.at("scene_size").get<std::size_t>();
        m.config.patch = c.at("patch").get<std::size_t>();
        m.config.augment = c.at("augment").get<bool>();
        m.config.splits = {c.at("splits").at("train").get<double>(), c.at("splits").at("val").get<double>(),
                           c.at("splits").at("test").get<double>()};
        m.n_pairs = j.at("n_pairs").get<std::size_t>();
        m.base_patches = j.at("base_patches").get<std::size_t>();
        m.norm = {j.at("norm").at("lo").get<double>(), j.at("norm").at("hi").get<double>()};
        m.dataset_id = j.at("dataset_id").get<std::string>();
        for (Split s : kSplits) {
            for (const auto& e : j.at("samples").at(split_name(s))) {
                ManifestEntry entry;
                entry.id = e.at("id").get<std::string>();
                entry.scene = e.at("scene").get<std::size_t>();
                entry.patch = e.at("patch").get<std::size_t>();
                entry.variant = e.at("variant").get<int>();
                entry.noisy = e.at("noisy").get<std::string>();
                entry.clean = e.at("clean").get<std::string>();
                entry.features = e.value("features", std::string{});
                m.split(s).push_back(std::move(entry));
            }
        }
        if (j.contains("circuit")) {
            m.circuit = qsim::circuit_from_json(j.at("circuit"));
            m.spec_hash = j.at("spec_hash").get<std::string>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("manifest json: ") + e.what());
    }
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
    const auto path = dir / kManifestFile;
    io::require_exists(path, "dataset manifest");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

void save_manifest(const std::filesystem::path& dir, const DatasetManifest& manifest) {
    io::write_file_atomic(dir / kManifestFile, to_json(manifest).dump(2) + "\n");
}

DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& dir, bool preview) {
    const Dataset ds = generate_dataset(config);
    DatasetManifest m;
    m.config = config;
    m.n_pairs = ds.samples.size();
    m.base_patches = ds.base_patches;
    m.norm = ds.norm;

    for (const Sample& s : ds.samples) {
        ManifestEntry e;
        e.id = s.id;
        e.scene = s.scene;
        e.patch = s.patch;
        e.variant = s.variant;
        e.noisy = "samples/" + s.id + "_noisy.qtnsr";
        e.clean = "samples/" + s.id + "_clean.qtnsr";
        qtnsr::save(dir / e.noisy, s.noisy.tensor());
        qtnsr::save(dir / e.clean, s.clean.tensor());
        if (preview) {
            const auto hi = static_cast<float>(ds.norm.hi);
            write_pgm(dir / "previews" / (s.id + "_noisy.pgm"), s.noisy, 0.0f, hi);
            write_pgm(dir / "previews" / (s.id + "_clean.pgm"), s.clean, 0.0f, hi);
        }
        m.split(s.split).push_back(std::move(e));
    }
    m.dataset_id = compute_dataset_id(m);
    save_manifest(dir, m);
    return m;
}

} // namespace qspeckle::speckle
