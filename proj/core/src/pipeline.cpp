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

#include "qspeckle/pipeline.hpp"

#include <bit>
#include <cstdio>

#include "qspeckle/checkpoint.hpp"
#include "qspeckle/hash.hpp"
#include "qspeckle/io.hpp"
#include "qspeckle/parallel.hpp"
#include "qspeckle/qtnsr.hpp"

namespace qspeckle::pipeline {

namespace {

std::string hex_bits(double v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
    return buf;
}

std::string feature_key(std::string_view noisy_bytes, const std::string& spec_hash, quanv::NormBounds norm) {
    return sha256_hex(sha256_hex(noisy_bytes) + ":" + spec_hash + ":" + hex_bits(norm.lo) + ":" + hex_bits(norm.hi));
}

} // namespace

speckle::Split parse_split(std::string_view name) {
    for (auto s : speckle::kSplits) {
        if (name == speckle::split_name(s)) {
            return s;
        }
    }
    fail(ErrorKind::InvalidArgument, "split must be train, val or test; got '" + std::string(name) + "'");
}

nlohmann::json to_json(const PipelineConfig& c) {
    const auto& d = c.dataset;
    return {{"data_dir", c.data_dir.string()},
            {"model_path", c.model_path.string()},
            {"report_path", c.report_path.string()},
            {"dataset",
             {{"seed", d.seed},
              {"looks", d.looks},
              {"n_scenes", d.n_scenes},
              {"stack_len", d.stack_len},
              {"scene_size", d.scene_size},
              {"patch", d.patch},
              {"augment", d.augment},
              {"splits", {{"train", d.splits.train}, {"val", d.splits.val}, {"test", d.splits.test}}}}},
            {"preview", c.preview},
            {"circuit", qsim::to_json(c.circuit)},
            {"train", denoiser::to_json(c.train)},
            {"eval_split", c.eval_split}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    try {
        PipelineConfig c;
        c.data_dir = j.value("data_dir", c.data_dir.string());
        c.model_path = j.value("model_path", c.model_path.string());
        c.report_path = j.value("report_path", c.report_path.string());
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            c.dataset.seed = d.value("seed", c.dataset.seed);
            c.dataset.looks = d.value("looks", c.dataset.looks);
            c.dataset.n_scenes = d.value("n_scenes", c.dataset.n_scenes);
            c.dataset.stack_len = d.value("stack_len", c.dataset.stack_len);
            c.dataset.scene_size = d.value("scene_size", c.dataset.scene_size);
            c.dataset.patch = d.value("patch", c.dataset.patch);
            c.dataset.augment = d.value("augment", c.dataset.augment);
            if (d.contains("splits")) {
                const auto& s = d.at("splits");
                if (s.is_object()) {
                    c.dataset.splits = {s.at("train").get<double>(), s.at("val").get<double>(),
                                        s.at("test").get<double>()};
                } else {
                    const auto v = s.get<std::vector<double>>();
                    require(v.size() == 3, ErrorKind::InvalidArgument, "config: splits needs three fractions");
                    c.dataset.splits = {v[0], v[1], v[2]};
                }
            }
        }
        c.preview = j.value("preview", c.preview);
        if (j.contains("circuit")) {
            c.circuit = qsim::circuit_from_json(j.at("circuit"));
        }
        if (j.contains("train")) {
            c.train = denoiser::train_config_from_json(j.at("train"));
        }
        c.eval_split = j.value("eval_split", c.eval_split);
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("pipeline config: ") + e.what());
    }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    io::require_exists(path, "config file");
    try {
        return pipeline_config_from_json(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

speckle::DatasetManifest run_synth(const std::filesystem::path& dir, const speckle::DatasetConfig& config,
                                   bool preview) {
    config.validate();
    return speckle::build_dataset(config, dir, preview);
}

QuanvolveStats run_quanvolve(const std::filesystem::path& dir, const qsim::CircuitSpec& spec) {
    spec.validate();
    require(spec.n_qubits == quanv::kQubits, ErrorKind::InvalidArgument,
            "quanvolve: the 3x3 kernel needs a 9-qubit circuit");
    auto manifest = speckle::load_manifest(dir);
    const std::string hash = qsim::spec_hash(spec);

    struct Job {
        speckle::ManifestEntry* entry;
        Image noisy;
        std::string key;
    };
    std::vector<Job> jobs;
    for (auto& split : manifest.entries) {
        for (auto& e : split) {
            io::require_exists(dir / e.noisy, "noisy sample");
        }
    }
    QuanvolveStats stats;
    for (auto& split : manifest.entries) {
        for (auto& e : split) {
            const std::string bytes = io::read_file(dir / e.noisy);
            const std::string key = feature_key(bytes, hash, manifest.norm);
            e.features = "features/" + key + ".qtnsr";
            if (std::filesystem::exists(dir / e.features)) {
                ++stats.cached;
                continue;
            }
            jobs.push_back({&e, Image(qtnsr::decode(bytes)), key});
        }
    }
    stats.computed = jobs.size();
    parallel_for(jobs.size(), [&](std::size_t i) {
        try {
            const auto fm = quanv::quanvolve_image(jobs[i].noisy, spec, manifest.norm, quanv::Execution::Serial);
            qtnsr::save(dir / jobs[i].entry->features, fm.tensor());
        } catch (const Error& e) {
            fail(e.kind(), "sample " + jobs[i].entry->id + ": " + e.what());
        }
    });
    manifest.circuit = spec;
    manifest.spec_hash = hash;
    speckle::save_manifest(dir, manifest);
    return stats;
}

std::vector<denoiser::TrainSample> load_split(const std::filesystem::path& dir,
                                              const speckle::DatasetManifest& manifest, speckle::Split split) {
    require(manifest.circuit.has_value(), ErrorKind::Io,
            "dataset at " + dir.string() + " has not been quanvolved; run `qspeckle quanvolve` first");
    const auto& entries = manifest.split(split);
    for (const auto& e : entries) {
        require(!e.features.empty(), ErrorKind::Io, "sample " + e.id + " has no feature file");
        io::require_exists(dir / e.features, "feature file");
        io::require_exists(dir / e.noisy, "noisy sample");
        io::require_exists(dir / e.clean, "clean sample");
    }
    std::vector<denoiser::TrainSample> out(entries.size());
    parallel_for(entries.size(), [&](std::size_t i) {
        const auto& e = entries[i];
        out[i] = {e.id, FeatureMap(qtnsr::load(dir / e.features)), Image(qtnsr::load(dir / e.noisy)),
                  Image(qtnsr::load(dir / e.clean))};
    });
    return out;
}

std::filesystem::path history_path(const std::filesystem::path& model_path) {
    auto p = model_path;
    p += ".history.json";
    return p;
}

TrainOutput run_train(const std::filesystem::path& dir, const std::filesystem::path& model_path,
                      const denoiser::TrainConfig& config, const denoiser::EpochCallback& on_epoch) {
    config.validate();
    const auto manifest = speckle::load_manifest(dir);
    const auto train_set = load_split(dir, manifest, speckle::Split::Train);
    const auto val_set = load_split(dir, manifest, speckle::Split::Val);
    require(!train_set.empty(), ErrorKind::InvalidArgument, "train: the training split is empty");

    const auto init = denoiser::DenoiserModel::init(denoiser::Architecture{}, config.seed);
    TrainOutput out;
    out.result = denoiser::train(train_set, val_set, init, config, on_epoch);

    auto& ckpt = out.checkpoint;
    ckpt.model = out.result.model;
    ckpt.circuit = *manifest.circuit;
    ckpt.spec_hash = manifest.spec_hash;
    ckpt.norm = manifest.norm;
    ckpt.weights = config.weights;
    ckpt.train_config = config;
    ckpt.dataset_id = manifest.dataset_id;
    ckpt.best_epoch = out.result.best_epoch;
    checkpoint::save(model_path, ckpt);

    nlohmann::json history = nlohmann::json::array();
    for (const auto& s : out.result.history) {
        history.push_back(denoiser::to_json(s));
    }
    const nlohmann::json report{{"model_id", checkpoint::model_id(ckpt)},
                                {"dataset_id", manifest.dataset_id},
                                {"best_epoch", out.result.best_epoch},
                                {"selection_split", out.result.selection_split},
                                {"train", denoiser::to_json(config)},
                                {"history", std::move(history)}};
    io::write_file_atomic(history_path(model_path), report.dump(2) + "\n");
    return out;
}

metrics::EvalReport run_eval(const std::filesystem::path& model_path, const std::filesystem::path& dir,
                             speckle::Split split, const std::filesystem::path& report_path,
                             const std::optional<std::filesystem::path>& csv_path) {
    io::require_exists(model_path, "model checkpoint");
    const auto ckpt = checkpoint::load(model_path);
    const auto manifest = speckle::load_manifest(dir);
    require(manifest.circuit.has_value(), ErrorKind::Io,
            "dataset at " + dir.string() + " has not been quanvolved; run `qspeckle quanvolve` first");
    require(ckpt.spec_hash == manifest.spec_hash, ErrorKind::HashMismatch,
            "eval: model was trained with circuit " + ckpt.spec_hash + " but the dataset features use " +
                manifest.spec_hash);
    require(ckpt.norm == manifest.norm, ErrorKind::HashMismatch,
            "eval: model and dataset use different normalization bounds");

    const auto samples = load_split(dir, manifest, split);
    require(!samples.empty(), ErrorKind::InvalidArgument,
            std::string("eval: split '") + speckle::split_name(split) + "' is empty");
    std::vector<metrics::SampleReport> scored(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const auto& s = samples[i];
        const auto out = denoiser::forward(ckpt.model, s.features, s.noisy);
        scored[i] = metrics::score_sample(s.id, s.noisy, out.denoised, s.clean,
                                          std::min<std::size_t>({8, s.clean.height(), s.clean.width()}));
    });
    auto report = metrics::summarize(std::move(scored), checkpoint::model_id(ckpt), manifest.dataset_id,
                                     speckle::split_name(split),
                                     std::min<std::size_t>({8, samples.front().clean.height(),
                                                            samples.front().clean.width()}));
    io::write_file_atomic(report_path, metrics::to_json(report).dump(2) + "\n");
    if (csv_path) {
        io::write_file_atomic(*csv_path, metrics::to_csv(report));
    }
    return report;
}

Image run_denoise(const std::filesystem::path& model_path, const std::filesystem::path& input,
                  const std::filesystem::path& output, const std::optional<qsim::CircuitSpec>& spec,
                  const std::optional<std::filesystem::path>& preview) {
    io::require_exists(model_path, "model checkpoint");
    io::require_exists(input, "input image");
    const auto ckpt = checkpoint::load(model_path);
    const Image noisy(qtnsr::load(input));
    const Image denoised = denoiser::predict_image(ckpt, spec.value_or(ckpt.circuit), ckpt.norm, noisy);
    qtnsr::save(output, denoised.tensor());
    if (preview) {
        write_pgm(*preview, denoised, 0.0f, static_cast<float>(ckpt.norm.hi));
    }
    return denoised;
}

} // namespace qspeckle::pipeline
