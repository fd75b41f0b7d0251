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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspeckle/denoiser.hpp"
#include "qspeckle/metrics.hpp"
#include "qspeckle/speckle.hpp"

/// File-based pipeline stages shared by the CLI and the end-to-end tests.
/// Every stage validates its inputs before doing any work and writes outputs
/// through temp-then-rename.
namespace qspeckle::pipeline {

struct PipelineConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path model_path = "model.qsf";
    std::filesystem::path report_path = "report.json";
    speckle::DatasetConfig dataset;
    bool preview = false;
    qsim::CircuitSpec circuit = qsim::CircuitSpec::from_seed(quanv::kQubits, 1, 0);
    denoiser::TrainConfig train;
    std::string eval_split = "test";

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

speckle::DatasetManifest run_synth(const std::filesystem::path& dir, const speckle::DatasetConfig& config,
                                   bool preview = false);

struct QuanvolveStats {
    std::size_t computed = 0;
    std::size_t cached = 0;
};

/// Feature files live at dir/features/<key>.qtnsr with key =
/// sha256(noisy file hash, spec hash, norm bounds). Existing files are
/// reused without being rewritten.
QuanvolveStats run_quanvolve(const std::filesystem::path& dir, const qsim::CircuitSpec& spec);

/// Loads a split with its quanvolved features. Throws ErrorKind::Io when the
/// dataset has not been quanvolved.
std::vector<denoiser::TrainSample> load_split(const std::filesystem::path& dir,
                                              const speckle::DatasetManifest& manifest, speckle::Split split);

struct TrainOutput {
    denoiser::Checkpoint checkpoint;
    denoiser::TrainResult result;
};

/// Trains on the train split, selects on val, writes the checkpoint and a
/// history file next to it (<model>.history.json).
TrainOutput run_train(const std::filesystem::path& dir, const std::filesystem::path& model_path,
                      const denoiser::TrainConfig& config, const denoiser::EpochCallback& on_epoch = {});

std::filesystem::path history_path(const std::filesystem::path& model_path);

/// Scores model output and the speckled input against the clean images of
/// `split`. Refuses with ErrorKind::HashMismatch when the checkpoint was
/// trained on features from a different circuit or normalization.
metrics::EvalReport run_eval(const std::filesystem::path& model_path, const std::filesystem::path& dir,
                             speckle::Split split, const std::filesystem::path& report_path,
                             const std::optional<std::filesystem::path>& csv_path = std::nullopt);

/// Denoises one QTNSR image. `spec`, when given, must match the checkpoint.
Image run_denoise(const std::filesystem::path& model_path, const std::filesystem::path& input,
                  const std::filesystem::path& output, const std::optional<qsim::CircuitSpec>& spec = std::nullopt,
                  const std::optional<std::filesystem::path>& preview = std::nullopt);

speckle::Split parse_split(std::string_view name);

} // namespace qspeckle::pipeline
