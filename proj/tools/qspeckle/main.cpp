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

// qspeckle: command-line front end for the dataset, quanvolution, training,
// evaluation and inference stages. Every stage reads and writes files so the
// expensive quanvolution step is cached between runs.
//
// Exit codes: 0 ok, 1 internal, 2 invalid arguments, 3 missing input,
// 4 hash mismatch, 5 malformed file or shape, 6 numerical failure,
// 7 selftest failure. Failures print one JSON object on stderr.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qspeckle/checkpoint.hpp"
#include "qspeckle/error.hpp"
#include "qspeckle/io.hpp"
#include "qspeckle/parallel.hpp"
#include "qspeckle/pipeline.hpp"
#include "qspeckle_oracles/selftest.hpp"

namespace {

using namespace qspeckle;
namespace fs = std::filesystem;

constexpr int kExitSelftest = 7;

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument:
        return 2;
    case ErrorKind::Io:
        return 3;
    case ErrorKind::HashMismatch:
        return 4;
    case ErrorKind::Shape:
    case ErrorKind::Format:
        return 5;
    case ErrorKind::Numeric:
        return 6;
    }
    return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    return code;
}

void emit(const nlohmann::json& j) { std::cout << j.dump() << std::endl; }

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        const std::string part = text.substr(start, end - start);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used == part.size() && !part.empty(), ErrorKind::InvalidArgument,
                "--splits expects three comma-separated numbers, got '" + text + "'");
        out.push_back(v);
        start = end + 1;
    }
    require(out.size() == 3, ErrorKind::InvalidArgument,
            "--splits expects three comma-separated numbers, got '" + text + "'");
    return out;
}

qsim::CircuitSpec load_spec(const fs::path& path) {
    io::require_exists(path, "circuit spec");
    try {
        return qsim::circuit_from_json(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

// Option values, applied on top of an optional --config file only when the
// flag was given on the command line.
struct Args {
    std::string config;

    std::string out, data, model, input, csv, preview_path, spec_path, split;
    std::uint64_t seed = 0, circuit_seed = 0;
    double looks = 1.0;
    std::size_t scenes = 0, stack = 0, scene_size = 0, patch = 0;
    std::string splits;
    bool augment = false, preview = false;
    int layers = 1;
    std::size_t epochs = 0, batch = 0;
    double lr = 0, alpha = 0, beta = 0, gamma = 0;
    std::string ssim_mode;
};

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

pipeline::PipelineConfig base_config(const Args& a) {
    return a.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_pipeline_config(a.config);
}

int cmd_synth(const CLI::App* app, const Args& a) {
    auto cfg = base_config(a);
    auto& d = cfg.dataset;
    if (given(app, "--seed")) d.seed = a.seed;
    if (given(app, "--looks")) d.looks = a.looks;
    if (given(app, "--scenes")) d.n_scenes = a.scenes;
    if (given(app, "--stack")) d.stack_len = a.stack;
    if (given(app, "--scene-size")) d.scene_size = a.scene_size;
    if (given(app, "--patch")) d.patch = a.patch;
    if (given(app, "--augment")) d.augment = a.augment;
    if (given(app, "--preview")) cfg.preview = a.preview;
    if (given(app, "--out")) cfg.data_dir = a.out;
    if (given(app, "--splits")) {
        const auto f = parse_fractions(a.splits);
        d.splits = {f[0], f[1], f[2]};
    }
    const auto manifest = pipeline::run_synth(cfg.data_dir, d, cfg.preview);
    emit({{"command", "synth"},
          {"dir", cfg.data_dir.string()},
          {"dataset_id", manifest.dataset_id},
          {"samples", manifest.n_pairs},
          {"train", manifest.split(speckle::Split::Train).size()},
          {"val", manifest.split(speckle::Split::Val).size()},
          {"test", manifest.split(speckle::Split::Test).size()}});
    return 0;
}

int cmd_quanvolve(const CLI::App* app, const Args& a) {
    auto cfg = base_config(a);
    if (given(app, "--data")) cfg.data_dir = a.data;
    if (given(app, "--spec")) {
        cfg.circuit = load_spec(a.spec_path);
    } else if (given(app, "--layers") || given(app, "--circuit-seed")) {
        cfg.circuit = qsim::CircuitSpec::from_seed(quanv::kQubits, given(app, "--layers") ? a.layers : cfg.circuit.n_layers,
                                                   given(app, "--circuit-seed") ? a.circuit_seed : cfg.circuit.seed);
    }
    const auto stats = pipeline::run_quanvolve(cfg.data_dir, cfg.circuit);
    emit({{"command", "quanvolve"},
          {"dir", cfg.data_dir.string()},
          {"spec_hash", qsim::spec_hash(cfg.circuit)},
          {"computed", stats.computed},
          {"cached", stats.cached}});
    return 0;
}

int cmd_train(const CLI::App* app, const Args& a) {
    auto cfg = base_config(a);
    auto& t = cfg.train;
    if (given(app, "--data")) cfg.data_dir = a.data;
    if (given(app, "--out")) cfg.model_path = a.out;
    if (given(app, "--epochs")) t.epochs = a.epochs;
    if (given(app, "--batch")) t.batch = a.batch;
    if (given(app, "--lr")) t.lr = a.lr;
    if (given(app, "--seed")) t.seed = a.seed;
    if (given(app, "--alpha")) t.weights.alpha = a.alpha;
    if (given(app, "--beta")) t.weights.beta = a.beta;
    if (given(app, "--gamma")) t.weights.gamma = a.gamma;
    if (given(app, "--ssim-mode")) t.weights.ssim_mode = denoiser::parse_ssim_mode(a.ssim_mode);
    const auto out = pipeline::run_train(cfg.data_dir, cfg.model_path, t, [](const denoiser::EpochStats& s) {
        std::cerr << denoiser::to_json(s).dump() << "\n";
    });
    emit({{"command", "train"},
          {"model", cfg.model_path.string()},
          {"model_id", checkpoint::model_id(out.checkpoint)},
          {"best_epoch", out.result.best_epoch},
          {"history", pipeline::history_path(cfg.model_path).string()}});
    return 0;
}

int cmd_eval(const CLI::App* app, const Args& a) {
    auto cfg = base_config(a);
    if (given(app, "--data")) cfg.data_dir = a.data;
    if (given(app, "--model")) cfg.model_path = a.model;
    if (given(app, "--out")) cfg.report_path = a.out;
    if (given(app, "--split")) cfg.eval_split = a.split;
    std::optional<fs::path> csv;
    if (given(app, "--csv")) csv = a.csv;
    const auto report =
        pipeline::run_eval(cfg.model_path, cfg.data_dir, pipeline::parse_split(cfg.eval_split), cfg.report_path, csv);
    emit({{"command", "eval"},
          {"report", cfg.report_path.string()},
          {"split", report.split},
          {"samples", report.sample_count},
          {"speckled", {{"psnr", metrics::number_or_inf(report.speckled_mean.psnr)},
                        {"ssim", report.speckled_mean.ssim}}},
          {"denoised", {{"psnr", metrics::number_or_inf(report.denoised_mean.psnr)},
                        {"ssim", report.denoised_mean.ssim}}}});
    return 0;
}

int cmd_denoise(const CLI::App* app, const Args& a) {
    std::optional<qsim::CircuitSpec> spec;
    if (given(app, "--spec")) spec = load_spec(a.spec_path);
    std::optional<fs::path> preview;
    if (given(app, "--preview")) preview = a.preview_path;
    const auto img = pipeline::run_denoise(a.model, a.input, a.out, spec, preview);
    emit({{"command", "denoise"}, {"output", a.out}, {"height", img.height()}, {"width", img.width()}});
    return 0;
}

int cmd_selftest() {
    const auto results = oracle::run_selftest();
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) {
            std::cout << " (" << r.detail << ")";
        }
        std::cout << "\n";
    }
    std::cout << std::flush;
    return all ? 0 : kExitSelftest;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speckle denoising with quanvolution features"};
    app.require_subcommand(1);
    Args a;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic speckled dataset");
    synth->add_option("--config", a.config, "Pipeline config JSON")->check(CLI::ExistingFile);
    synth->add_option("--out", a.out, "Dataset directory");
    synth->add_option("--seed", a.seed, "Dataset seed");
    synth->add_option("--looks", a.looks, "Number of looks L");
    synth->add_option("--scenes", a.scenes, "Number of scenes");
    synth->add_option("--stack", a.stack, "Temporal stack length for ground truth");
    synth->add_option("--scene-size", a.scene_size, "Scene side length in pixels");
    synth->add_option("--patch", a.patch, "Patch side length in pixels");
    synth->add_option("--splits", a.splits, "train,val,test fractions");
    synth->add_flag("--augment", a.augment, "Add the 8 dihedral variants of each patch");
    synth->add_flag("--preview", a.preview, "Write 8-bit PGM previews");

    auto* quanvolve = app.add_subcommand("quanvolve", "Compute quanvolution features for a dataset");
    quanvolve->add_option("--config", a.config, "Pipeline config JSON")->check(CLI::ExistingFile);
    quanvolve->add_option("--data", a.data, "Dataset directory");
    quanvolve->add_option("--layers", a.layers, "Entangling layers");
    quanvolve->add_option("--circuit-seed", a.circuit_seed, "Seed for the circuit weights");
    quanvolve->add_option("--spec", a.spec_path, "Circuit spec JSON (overrides --layers/--circuit-seed)");

    auto* train = app.add_subcommand("train", "Train the residual denoiser");
    train->add_option("--config", a.config, "Pipeline config JSON")->check(CLI::ExistingFile);
    train->add_option("--data", a.data, "Dataset directory");
    train->add_option("--out", a.out, "Checkpoint path");
    train->add_option("--epochs", a.epochs, "Epochs");
    train->add_option("--batch", a.batch, "Mini-batch size");
    train->add_option("--lr", a.lr, "Learning rate");
    train->add_option("--seed", a.seed, "Initialization and shuffling seed");
    train->add_option("--alpha", a.alpha, "Weight of the MSE term");
    train->add_option("--beta", a.beta, "Weight of the SSIM term");
    train->add_option("--gamma", a.gamma, "Weight of the TV term");
    train->add_option("--ssim-mode", a.ssim_mode, "one-minus or literal")
        ->check(CLI::IsMember({"one-minus", "literal"}));

    auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
    eval->add_option("--config", a.config, "Pipeline config JSON")->check(CLI::ExistingFile);
    eval->add_option("--model", a.model, "Checkpoint path");
    eval->add_option("--data", a.data, "Dataset directory");
    eval->add_option("--out", a.out, "Report JSON path");
    eval->add_option("--csv", a.csv, "Also write a CSV report");
    eval->add_option("--split", a.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));

    auto* denoise = app.add_subcommand("denoise", "Denoise one QTNSR image");
    denoise->add_option("--model", a.model, "Checkpoint path")->required();
    denoise->add_option("--input", a.input, "Input QTNSR image")->required();
    denoise->add_option("--out", a.out, "Output QTNSR image")->required();
    denoise->add_option("--preview", a.preview_path, "Write a PGM preview here");
    denoise->add_option("--spec", a.spec_path, "Circuit spec JSON; must match the checkpoint");

    auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle and invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("invalid_argument", e.what(), 2);
    }

    try {
        configure_threads_from_env();
        if (*synth) return cmd_synth(synth, a);
        if (*quanvolve) return cmd_quanvolve(quanvolve, a);
        if (*train) return cmd_train(train, a);
        if (*eval) return cmd_eval(eval, a);
        if (*denoise) return cmd_denoise(denoise, a);
        if (*selftest) return cmd_selftest();
    } catch (const Error& e) {
        return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), 1);
    }
    return 1;
}
