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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspeckle/image.hpp"

namespace qspeckle::metrics {

double mse(const Image& x, const Image& ref);

/// 10 log10(peak^2 / mse); +inf when mse == 0.
double psnr_from_mse(double mse, double peak);

/// Peak defaults to max(ref); data is linear float, not 8-bit.
double psnr(const Image& x, const Image& ref, std::optional<double> peak = std::nullopt);

struct SsimOptions {
    /// Side of the uniform square window, stride 1.
    std::size_t window = 8;
    /// Defaults to max(ref). Only used to derive c1/c2 when they are unset.
    std::optional<double> peak;
    /// Default (0.01 peak)^2.
    std::optional<double> c1;
    /// Default (0.03 peak)^2.
    std::optional<double> c2;
};

/// Mean of the similarity index over all window positions. Window statistics
/// use population (1/N) moments.
double ssim(const Image& x, const Image& ref, const SsimOptions& options = {});

/// Single-window SSIM over the whole image.
double ssim_global(const Image& x, const Image& ref, double c1, double c2);

/// Sum over (i < H-1, j < W-1) of sqrt(dx^2 + dy^2) with forward differences.
double total_variation(const Image& x);

struct Scores {
    double psnr = 0.0;
    double ssim = 0.0;
};

struct SampleReport {
    std::string id;
    Scores speckled;
    Scores denoised;
};

/// Table-style summary: one row for the speckled input and one for the model
/// output, both scored against the clean reference.
struct EvalReport {
    std::string model_id;
    std::string dataset_id;
    std::string split;
    std::size_t sample_count = 0;
    std::size_t ssim_window = 8;
    Scores speckled_mean;
    Scores denoised_mean;
    std::vector<SampleReport> samples;
};

/// Scores one (noisy, denoised, clean) triple with the report conventions.
SampleReport score_sample(std::string id, const Image& noisy, const Image& denoised, const Image& clean,
                          std::size_t ssim_window = 8);

/// Fills sample_count and the arithmetic-mean rows from `samples`.
EvalReport summarize(std::vector<SampleReport> samples, std::string model_id, std::string dataset_id,
                     std::string split, std::size_t ssim_window = 8);

/// +inf PSNR is written as the string "inf".
nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string to_csv(const EvalReport& report);

nlohmann::json number_or_inf(double v);
double number_from_json(const nlohmann::json& j);

} // namespace qspeckle::metrics
