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

#include "qspeckle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qspeckle/error.hpp"

namespace qspeckle::metrics {

namespace {

double max_of(const Image& img) {
    require(!img.empty(), ErrorKind::InvalidArgument, "metrics: empty image");
    return *std::max_element(img.data().begin(), img.data().end());
}

double resolve_peak(const Image& ref, std::optional<double> peak) {
    const double p = peak ? *peak : max_of(ref);
    require(p > 0.0 && std::isfinite(p), ErrorKind::InvalidArgument,
            "metrics: peak must be positive and finite, got " + std::to_string(p));
    return p;
}

struct WindowStats {
    double mx, my, vx, vy, cxy;
};

WindowStats window_stats(const Image& x, const Image& y, std::size_t row0, std::size_t col0, std::size_t rows,
                         std::size_t cols) {
    const double n = static_cast<double>(rows * cols);
    double sx = 0.0, sy = 0.0;
    for (std::size_t r = row0; r < row0 + rows; ++r) {
        for (std::size_t c = col0; c < col0 + cols; ++c) {
            sx += x(r, c);
            sy += y(r, c);
        }
    }
    const double mx = sx / n;
    const double my = sy / n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (std::size_t r = row0; r < row0 + rows; ++r) {
        for (std::size_t c = col0; c < col0 + cols; ++c) {
            const double dx = x(r, c) - mx;
            const double dy = y(r, c) - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
        }
    }
    return {mx, my, vx / n, vy / n, cxy / n};
}

double ssim_formula(const WindowStats& s, double c1, double c2) {
    return ((2.0 * s.mx * s.my + c1) * (2.0 * s.cxy + c2)) /
           ((s.mx * s.mx + s.my * s.my + c1) * (s.vx + s.vy + c2));
}

} // namespace

double mse(const Image& x, const Image& ref) {
    require_same_dims(x, ref, "mse");
    require(!x.empty(), ErrorKind::InvalidArgument, "mse: empty image");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x.data()[i]) - ref.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double psnr_from_mse(double mse_value, double peak) {
    require(peak > 0.0, ErrorKind::InvalidArgument, "psnr: peak must be positive");
    require(mse_value >= 0.0, ErrorKind::InvalidArgument, "psnr: mse must be non-negative");
    if (mse_value == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / mse_value);
}

double psnr(const Image& x, const Image& ref, std::optional<double> peak) {
    require_same_dims(x, ref, "psnr");
    return psnr_from_mse(mse(x, ref), resolve_peak(ref, peak));
}

double ssim(const Image& x, const Image& ref, const SsimOptions& options) {
    require_same_dims(x, ref, "ssim");
    const std::size_t w = options.window;
    require(w >= 1 && w <= std::min(x.height(), x.width()), ErrorKind::InvalidArgument,
            "ssim: window " + std::to_string(w) + " does not fit a " + std::to_string(x.height()) + "x" +
                std::to_string(x.width()) + " image");
    double c1 = 0.0, c2 = 0.0;
    if (options.c1 && options.c2) {
        c1 = *options.c1;
        c2 = *options.c2;
    } else {
        const double peak = resolve_peak(ref, options.peak);
        c1 = options.c1.value_or((0.01 * peak) * (0.01 * peak));
        c2 = options.c2.value_or((0.03 * peak) * (0.03 * peak));
    }
    require(c1 > 0.0 && c2 > 0.0, ErrorKind::InvalidArgument, "ssim: stabilizers must be positive");

    const std::size_t rows = x.height() - w + 1;
    const std::size_t cols = x.width() - w + 1;
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            acc += ssim_formula(window_stats(x, ref, r, c, w, w), c1, c2);
        }
    }
    return acc / static_cast<double>(rows * cols);
}

double ssim_global(const Image& x, const Image& ref, double c1, double c2) {
    require_same_dims(x, ref, "ssim_global");
    require(!x.empty(), ErrorKind::InvalidArgument, "ssim_global: empty image");
    require(c1 > 0.0 && c2 > 0.0, ErrorKind::InvalidArgument, "ssim_global: stabilizers must be positive");
    return ssim_formula(window_stats(x, ref, 0, 0, x.height(), x.width()), c1, c2);
}

double total_variation(const Image& x) {
    require(x.height() >= 2 && x.width() >= 2, ErrorKind::InvalidArgument,
            "total_variation: image must be at least 2x2");
    double acc = 0.0;
    for (std::size_t r = 0; r + 1 < x.height(); ++r) {
        for (std::size_t c = 0; c + 1 < x.width(); ++c) {
            const double dx = static_cast<double>(x(r, c + 1)) - x(r, c);
            const double dy = static_cast<double>(x(r + 1, c)) - x(r, c);
            acc += std::sqrt(dx * dx + dy * dy);
        }
    }
    return acc;
}

SampleReport score_sample(std::string id, const Image& noisy, const Image& denoised, const Image& clean,
                          std::size_t ssim_window) {
    SsimOptions opts;
    opts.window = ssim_window;
    return {std::move(id),
            {psnr(noisy, clean), ssim(noisy, clean, opts)},
            {psnr(denoised, clean), ssim(denoised, clean, opts)}};
}

EvalReport summarize(std::vector<SampleReport> samples, std::string model_id, std::string dataset_id,
                     std::string split, std::size_t ssim_window) {
    require(!samples.empty(), ErrorKind::InvalidArgument, "evaluate: empty split");
    EvalReport report;
    report.model_id = std::move(model_id);
    report.dataset_id = std::move(dataset_id);
    report.split = std::move(split);
    report.sample_count = samples.size();
    report.ssim_window = ssim_window;
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        report.speckled_mean.psnr += s.speckled.psnr;
        report.speckled_mean.ssim += s.speckled.ssim;
        report.denoised_mean.psnr += s.denoised.psnr;
        report.denoised_mean.ssim += s.denoised.ssim;
    }
    report.speckled_mean.psnr /= n;
    report.speckled_mean.ssim /= n;
    report.denoised_mean.psnr /= n;
    report.denoised_mean.ssim /= n;
    report.samples = std::move(samples);
    return report;
}

nlohmann::json number_or_inf(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

double number_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        fail(ErrorKind::Format, "expected number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

namespace {

nlohmann::json scores_json(const Scores& s) {
    return {{"psnr", number_or_inf(s.psnr)}, {"ssim", s.ssim}};
}

Scores scores_from(const nlohmann::json& j) {
    return {number_from_json(j.at("psnr")), j.at("ssim").get<double>()};
}

} // namespace

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per_sample = nlohmann::json::array();
    for (const auto& s : r.samples) {
        per_sample.push_back({{"id", s.id}, {"speckled", scores_json(s.speckled)}, {"denoised", scores_json(s.denoised)}});
    }
    return {{"format", "qspeckle-eval/1"},
            {"model_id", r.model_id},
            {"dataset_id", r.dataset_id},
            {"split", r.split},
            {"sample_count", r.sample_count},
            {"conventions", {{"psnr_peak", "max_of_reference"}, {"ssim_window", r.ssim_window}, {"ssim_c", "(0.01*peak)^2, (0.03*peak)^2"}}},
            {"rows",
             {{{"model", "speckled"}, {"psnr", number_or_inf(r.speckled_mean.psnr)}, {"ssim", r.speckled_mean.ssim}},
              {{"model", "denoised"}, {"psnr", number_or_inf(r.denoised_mean.psnr)}, {"ssim", r.denoised_mean.ssim}}}},
            {"samples", std::move(per_sample)}};
}

EvalReport report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.model_id = j.at("model_id").get<std::string>();
        r.dataset_id = j.at("dataset_id").get<std::string>();
        r.split = j.at("split").get<std::string>();
        r.sample_count = j.at("sample_count").get<std::size_t>();
        r.ssim_window = j.at("conventions").at("ssim_window").get<std::size_t>();
        for (const auto& row : j.at("rows")) {
            const Scores s = scores_from(row);
            (row.at("model").get<std::string>() == "speckled" ? r.speckled_mean : r.denoised_mean) = s;
        }
        for (const auto& s : j.at("samples")) {
            r.samples.push_back({s.at("id").get<std::string>(), scores_from(s.at("speckled")), scores_from(s.at("denoised"))});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("eval report json: ") + e.what());
    }
}

std::string to_csv(const EvalReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "id,speckled_psnr,speckled_ssim,denoised_psnr,denoised_ssim\n";
    for (const auto& s : r.samples) {
        out << s.id << ',' << s.speckled.psnr << ',' << s.speckled.ssim << ',' << s.denoised.psnr << ','
            << s.denoised.ssim << '\n';
    }
    out << "mean," << r.speckled_mean.psnr << ',' << r.speckled_mean.ssim << ',' << r.denoised_mean.psnr << ','
        << r.denoised_mean.ssim << '\n';
    return out.str();
}

} // namespace qspeckle::metrics
