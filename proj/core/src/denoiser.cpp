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

#include "qspeckle/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "qspeckle/metrics.hpp"
#include "qspeckle/parallel.hpp"
#include "qspeckle/speckle.hpp"

namespace qspeckle::denoiser {

void Architecture::validate() const {
    require(channels.size() >= 2, ErrorKind::InvalidArgument, "architecture: need at least one layer");
    require(channels.front() == static_cast<std::size_t>(quanv::kQubits), ErrorKind::InvalidArgument,
            "architecture: first layer must take " + std::to_string(quanv::kQubits) + " channels");
    require(channels.back() == 1, ErrorKind::InvalidArgument, "architecture: last layer must output 1 channel");
    require(kernel % 2 == 1, ErrorKind::InvalidArgument, "architecture: kernel size must be odd");
    for (std::size_t c : channels) {
        require(c >= 1, ErrorKind::InvalidArgument, "architecture: channel counts must be positive");
    }
}

DenoiserModel DenoiserModel::init(const Architecture& arch, std::uint64_t seed, bool zero_final) {
    arch.validate();
    DenoiserModel model;
    model.arch = arch;
    model.seed = seed;
    std::mt19937_64 rng(seed);
    const std::size_t k = arch.kernel;
    for (std::size_t l = 0; l + 1 < arch.channels.size(); ++l) {
        const std::size_t cin = arch.channels[l];
        const std::size_t cout = arch.channels[l + 1];
        ConvLayer layer{Tensor({k, k, cin, cout}), Tensor({cout})};
        const bool last = l + 2 == arch.channels.size();
        if (!(last && zero_final)) {
            std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(k * k * cin)));
            for (float& v : layer.kernels.data()) {
                v = static_cast<float>(he(rng));
            }
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

void DenoiserModel::validate() const {
    arch.validate();
    require(layers.size() + 1 == arch.channels.size(), ErrorKind::InvalidArgument,
            "model: layer count does not match architecture");
    const std::size_t k = arch.kernel;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Shape expect{k, k, arch.channels[l], arch.channels[l + 1]};
        require(layers[l].kernels.shape() == expect, ErrorKind::Shape,
                "model: layer " + std::to_string(l) + " kernels " + shape_string(layers[l].kernels.shape()) +
                    ", expected " + shape_string(expect));
        require(layers[l].bias.shape() == Shape{arch.channels[l + 1]}, ErrorKind::Shape,
                "model: layer " + std::to_string(l) + " bias has wrong shape");
        require(layers[l].kernels.all_finite() && layers[l].bias.all_finite(), ErrorKind::Numeric,
                "model: non-finite parameter in layer " + std::to_string(l));
    }
}

std::size_t DenoiserModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.kernels.size() + l.bias.size();
    }
    return n;
}

const char* ssim_mode_name(SsimMode mode) {
    return mode == SsimMode::Literal ? "literal" : "one-minus";
}

SsimMode parse_ssim_mode(std::string_view name) {
    if (name == "literal") {
        return SsimMode::Literal;
    }
    if (name == "one-minus") {
        return SsimMode::OneMinus;
    }
    fail(ErrorKind::InvalidArgument, "ssim mode must be 'literal' or 'one-minus', got '" + std::string(name) + "'");
}

void LossWeights::validate() const {
    require(alpha >= 0 && beta >= 0 && gamma >= 0 && alpha + beta + gamma > 0, ErrorKind::InvalidArgument,
            "loss weights: alpha, beta, gamma must be non-negative with a positive sum");
    require(c1 > 0 && c2 > 0, ErrorKind::InvalidArgument, "loss weights: c1 and c2 must be positive");
    require(tv_epsilon >= 0, ErrorKind::InvalidArgument, "loss weights: tv epsilon must be non-negative");
}

nlohmann::json to_json(const LossWeights& w) {
    return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"c1", w.c1},
            {"c2", w.c2},       {"tv_epsilon", w.tv_epsilon}, {"ssim_mode", ssim_mode_name(w.ssim_mode)}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j) {
    LossWeights w;
    w.alpha = j.value("alpha", w.alpha);
    w.beta = j.value("beta", w.beta);
    w.gamma = j.value("gamma", w.gamma);
    w.c1 = j.value("c1", w.c1);
    w.c2 = j.value("c2", w.c2);
    w.tv_epsilon = j.value("tv_epsilon", w.tv_epsilon);
    if (j.contains("ssim_mode")) {
        w.ssim_mode = parse_ssim_mode(j.at("ssim_mode").get<std::string>());
    }
    w.validate();
    return w;
}

void TrainConfig::validate() const {
    require(epochs >= 1, ErrorKind::InvalidArgument, "train: epochs must be >= 1");
    require(batch >= 1, ErrorKind::InvalidArgument, "train: batch size must be >= 1");
    require(lr > 0 && std::isfinite(lr), ErrorKind::InvalidArgument, "train: learning rate must be positive");
    require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_epsilon > 0, ErrorKind::InvalidArgument,
            "train: invalid Adam hyperparameters");
    weights.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs}, {"batch", c.batch},   {"lr", c.lr},
            {"beta1", c.beta1},   {"beta2", c.beta2},   {"adam_epsilon", c.adam_epsilon},
            {"seed", c.seed},     {"loss", to_json(c.weights)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss")) {
        c.weights = loss_weights_from_json(j.at("loss"));
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const EpochStats& s) {
    return {{"epoch", s.epoch},
            {"train_loss", s.train_loss},
            {"val_loss", s.val_loss},
            {"val_psnr", metrics::number_or_inf(s.val_psnr)},
            {"val_ssim", s.val_ssim}};
}

ForwardResult forward(const DenoiserModel& model, const FeatureMap& features, const Image& noisy) {
    require(features.height() == noisy.height() && features.width() == noisy.width(), ErrorKind::Shape,
            "forward: features are " + std::to_string(features.height()) + "x" + std::to_string(features.width()) +
                " but the noisy image is " + std::to_string(noisy.height()) + "x" + std::to_string(noisy.width()));
    require(!model.layers.empty(), ErrorKind::InvalidArgument, "forward: model has no layers");
    Tensor x = features.tensor();
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        x = add_bias(conv2d(x, model.layers[l].kernels), model.layers[l].bias);
        if (l + 1 < model.layers.size()) {
            x = relu(x);
        }
    }
    check_finite(x, "forward: noise estimate");
    Image noise_est(std::move(x));
    Image denoised(noisy.height(), noisy.width());
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        denoised.data()[i] = noisy.data()[i] - noise_est.data()[i];
    }
    return {std::move(denoised), std::move(noise_est)};
}

SampleGradient sample_gradient(const DenoiserModel& model, const TrainSample& sample, const LossWeights& w) {
    require(sample.features.height() == sample.noisy.height() && sample.features.width() == sample.noisy.width(),
            ErrorKind::Shape, "train: features and noisy image differ in size for sample " + sample.id);
    require_same_dims(sample.noisy, sample.clean, "train sample " + sample.id);
    Tape tape;
    std::vector<Tape::Var> params;
    auto x = tape.leaf(sample.features.tensor());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto k = tape.leaf(model.layers[l].kernels, true);
        const auto b = tape.leaf(model.layers[l].bias, true);
        params.push_back(k);
        params.push_back(b);
        x = ad::add_bias(tape, ad::conv2d(tape, x, k), b);
        if (l + 1 < model.layers.size()) {
            x = ad::relu(tape, x);
        }
    }
    const auto noisy = tape.leaf(sample.noisy.as_channels());
    const auto denoised = ad::sub(tape, noisy, x);
    const auto total = composite_loss(tape, denoised, sample.clean.as_channels(), w);
    tape.backward(total);

    SampleGradient out;
    out.loss = tape.value(total).item();
    for (const auto p : params) {
        out.grads.push_back(tape.grad(p));
    }
    return out;
}

namespace {

struct Adam {
    std::vector<std::vector<double>> m, v;
    std::size_t step = 0;
};

std::vector<Tensor*> parameter_refs(DenoiserModel& model) {
    std::vector<Tensor*> refs;
    for (auto& l : model.layers) {
        refs.push_back(&l.kernels);
        refs.push_back(&l.bias);
    }
    return refs;
}

struct SplitScores {
    double loss = 0.0, psnr = 0.0, ssim = 0.0;
};

SplitScores score_split(const DenoiserModel& model, const std::vector<TrainSample>& set, const LossWeights& w) {
    std::vector<SplitScores> per(set.size());
    parallel_for(set.size(), [&](std::size_t i) {
        const auto& s = set[i];
        const auto out = forward(model, s.features, s.noisy);
        metrics::SsimOptions opts;
        opts.window = std::min<std::size_t>({8, s.clean.height(), s.clean.width()});
        per[i] = {loss(out.denoised, s.clean, w), metrics::psnr(out.denoised, s.clean),
                  metrics::ssim(out.denoised, s.clean, opts)};
    });
    SplitScores total;
    for (const auto& p : per) {
        total.loss += p.loss;
        total.psnr += p.psnr;
        total.ssim += p.ssim;
    }
    const double n = static_cast<double>(set.size());
    return {total.loss / n, total.psnr / n, total.ssim / n};
}

} // namespace

TrainResult train(const std::vector<TrainSample>& train_set, const std::vector<TrainSample>& val_set,
                  const DenoiserModel& model_init, const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    model_init.validate();
    require(!train_set.empty(), ErrorKind::InvalidArgument, "train: empty training split");

    DenoiserModel model = model_init;
    auto refs = parameter_refs(model);
    Adam adam;
    for (const Tensor* p : refs) {
        adam.m.emplace_back(p->size(), 0.0);
        adam.v.emplace_back(p->size(), 0.0);
    }

    const bool has_val = !val_set.empty();
    const auto& selection = has_val ? val_set : train_set;
    TrainResult result;
    result.selection_split = has_val ? "val" : "train";
    double best_psnr = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        auto rng = speckle::stream_rng(config.seed, epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;

        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            const std::size_t bs = std::min(config.batch, order.size() - start);
            std::vector<SampleGradient> grads(bs);
            try {
                parallel_for(bs, [&](std::size_t i) {
                    grads[i] = sample_gradient(model, train_set[order[start + i]], config.weights);
                });
            } catch (const Error& e) {
                fail(e.kind(), "train: epoch " + std::to_string(epoch) + ", batch at " + std::to_string(start) +
                                   ": " + e.what());
            }
            for (std::size_t i = 0; i < bs; ++i) {
                require(std::isfinite(grads[i].loss), ErrorKind::Numeric,
                        "train: non-finite loss at epoch " + std::to_string(epoch) + " on sample " +
                            train_set[order[start + i]].id);
                loss_sum += grads[i].loss;
            }

            ++adam.step;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam.step));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam.step));
            for (std::size_t p = 0; p < refs.size(); ++p) {
                auto values = refs[p]->data();
                auto& m = adam.m[p];
                auto& v = adam.v[p];
                for (std::size_t j = 0; j < values.size(); ++j) {
                    double g = 0.0;
                    for (std::size_t i = 0; i < bs; ++i) {
                        g += grads[i].grads[p][j];
                    }
                    g /= static_cast<double>(bs);
                    m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
                    v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
                    const double step = config.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config.adam_epsilon);
                    values[j] = static_cast<float>(values[j] - step);
                }
            }
            model.validate();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        const auto scores = score_split(model, selection, config.weights);
        stats.val_loss = scores.loss;
        stats.val_psnr = scores.psnr;
        stats.val_ssim = scores.ssim;
        result.history.push_back(stats);
        if (on_epoch) {
            on_epoch(stats);
        }
        if (scores.psnr > best_psnr) {
            best_psnr = scores.psnr;
            result.best_epoch = epoch;
            result.model = model;
        }
    }
    if (result.best_epoch == 0) {
        // Every epoch scored NaN PSNR; fall back to the final parameters.
        result.best_epoch = config.epochs;
        result.model = model;
    }
    return result;
}

Image predict_image(const Checkpoint& checkpoint, const qsim::CircuitSpec& spec, quanv::NormBounds norm,
                    const Image& noisy) {
    const std::string hash = qsim::spec_hash(spec);
    require(hash == checkpoint.spec_hash, ErrorKind::HashMismatch,
            "predict: circuit spec hash " + hash + " does not match checkpoint " + checkpoint.spec_hash);
    require(norm == checkpoint.norm, ErrorKind::HashMismatch,
            "predict: normalization bounds differ from the ones the model was trained with");
    const FeatureMap features = quanv::quanvolve_image(noisy, spec, norm);
    return forward(checkpoint.model, features, noisy).denoised;
}

} // namespace qspeckle::denoiser
