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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qspeckle/image.hpp"
#include "qspeckle/qsim.hpp"
#include "qspeckle/quanv.hpp"
#include "qspeckle/tape.hpp"

namespace qspeckle::denoiser {

struct Architecture {
    /// channels[0] is the feature depth, channels.back() must be 1.
    std::vector<std::size_t> channels{9, 32, 32, 32, 32, 1};
    std::size_t kernel = 3;

    void validate() const;
    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ConvLayer {
    Tensor kernels; // k x k x Cin x Cout
    Tensor bias;    // Cout

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Residual subtractive CNN: conv/relu stack estimating the speckle component,
/// no activation on the last layer.
struct DenoiserModel {
    Architecture arch;
    std::vector<ConvLayer> layers;
    std::uint64_t seed = 0;

    /// He-normal hidden layers, zero biases. With `zero_final` the last layer
    /// starts at zero so the untrained model is the identity on `noisy`.
    static DenoiserModel init(const Architecture& arch, std::uint64_t seed, bool zero_final = true);

    void validate() const;
    std::size_t parameter_count() const;

    friend bool operator==(const DenoiserModel&, const DenoiserModel&) = default;
};

enum class SsimMode {
    /// beta * (1 - SSIM): similarity is rewarded under minimisation.
    OneMinus,
    /// beta * SSIM exactly as the composite loss is usually printed.
    Literal,
};

const char* ssim_mode_name(SsimMode mode);
SsimMode parse_ssim_mode(std::string_view name);

struct LossWeights {
    double alpha = 1.0;
    double beta = 0.1;
    double gamma = 1e-4;
    double c1 = 1e-4;
    double c2 = 9e-4;
    /// Smoothing of the TV square root: sqrt(d^2 + eps^2) - eps.
    double tv_epsilon = 1e-6;
    SsimMode ssim_mode = SsimMode::OneMinus;

    void validate() const;
    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Loss terms as tape ops. `pred` is H x W or H x W x 1; `gt` has the same
// element count and layout. All terms accumulate in double.
// ---------------------------------------------------------------------------

/// mean((pred - gt)^2)
template <typename T>
ad::Var<T> mse_term(BasicTape<T>& tape, ad::Var<T> pred, const BasicTensor<T>& gt);

/// Single-window SSIM(pred, gt) with population moments.
template <typename T>
ad::Var<T> ssim_term(BasicTape<T>& tape, ad::Var<T> pred, const BasicTensor<T>& gt, double c1, double c2);

/// Sum over (i < H-1, j < W-1) of sqrt(dx^2 + dy^2 + eps^2) - eps.
template <typename T>
ad::Var<T> tv_term(BasicTape<T>& tape, ad::Var<T> pred, double epsilon);

/// alpha * mse + beta * (SSIM or 1 - SSIM) + gamma * TV.
template <typename T>
ad::Var<T> composite_loss(BasicTape<T>& tape, ad::Var<T> pred, const BasicTensor<T>& gt, const LossWeights& w);

/// Loss value without gradients.
double loss(const Image& pred, const Image& gt, const LossWeights& w);

struct ForwardResult {
    Image denoised;
    Image noise_est;
};

/// noise_est = CNN(features); denoised = noisy - noise_est.
ForwardResult forward(const DenoiserModel& model, const FeatureMap& features, const Image& noisy);

struct TrainSample {
    std::string id;
    FeatureMap features;
    Image noisy;
    Image clean;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch = 8;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    LossWeights weights;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_psnr = 0.0;
    double val_ssim = 0.0;
};

nlohmann::json to_json(const EpochStats& s);

struct TrainResult {
    DenoiserModel model;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
    /// "val", or "train" when the validation split is empty.
    std::string selection_split;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on the composite loss. Per-sample gradients within a batch
/// are computed in parallel and summed in sample order, so results do not
/// depend on the thread count. Returns the parameters of the epoch with the
/// best mean validation PSNR. A non-finite loss aborts with ErrorKind::Numeric.
TrainResult train(const std::vector<TrainSample>& train_set, const std::vector<TrainSample>& val_set,
                  const DenoiserModel& model_init, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Loss and parameter gradients (layer order: kernels, bias) for one sample.
struct SampleGradient {
    double loss = 0.0;
    std::vector<Tensor> grads;
};

SampleGradient sample_gradient(const DenoiserModel& model, const TrainSample& sample, const LossWeights& w);

/// A trained model plus everything inference has to reproduce: the circuit
/// and normalization used to build its features.
struct Checkpoint {
    DenoiserModel model;
    qsim::CircuitSpec circuit;
    std::string spec_hash;
    quanv::NormBounds norm;
    LossWeights weights;
    TrainConfig train_config;
    std::string dataset_id;
    std::size_t best_epoch = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Quanvolves then runs forward(). Refuses (ErrorKind::HashMismatch) when
/// `spec` or `norm` differ from what the checkpoint was trained with.
Image predict_image(const Checkpoint& checkpoint, const qsim::CircuitSpec& spec, quanv::NormBounds norm,
                    const Image& noisy);

} // namespace qspeckle::denoiser
