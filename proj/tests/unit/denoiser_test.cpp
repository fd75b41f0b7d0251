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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "qspeckle/denoiser.hpp"
#include "qspeckle/metrics.hpp"
#include "qspeckle/quanv.hpp"
#include "qspeckle/speckle.hpp"
#include "qspeckle_oracles/reference_nn.hpp"
#include "test_util.hpp"

using namespace qspeckle;
using namespace qspeckle::denoiser;
using qspeckle::test_util::random_image;
using qspeckle::test_util::random_tensor;

namespace {

std::vector<oracle::RefLayer> to_reference(const DenoiserModel& model) {
    std::vector<oracle::RefLayer> out;
    for (const auto& layer : model.layers) {
        oracle::RefLayer r;
        r.kernels.assign(layer.kernels.data().begin(), layer.kernels.data().end());
        r.bias.assign(layer.bias.data().begin(), layer.bias.data().end());
        r.k = layer.kernels.dim(0);
        r.cin = layer.kernels.dim(2);
        r.cout = layer.kernels.dim(3);
        out.push_back(std::move(r));
    }
    return out;
}

// Perturb every parameter so the final layer is not zero and relus are mixed.
DenoiserModel random_model(std::uint64_t seed, Architecture arch = {}) {
    auto model = DenoiserModel::init(arch, seed, false);
    std::size_t l = 0;
    for (auto& layer : model.layers) {
        layer.bias = random_tensor(layer.bias.shape(), seed * 31 + l++, -0.1, 0.1);
    }
    return model;
}

FeatureMap random_features(std::size_t h, std::size_t w, std::uint64_t seed) {
    return FeatureMap(random_tensor(Shape{h, w, 9}, seed));
}

LossWeights only(double a, double b, double g, SsimMode mode = SsimMode::OneMinus) {
    LossWeights w;
    w.alpha = a;
    w.beta = b;
    w.gamma = g;
    w.ssim_mode = mode;
    return w;
}

double loss_gradient_error(const LossWeights& w, std::uint64_t seed) {
    const auto pred = random_tensor<double>(Shape{6, 6, 1}, seed, 0.0, 1.0);
    const auto gt = random_tensor<double>(Shape{6, 6, 1}, seed + 500, 0.0, 1.0);
    TapeD tape;
    auto p = tape.leaf(pred, true);
    tape.backward(composite_loss(tape, p, gt, w));
    auto f = [&](const std::vector<double>& x) {
        TapeD t;
        return t.value(composite_loss(t, t.leaf(TensorD(pred.shape(), x)), gt, w)).item();
    };
    return oracle::max_relative_error(tape.grad(p).storage(), oracle::central_difference(f, pred.storage(), 1e-6));
}

std::vector<TrainSample> toy_samples(std::size_t scenes, std::size_t scene_size, std::size_t patch,
                                     std::uint64_t seed = 0) {
    speckle::DatasetConfig cfg;
    cfg.seed = seed;
    cfg.n_scenes = scenes;
    cfg.scene_size = scene_size;
    cfg.patch = patch;
    cfg.stack_len = 8;
    cfg.splits = {1.0, 0.0, 0.0};
    const auto ds = speckle::generate_dataset(cfg);
    const auto spec = qsim::CircuitSpec::from_seed(9, 1, 0);
    std::vector<TrainSample> out;
    for (const auto& s : ds.samples) {
        out.push_back({s.id, quanv::quanvolve_image(s.noisy, spec, ds.norm), s.noisy, s.clean});
    }
    return out;
}

} // namespace

TEST(Architecture, DefaultIsNineToOneThroughFourHiddenLayers) {
    const Architecture a;
    EXPECT_EQ(a.channels, (std::vector<std::size_t>{9, 32, 32, 32, 32, 1}));
    const auto m = DenoiserModel::init(a, 0);
    EXPECT_EQ(m.layers.size(), 5u);
    EXPECT_EQ(m.parameter_count(), (9 * 32 + 3 * 32 * 32 + 32) * 9 + 4 * 32 + 1);
}

TEST(Architecture, ValidationRejectsWrongEnds) {
    EXPECT_THROW(DenoiserModel::init({{8, 32, 1}, 3}, 0), Error);
    EXPECT_THROW(DenoiserModel::init({{9, 32, 2}, 3}, 0), Error);
    EXPECT_THROW(DenoiserModel::init({{9, 1}, 4}, 0), Error);
    EXPECT_THROW(DenoiserModel::init({{9}, 3}, 0), Error);
}

TEST(Init, SeedIsDeterministic) {
    EXPECT_EQ(DenoiserModel::init({}, 4), DenoiserModel::init({}, 4));
    EXPECT_NE(DenoiserModel::init({}, 4), DenoiserModel::init({}, 5));
}

TEST(Forward, ZeroFinalLayerIsResidualIdentity) {
    const auto model = DenoiserModel::init({}, 1);
    const auto noisy = random_image(8, 8, 2);
    const auto out = forward(model, random_features(8, 8, 3), noisy);
    for (float v : out.noise_est.data()) {
        EXPECT_EQ(v, 0.0f);
    }
    EXPECT_EQ(out.denoised, noisy);
}

TEST(Forward, SubtractionIdentityForRandomModels) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto noisy = random_image(6, 7, s, 0.0, 2.0);
        const auto out = forward(random_model(s, {{9, 8, 1}, 3}), random_features(6, 7, s + 9), noisy);
        for (std::size_t i = 0; i < noisy.size(); ++i) {
            EXPECT_NEAR(out.denoised.data()[i] + out.noise_est.data()[i], noisy.data()[i], 1e-6 * 2.0);
        }
    }
}

TEST(Forward, MatchesNestedLoopReference) {
    const auto model = random_model(7);
    const auto feats = random_features(16, 16, 8);
    const auto noisy = random_image(16, 16, 9);
    const auto out = forward(model, feats, noisy);
    const auto want = oracle::cnn_reference(to_reference(model),
                                            {feats.tensor().data().begin(), feats.tensor().data().end()}, 16, 16);
    for (std::size_t i = 0; i < want.size(); ++i) {
        ASSERT_NEAR(out.noise_est.data()[i], want[i], 1e-5);
        ASSERT_NEAR(out.denoised.data()[i], noisy.data()[i] - want[i], 1e-5);
    }
}

TEST(Forward, RejectsDimMismatch) {
    const auto model = DenoiserModel::init({}, 0);
    EXPECT_THROW(forward(model, random_features(8, 8, 0), Image(8, 7)), Error);
    EXPECT_THROW(forward(model, FeatureMap(Tensor(Shape{8, 8, 4})), Image(8, 8)), Error);
}

TEST(Loss, ZeroForPerfectPrediction) {
    const auto x = random_image(6, 6, 1);
    EXPECT_EQ(loss(x, x, only(1, 0, 0)), 0.0);
    EXPECT_NEAR(loss(x, x, only(0, 1, 0)), 0.0, 1e-15);
}

TEST(Loss, LiteralModeAddsTheSimilarityIndex) {
    const auto x = random_image(6, 6, 1);
    const auto y = random_image(6, 6, 2);
    const double s = metrics::ssim_global(x, y, 1e-4, 9e-4);
    EXPECT_NEAR(loss(x, y, only(0, 1, 0, SsimMode::Literal)), s, 1e-12);
    EXPECT_NEAR(loss(x, y, only(0, 1, 0)), 1.0 - s, 1e-12);
}

TEST(Loss, TermsMatchTheirDefinitions) {
    const auto x = random_image(6, 5, 3);
    const auto y = random_image(6, 5, 4);
    EXPECT_NEAR(loss(x, y, only(1, 0, 0)), metrics::mse(x, y), 1e-12);
    // With epsilon 0 the smoothed TV equals the metric.
    auto tv = only(0, 0, 1);
    tv.tv_epsilon = 0.0;
    EXPECT_NEAR(loss(x, y, tv), metrics::total_variation(x), 1e-9);
    EXPECT_NEAR(loss(x, y, only(0, 0, 1)),
                oracle::tv_reference({x.data().begin(), x.data().end()}, 6, 5, 1e-6), 1e-9);
}

TEST(Loss, ConstantPredictionHasZeroTv) {
    EXPECT_EQ(loss(Image(6, 6, 0.4f), random_image(6, 6, 1), only(0, 0, 1)), 0.0);
}

TEST(Loss, RejectsDegenerateInputs) {
    EXPECT_THROW(loss(Image(1, 1), Image(1, 1), only(1, 0, 0)), Error);
    EXPECT_THROW(loss(Image(4, 4), Image(4, 5), only(1, 0, 0)), Error);
    EXPECT_THROW(loss(Image(1, 4), Image(1, 4), only(0, 0, 1)), Error);
    EXPECT_THROW(loss(Image(4, 4), Image(4, 4), only(0, 0, 0)), Error);
    EXPECT_THROW(loss(Image(4, 4), Image(4, 4), only(-1, 1, 0)), Error);
    auto w = only(1, 1, 0);
    w.c2 = 0.0;
    EXPECT_THROW(loss(Image(4, 4), Image(4, 4), w), Error);
}

class LossGradient : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(LossGradient, EachTermAndCombinationMatchFiniteDifferences) {
    const auto seed = GetParam();
    EXPECT_LE(loss_gradient_error(only(1, 0, 0), seed), 1e-3) << "mse";
    EXPECT_LE(loss_gradient_error(only(0, 1, 0), seed), 1e-3) << "ssim one-minus";
    EXPECT_LE(loss_gradient_error(only(0, 1, 0, SsimMode::Literal), seed), 1e-3) << "ssim literal";
    EXPECT_LE(loss_gradient_error(only(0, 0, 1), seed), 1e-3) << "tv";
    EXPECT_LE(loss_gradient_error(only(1.0, 0.1, 1e-4), seed), 1e-3) << "defaults";
    EXPECT_LE(loss_gradient_error(only(0.7, 0.5, 0.05), seed), 1e-3) << "mixed";
}

INSTANTIATE_TEST_SUITE_P(Seeds, LossGradient, ::testing::Range<std::uint64_t>(0, 12));

TEST(LossProperty, NonNegativeInOneMinusMode) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto x = random_image(5, 5, s, -1.0, 2.0);
        const auto y = random_image(5, 5, s + 1000);
        EXPECT_GE(loss(x, y, only(0.3, 0.9, 0.01)), 0.0);
    }
}

TEST(Config, JsonRoundTrips) {
    TrainConfig c;
    c.epochs = 7;
    c.lr = 3e-4;
    c.seed = 99;
    c.weights = only(0.5, 0.25, 0.125, SsimMode::Literal);
    EXPECT_EQ(train_config_from_json(nlohmann::json::parse(to_json(c).dump())), c);
    EXPECT_EQ(loss_weights_from_json(to_json(c.weights)), c.weights);
    EXPECT_EQ(parse_ssim_mode("literal"), SsimMode::Literal);
    EXPECT_EQ(std::string(ssim_mode_name(SsimMode::OneMinus)), "one-minus");
    EXPECT_THROW(parse_ssim_mode("plus"), Error);
}

TEST(Config, ValidationRejectsBadHyperparameters) {
    TrainConfig c;
    c.epochs = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.batch = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.lr = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Train, SmokeOneEpochFourSamples) {
    const auto set = toy_samples(1, 16, 8);
    ASSERT_EQ(set.size(), 4u);
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto res = train(set, {}, DenoiserModel::init({}, 0), cfg);
    ASSERT_EQ(res.history.size(), 1u);
    EXPECT_TRUE(std::isfinite(res.history[0].train_loss));
    EXPECT_EQ(res.selection_split, "train");
    EXPECT_NO_THROW(res.model.validate());
}

TEST(Train, LossStrictlyDecreasesOverFirstFiveEpochs) {
    const auto set = toy_samples(8, 32, 16);
    ASSERT_EQ(set.size(), 32u);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.weights = only(1, 0, 0);
    const auto res = train(set, {}, DenoiserModel::init({}, 0), cfg);
    for (std::size_t e = 1; e < res.history.size(); ++e) {
        EXPECT_LT(res.history[e].train_loss, res.history[e - 1].train_loss) << "epoch " << e + 1;
    }
}

TEST(Train, SelectsBestValidationEpochAndIsDeterministic) {
    const auto set = toy_samples(2, 16, 8);
    const auto val = toy_samples(1, 16, 8, 5);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch = 3;
    const auto a = train(set, val, DenoiserModel::init({}, 2), cfg);
    const auto b = train(set, val, DenoiserModel::init({}, 2), cfg);
    EXPECT_EQ(a.model, b.model);
    ASSERT_EQ(a.history.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
        EXPECT_EQ(a.history[i].val_psnr, b.history[i].val_psnr);
    }
    EXPECT_EQ(a.selection_split, "val");
    std::size_t best = 1;
    for (std::size_t i = 1; i < 3; ++i) {
        if (a.history[i].val_psnr > a.history[best - 1].val_psnr) best = i + 1;
    }
    EXPECT_EQ(a.best_epoch, best);
}

TEST(Train, RejectsEmptySplitAndAbortsOnNonFiniteLoss) {
    TrainConfig cfg;
    cfg.epochs = 1;
    EXPECT_THROW(train({}, {}, DenoiserModel::init({}, 0), cfg), Error);
    auto set = toy_samples(1, 8, 8);
    set[0].clean(0, 0) = std::numeric_limits<float>::quiet_NaN();
    try {
        train(set, {}, DenoiserModel::init({}, 0), cfg);
        FAIL() << "NaN in the target must abort training";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numeric);
    }
}

// The float training path against the same network rebuilt on the double tape.
TEST(SampleGradientTest, MatchesDoublePrecisionTapeGraph) {
    const auto set = toy_samples(1, 8, 8);
    const auto model = random_model(3, {{9, 4, 4, 1}, 3});
    const auto w = only(1.0, 0.1, 1e-3);
    const auto g = sample_gradient(model, set[0], w);
    ASSERT_EQ(g.grads.size(), 6u);

    TapeD tape;
    std::vector<ad::Var<double>> params;
    auto x = tape.leaf(set[0].features.tensor().cast<double>());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto k = tape.leaf(model.layers[l].kernels.cast<double>(), true);
        auto b = tape.leaf(model.layers[l].bias.cast<double>(), true);
        params.push_back(k);
        params.push_back(b);
        x = ad::add_bias(tape, ad::conv2d(tape, x, k), b);
        if (l + 1 < model.layers.size()) x = ad::relu(tape, x);
    }
    auto pred = ad::sub(tape, tape.leaf(set[0].noisy.as_channels().cast<double>()), x);
    auto total = composite_loss(tape, pred, set[0].clean.as_channels().cast<double>(), w);
    tape.backward(total);

    EXPECT_NEAR(g.loss, tape.value(total).item(), 1e-6);
    for (std::size_t p = 0; p < params.size(); ++p) {
        const auto want = tape.grad(params[p]).storage();
        const std::vector<double> got(g.grads[p].data().begin(), g.grads[p].data().end());
        EXPECT_LE(oracle::max_relative_error(got, want, 1e-4), 1e-3) << "parameter " << p;
    }
}

TEST(Predict, ComposesQuanvolutionAndForward) {
    Checkpoint ck;
    ck.model = random_model(11, {{9, 4, 1}, 3});
    ck.circuit = qsim::CircuitSpec::from_seed(9, 1, 3);
    ck.spec_hash = qsim::spec_hash(ck.circuit);
    ck.norm = {0.05, 0.9};
    const auto noisy = random_image(64, 64, 1);
    const auto out = predict_image(ck, ck.circuit, ck.norm, noisy);
    EXPECT_EQ(out.height(), 64u);
    EXPECT_EQ(out.width(), 64u);
    EXPECT_EQ(out, predict_image(ck, ck.circuit, ck.norm, noisy));
    const auto manual = forward(ck.model, quanv::quanvolve_image(noisy, ck.circuit, ck.norm), noisy).denoised;
    EXPECT_EQ(out, manual);
}

TEST(Predict, RefusesMismatchedCircuitOrNorm) {
    Checkpoint ck;
    ck.model = DenoiserModel::init({}, 0);
    ck.circuit = qsim::CircuitSpec::from_seed(9, 1, 3);
    ck.spec_hash = qsim::spec_hash(ck.circuit);
    const auto noisy = random_image(8, 8, 1);
    try {
        predict_image(ck, qsim::CircuitSpec::from_seed(9, 1, 4), ck.norm, noisy);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::HashMismatch);
    }
    try {
        predict_image(ck, ck.circuit, {0.0, 2.0}, noisy);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::HashMismatch);
    }
}
