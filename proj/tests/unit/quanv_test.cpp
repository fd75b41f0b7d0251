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
#include <cstring>
#include <numbers>

#include <gtest/gtest.h>

#include "qspeckle/quanv.hpp"
#include "qspeckle_oracles/reference_nn.hpp"
#include "test_util.hpp"

using namespace qspeckle;
using namespace qspeckle::quanv;
using qspeckle::test_util::random_image;

namespace {

qsim::CircuitSpec zero_spec() { return {9, 1, 0, {std::vector<double>(9, 0.0)}}; }

bool same_bytes(const FeatureMap& a, const FeatureMap& b) {
    const auto da = a.tensor().data();
    const auto db = b.tensor().data();
    return a.tensor().shape() == b.tensor().shape() && std::memcmp(da.data(), db.data(), da.size_bytes()) == 0;
}

} // namespace

TEST(EncodePixel, LinearMapToHalfTurn) {
    EXPECT_EQ(encode_pixel(0.0), 0.0);
    EXPECT_EQ(encode_pixel(1.0), std::numbers::pi);
    EXPECT_EQ(encode_pixel(0.5), std::numbers::pi / 2);
}

TEST(Normalize, ClampsOutsideBounds) {
    const NormBounds n{0.2, 0.6};
    EXPECT_EQ(normalize(0.2, n), 0.0);
    EXPECT_EQ(normalize(0.6, n), 1.0);
    EXPECT_NEAR(normalize(0.4, n), 0.5, 1e-15);
    EXPECT_EQ(normalize(-5.0, n), 0.0);
    EXPECT_EQ(normalize(9.0, n), 1.0);
}

TEST(QuanvolveImage, ZeroImageZeroWeightsGivesPlusOne) {
    const auto fm = quanvolve_image(Image(4, 4), zero_spec(), {0.0, 1.0});
    ASSERT_EQ(fm.tensor().shape(), (Shape{4, 4, 9}));
    for (float v : fm.tensor().data()) {
        EXPECT_EQ(v, 1.0f);
    }
}

TEST(QuanvolveImage, SixtyFourSquareExpandsToNineChannels) {
    const auto img = random_image(64, 64, 1);
    const auto fm = quanvolve_image(img, qsim::CircuitSpec::from_seed(9, 1, 0), {0.0, 1.0});
    EXPECT_EQ(fm.tensor().shape(), (Shape{64, 64, 9}));
    EXPECT_EQ(fm.channels(), 9u);
}

TEST(QuanvolveImage, MatchesIndependentScalarPipeline) {
    const auto img = random_image(8, 8, 5, 0.0, 2.0);
    const auto spec = qsim::CircuitSpec::from_seed(9, 1, 11);
    const NormBounds norm{0.3, 1.7};
    const auto fm = quanvolve_image(img, spec, norm);
    const auto want = oracle::quanvolve_reference({img.data().begin(), img.data().end()}, 8, 8, spec.weights,
                                                  norm.lo, norm.hi);
    // Circuit outputs are exact to ~1e-15 in double; the feature map stores f32,
    // so compare the rounded oracle value as well as the raw difference.
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(fm.tensor()[i], static_cast<float>(want[i])) << "flat index " << i;
        EXPECT_LE(std::abs(fm.tensor()[i] - want[i]), 1e-7);
    }
}

TEST(QuanvolveImage, ReflectPaddingAtBordersMatchesOracleForThinImages) {
    const auto spec = qsim::CircuitSpec::from_seed(9, 2, 3);
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{1, 1}, {1, 5}, {2, 3}, {5, 2}}) {
        const auto img = random_image(h, w, h * 10 + w);
        const auto fm = quanvolve_image(img, spec, {0.0, 1.0});
        ASSERT_EQ(fm.tensor().shape(), (Shape{h, w, 9}));
        const auto want =
            oracle::quanvolve_reference({img.data().begin(), img.data().end()}, h, w, spec.weights, 0.0, 1.0);
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(fm.tensor()[i], static_cast<float>(want[i]));
        }
    }
}

TEST(QuanvolveImage, RejectsBadInputs) {
    const auto spec = zero_spec();
    EXPECT_THROW(quanvolve_image(Image(0, 0), spec, {0, 1}), Error);
    EXPECT_THROW(quanvolve_image(Image(3, 3), spec, {1, 1}), Error);
    auto bad = Image(3, 3);
    bad(1, 1) = std::nanf("");
    EXPECT_THROW(quanvolve_image(bad, spec, {0, 1}), Error);
    EXPECT_THROW(quanvolve_image(Image(3, 3), qsim::CircuitSpec::from_seed(4, 1, 0), {0, 1}), Error);
}

TEST(QuanvolveImage, ParallelEqualsSerialBytewise) {
    const auto img = random_image(17, 23, 9);
    const auto spec = qsim::CircuitSpec::from_seed(9, 1, 4);
    EXPECT_TRUE(same_bytes(quanvolve_image(img, spec, {0, 1}, Execution::Parallel),
                           quanvolve_image(img, spec, {0, 1}, Execution::Serial)));
}

TEST(QuanvolveDataset, SinglePairShapesAndPassThrough) {
    const auto noisy = random_image(64, 64, 1);
    const auto clean = random_image(64, 64, 2);
    const auto out = quanvolve_dataset({{noisy, clean}}, qsim::CircuitSpec::from_seed(9, 1, 0), {0, 1});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].features.tensor().shape(), (Shape{64, 64, 9}));
    EXPECT_EQ(out[0].noisy, noisy);
    EXPECT_EQ(out[0].clean, clean);
}

TEST(QuanvolveDataset, EmptyListIsAnError) {
    EXPECT_THROW(quanvolve_dataset({}, zero_spec(), {0, 1}), Error);
}

TEST(QuanvolveDataset, ErrorNamesTheOffendingSample) {
    auto bad = Image(4, 4);
    bad(2, 2) = std::numeric_limits<float>::infinity();
    try {
        quanvolve_dataset({{Image(4, 4), Image(4, 4)}, {bad, Image(4, 4)}}, zero_spec(), {0, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos) << e.what();
    }
}

TEST(QuanvolveDataset, ParallelEqualsSerialBytewise) {
    std::vector<PairInput> pairs;
    for (std::uint64_t i = 0; i < 5; ++i) {
        pairs.push_back({random_image(9, 7, i), random_image(9, 7, i + 10)});
    }
    const auto spec = qsim::CircuitSpec::from_seed(9, 1, 8);
    const auto par = quanvolve_dataset(pairs, spec, {0, 1}, Execution::Parallel);
    const auto ser = quanvolve_dataset(pairs, spec, {0, 1}, Execution::Serial);
    ASSERT_EQ(par.size(), ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        EXPECT_TRUE(same_bytes(par[i].features, ser[i].features));
    }
}

// Property: H x W -> H x W x 9, values in [-1, 1], for assorted sizes and circuits.
TEST(QuanvProperty, ShapeAndRange) {
    std::uint64_t seed = 0;
    for (std::size_t h : {1u, 2u, 3u, 7u, 12u}) {
        for (std::size_t w : {1u, 4u, 9u}) {
            const auto img = random_image(h, w, ++seed, 0.0, 3.0);
            const auto fm = quanvolve_image(img, qsim::CircuitSpec::from_seed(9, 1 + seed % 3, seed), {0.5, 2.5});
            ASSERT_EQ(fm.tensor().shape(), (Shape{h, w, 9}));
            for (float v : fm.tensor().data()) {
                ASSERT_GE(v, -1.0f);
                ASSERT_LE(v, 1.0f);
            }
        }
    }
}

// Property: away from borders, quanvolving a crop equals cropping the result.
TEST(QuanvProperty, TranslationConsistencyInTheInterior) {
    const auto img = random_image(12, 12, 77);
    const auto spec = qsim::CircuitSpec::from_seed(9, 1, 2);
    const auto full = quanvolve_image(img, spec, {0, 1});
    const std::size_t oy = 3, ox = 2, ch = 6, cw = 7;
    Image crop(ch, cw);
    for (std::size_t y = 0; y < ch; ++y) {
        for (std::size_t x = 0; x < cw; ++x) {
            crop(y, x) = img(y + oy, x + ox);
        }
    }
    const auto part = quanvolve_image(crop, spec, {0, 1});
    for (std::size_t y = 1; y + 1 < ch; ++y) {
        for (std::size_t x = 1; x + 1 < cw; ++x) {
            for (std::size_t c = 0; c < 9; ++c) {
                ASSERT_EQ(part(y, x, c), full(y + oy, x + ox, c));
            }
        }
    }
}
