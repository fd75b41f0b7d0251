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


#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qspeckle/denoiser.hpp"
#include "qspeckle/qsim.hpp"
#include "qspeckle/quanv.hpp"
#include "qspeckle/tensor.hpp"

namespace {

using namespace qspeckle;

Tensor uniform(Shape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = d(rng);
    return t;
}

Image uniform_image(std::size_t side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    Image img(side, side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) img(r, c) = d(rng);
    return img;
}

void BM_BasicEntanglerPixel(benchmark::State& state) {
    const auto spec = qsim::CircuitSpec::from_seed(9, static_cast<int>(state.range(0)), 1);
    std::vector<double> angles(9, 0.7), out(9);
    for (auto _ : state) {
        qsim::run_basic_entangler(angles, spec, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_BasicEntanglerPixel)->Arg(1)->Arg(2)->Arg(4);

void BM_Quanvolve(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const auto img = uniform_image(side, 2);
    const auto spec = qsim::CircuitSpec::from_seed(9, 1, 1);
    for (auto _ : state) {
        auto f = quanv::quanvolve_image(img, spec, {}, quanv::Execution::Serial);
        benchmark::DoNotOptimize(f);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_Quanvolve)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Conv2dForward(benchmark::State& state) {
    const auto cin = static_cast<std::size_t>(state.range(0));
    const auto in = uniform(Shape{64, 64, cin}, 3);
    const auto ker = uniform(Shape{3, 3, cin, 32}, 4);
    for (auto _ : state) {
        auto out = conv2d(in, ker);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_Conv2dForward)->Arg(9)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
    const auto cin = static_cast<std::size_t>(state.range(0));
    const auto in = uniform(Shape{64, 64, cin}, 5);
    const auto ker = uniform(Shape{3, 3, cin, 32}, 6);
    const auto grad = uniform(Shape{64, 64, 32}, 7);
    for (auto _ : state) {
        auto g = conv2d_backward(grad, in, ker);
        benchmark::DoNotOptimize(g);
    }
}
BENCHMARK(BM_Conv2dBackward)->Arg(9)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
    const auto model = denoiser::DenoiserModel::init({}, 8, false);
    denoiser::TrainSample sample{"bench", FeatureMap(uniform(Shape{64, 64, 9}, 9)), uniform_image(64, 10),
                                 uniform_image(64, 11)};
    for (auto _ : state) {
        auto g = denoiser::sample_gradient(model, sample, {});
        benchmark::DoNotOptimize(g);
    }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
