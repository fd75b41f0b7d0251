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
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qspeckle/error.hpp"
#include "qspeckle/qsim.hpp"
#include "qspeckle_oracles/dense_circuit.hpp"

using namespace qspeckle;
using namespace qspeckle::qsim;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_amps(const StateVector& s, std::vector<double> want, double tol = 1e-12) {
    ASSERT_EQ(s.dimension(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_NEAR(s.amplitudes()[i].real(), want[i], tol) << "amp " << i;
        EXPECT_NEAR(s.amplitudes()[i].imag(), 0.0, tol) << "amp " << i;
    }
}

StateVector basis(int n, std::size_t index) {
    auto s = new_state(n);
    s.amplitudes()[0] = 0.0;
    s.amplitudes()[index] = 1.0;
    return s;
}

} // namespace

TEST(NewState, SmallRegisters) {
    expect_amps(new_state(1), {1, 0});
    expect_amps(new_state(2), {1, 0, 0, 0});
    const auto s9 = new_state(9);
    EXPECT_EQ(s9.dimension(), 512u);
    EXPECT_EQ(s9.norm_squared(), 1.0);
}

TEST(NewState, RejectsOutOfRangeSizes) {
    EXPECT_THROW(new_state(0), Error);
    EXPECT_THROW(new_state(13), Error);
    EXPECT_NO_THROW(new_state(kMaxQubits));
}

TEST(Ry, PiFlipsZeroToOne) {
    auto s = new_state(1);
    apply_ry(s, 0, kPi);
    expect_amps(s, {0, 1});
}

TEST(Ry, ZeroAngleIsIdentity) {
    auto s = new_state(3);
    apply_ry(s, 1, 0.4);
    auto before = s;
    apply_ry(s, 2, 0.0);
    for (std::size_t i = 0; i < s.dimension(); ++i) {
        EXPECT_EQ(s.amplitudes()[i], before.amplitudes()[i]);
    }
}

TEST(Ry, HalfPiMakesEqualSuperposition) {
    auto s = new_state(1);
    apply_ry(s, 0, kPi / 2);
    expect_amps(s, {1 / std::sqrt(2.0), 1 / std::sqrt(2.0)});
}

TEST(Ry, QubitZeroIsTheMostSignificantBit) {
    auto s = new_state(2);
    apply_ry(s, 0, kPi);
    expect_amps(s, {0, 0, 1, 0});
}

TEST(Gates, RejectInvalidQubits) {
    auto s = new_state(3);
    EXPECT_THROW(apply_ry(s, 3, 0.1), Error);
    EXPECT_THROW(apply_ry(s, -1, 0.1), Error);
    EXPECT_THROW(apply_rx(s, 5, 0.1), Error);
    EXPECT_THROW(apply_cnot(s, 1, 1), Error);
    EXPECT_THROW(apply_cnot(s, 0, 3), Error);
    EXPECT_THROW(expect_z(s, 3), Error);
    EXPECT_THROW(apply_ry(s, 0, std::nan("")), Error);
}

TEST(Cnot, FlipsTargetWhenControlSet) {
    auto s = basis(2, 0b10);
    apply_cnot(s, 0, 1);
    expect_amps(s, {0, 0, 0, 1});
}

TEST(Cnot, LeavesZeroStateAlone) {
    auto s = new_state(2);
    apply_cnot(s, 0, 1);
    expect_amps(s, {1, 0, 0, 0});
}

TEST(Cnot, IsAnInvolution) {
    auto s = new_state(3);
    apply_ry(s, 0, 0.3);
    apply_ry(s, 1, 1.1);
    apply_ry(s, 2, 2.7);
    const auto before = s;
    apply_cnot(s, 2, 0);
    apply_cnot(s, 2, 0);
    for (std::size_t i = 0; i < s.dimension(); ++i) {
        EXPECT_EQ(s.amplitudes()[i], before.amplitudes()[i]);
    }
}

TEST(ExpectZ, BasisStatesAndSuperposition) {
    EXPECT_EQ(expect_z(new_state(1), 0), 1.0);
    EXPECT_EQ(expect_z(basis(1, 1), 0), -1.0);
    auto s = new_state(1);
    apply_ry(s, 0, kPi / 2);
    EXPECT_NEAR(expect_z(s, 0), 0.0, 1e-9);
}

TEST(Rx, MatchesDenseOracle) {
    auto s = new_state(2);
    apply_ry(s, 0, 0.7);
    apply_rx(s, 1, 1.9);
    auto want = oracle::zero_state(2);
    want = oracle::apply(oracle::single_qubit_op(2, 0, oracle::ry_matrix(0.7)), want);
    want = oracle::apply(oracle::single_qubit_op(2, 1, oracle::rx_matrix(1.9)), want);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(std::abs(s.amplitudes()[i] - want[i]), 0.0, 1e-12);
    }
}

TEST(BasicEntangler, AllZeroGivesPlusOnes) {
    CircuitSpec spec{9, 1, 0, {std::vector<double>(9, 0.0)}};
    const auto out = run_basic_entangler(std::vector<double>(9, 0.0), spec);
    EXPECT_EQ(out, std::vector<double>(9, 1.0));
}

TEST(BasicEntangler, OneLayerMatchesDenseAmplitudes) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 2 * kPi);
    for (int draw = 0; draw < 5; ++draw) {
        std::vector<double> angles(9), w(9);
        for (int q = 0; q < 9; ++q) {
            angles[q] = u(rng);
            w[q] = u(rng);
        }
        const CircuitSpec spec{9, 1, 0, {w}};
        // Rebuild the final state with the strided gates and compare amplitudes.
        auto s = new_state(9);
        for (int q = 0; q < 9; ++q) apply_ry(s, q, angles[q]);
        for (int q = 0; q < 9; ++q) apply_ry(s, q, w[q]);
        for (int q = 0; q < 9; ++q) apply_cnot(s, q, (q + 1) % 9);
        const auto want = oracle::basic_entangler_state(angles, spec.weights);
        for (std::size_t i = 0; i < 512; ++i) {
            EXPECT_LE(std::abs(s.amplitudes()[i] - want[i]), 1e-9);
        }
        const auto z = run_basic_entangler(angles, spec);
        for (int q = 0; q < 9; ++q) {
            EXPECT_NEAR(z[q], expect_z(s, q), 1e-12);
        }
    }
}

TEST(BasicEntangler, SingleFlippedQubitPropagatesAroundTheRing) {
    std::vector<double> angles(9, 0.0);
    angles[0] = kPi;
    const CircuitSpec spec{9, 1, 0, {std::vector<double>(9, 0.0)}};
    const auto out = run_basic_entangler(angles, spec);
    const auto want = oracle::basic_entangler(angles, spec.weights);
    for (int q = 0; q < 9; ++q) {
        EXPECT_NEAR(out[q], want[q], 1e-12);
    }
    // Ring 0->1, 1->2, ... copies the flip down the chain; 8->0 then clears qubit 0.
    EXPECT_NEAR(out[0], 1.0, 1e-12);
    for (int q = 1; q < 9; ++q) {
        EXPECT_NEAR(out[q], -1.0, 1e-12);
    }
}

TEST(BasicEntangler, SmallRegistersUsePennyLaneRing) {
    for (int n : {1, 2, 3}) {
        auto spec = CircuitSpec::from_seed(n, 2, 17);
        std::vector<double> angles(static_cast<std::size_t>(n), 0.9);
        const auto out = run_basic_entangler(angles, spec);
        const auto want = oracle::basic_entangler(angles, spec.weights);
        for (int q = 0; q < n; ++q) {
            EXPECT_NEAR(out[q], want[q], 1e-12) << "n=" << n;
        }
    }
}

TEST(BasicEntangler, RejectsLengthMismatch) {
    const auto spec = CircuitSpec::from_seed(9, 1, 0);
    EXPECT_THROW(run_basic_entangler(std::vector<double>(8, 0.0), spec), Error);
    std::vector<double> out(8);
    EXPECT_THROW(run_basic_entangler(std::vector<double>(9, 0.0), spec, out), Error);
}

TEST(CircuitSpecTest, SeedDeterminesWeights) {
    const auto a = CircuitSpec::from_seed(9, 2, 42);
    const auto b = CircuitSpec::from_seed(9, 2, 42);
    const auto c = CircuitSpec::from_seed(9, 2, 43);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.weights, c.weights);
    ASSERT_EQ(a.weights.size(), 2u);
    for (const auto& layer : a.weights) {
        ASSERT_EQ(layer.size(), 9u);
        for (double w : layer) {
            EXPECT_GE(w, 0.0);
            EXPECT_LT(w, 2 * kPi);
        }
    }
    std::vector<double> angles(9, 1.0);
    EXPECT_EQ(run_basic_entangler(angles, a), run_basic_entangler(angles, b));
}

TEST(CircuitSpecTest, ValidateRejectsMalformedSpecs) {
    EXPECT_THROW((CircuitSpec{9, 0, 0, {}}).validate(), Error);
    EXPECT_THROW((CircuitSpec{9, 1, 0, {std::vector<double>(8, 0.0)}}).validate(), Error);
    EXPECT_THROW((CircuitSpec{9, 1, 0, {std::vector<double>(9, INFINITY)}}).validate(), Error);
    EXPECT_THROW((CircuitSpec{13, 1, 0, {std::vector<double>(13, 0.0)}}).validate(), Error);
}

TEST(CircuitSpecTest, JsonRoundTripIsLossless) {
    auto spec = CircuitSpec::from_seed(9, 3, 7);
    spec.weights[0][0] = 12.5;  // angles are kept unreduced
    const auto back = circuit_from_json(nlohmann::json::parse(to_json(spec).dump()));
    EXPECT_EQ(back, spec);
    EXPECT_EQ(spec_hash(back), spec_hash(spec));
    EXPECT_EQ(spec_hash(spec).size(), 64u);
}

TEST(CircuitSpecTest, WeightsAreDerivedFromSeedWhenAbsent) {
    const nlohmann::json j{{"n_qubits", 9}, {"n_layers", 2}, {"seed", 5}};
    EXPECT_EQ(circuit_from_json(j), CircuitSpec::from_seed(9, 2, 5));
    EXPECT_TRUE(to_json(circuit_from_json(j)).contains("weights"));
    EXPECT_THROW(circuit_from_json(nlohmann::json{{"n_qubits", 9}}), Error);
}

TEST(CircuitSpecTest, HashChangesWithAnyWeight) {
    auto a = CircuitSpec::from_seed(9, 1, 1);
    auto b = a;
    b.weights[0][4] += 1e-12;
    EXPECT_NE(spec_hash(a), spec_hash(b));
}

// Property: norm is preserved after every gate of random sequences.
TEST(QsimProperty, NormPreservedAfterEveryGate) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> angle(-4 * kPi, 4 * kPi);
    for (int seq = 0; seq < 200; ++seq) {
        const int n = 1 + static_cast<int>(rng() % 9);
        auto s = new_state(n);
        const int len = 1 + static_cast<int>(rng() % 50);
        for (int g = 0; g < len; ++g) {
            const int q = static_cast<int>(rng() % n);
            switch (n == 1 ? rng() % 2 : rng() % 3) {
            case 0: apply_ry(s, q, angle(rng)); break;
            case 1: apply_rx(s, q, angle(rng)); break;
            default: apply_cnot(s, q, (q + 1 + static_cast<int>(rng() % (n - 1))) % n); break;
            }
            ASSERT_LE(std::abs(s.norm_squared() - 1.0), 1e-9);
            for (int k = 0; k < n; ++k) {
                const double z = expect_z(s, k);
                ASSERT_GE(z, -1.0 - 1e-12);
                ASSERT_LE(z, 1.0 + 1e-12);
            }
        }
    }
}

// Property: agreement with the Kronecker-product oracle over random draws.
TEST(QsimProperty, MatchesDenseOracleOnRandomDraws) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-2 * kPi, 2 * kPi);
    for (int draw = 0; draw < 40; ++draw) {
        const int layers = 1 + draw % 3;
        CircuitSpec spec{9, layers, 0, {}};
        for (int l = 0; l < layers; ++l) {
            std::vector<double> w(9);
            for (auto& x : w) x = u(rng);
            spec.weights.push_back(w);
        }
        std::vector<double> angles(9);
        for (auto& a : angles) a = u(rng);
        const auto got = run_basic_entangler(angles, spec);
        const auto want = oracle::basic_entangler(angles, spec.weights);
        for (int q = 0; q < 9; ++q) {
            ASSERT_NEAR(got[q], want[q], 1e-8);
        }
    }
}
