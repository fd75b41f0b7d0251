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

#include "qspeckle/qsim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "qspeckle/error.hpp"
#include "qspeckle/hash.hpp"

namespace qspeckle::qsim {

namespace {

std::size_t bit_of(int n_qubits, int qubit) {
    return std::size_t{1} << (n_qubits - 1 - qubit);
}

void check_qubit(int n_qubits, int qubit, const char* what) {
    require(qubit >= 0 && qubit < n_qubits, ErrorKind::InvalidArgument,
            std::string(what) + ": qubit index " + std::to_string(qubit) + " out of range for " +
                std::to_string(n_qubits) + " qubits");
}

// Pairs (i0, i1 = i0 | bit) are visited with the target bit clear in i0.
template <typename Amp>
void ry_kernel(std::span<Amp> amps, std::size_t bit, double c, double s) {
    const std::size_t dim = amps.size();
    for (std::size_t base = 0; base < dim; base += 2 * bit) {
        for (std::size_t j = base; j < base + bit; ++j) {
            const Amp a0 = amps[j];
            const Amp a1 = amps[j + bit];
            amps[j] = c * a0 - s * a1;
            amps[j + bit] = s * a0 + c * a1;
        }
    }
}

template <typename Amp>
void cnot_kernel(std::span<Amp> amps, std::size_t control_bit, std::size_t target_bit) {
    const std::size_t dim = amps.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & control_bit) != 0 && (i & target_bit) == 0) {
            std::swap(amps[i], amps[i | target_bit]);
        }
    }
}

template <typename Amp>
double z_kernel(std::span<const Amp> amps, std::size_t bit) {
    double acc = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        acc += (i & bit) ? -p : p;
    }
    return acc;
}

void ring(int n, auto&& cnot) {
    if (n == 2) {
        cnot(0, 1);
    } else if (n > 2) {
        for (int q = 0; q < n; ++q) {
            cnot(q, (q + 1) % n);
        }
    }
}

} // namespace

StateVector::StateVector(int n_qubits) : n_qubits_(n_qubits) {
    require(n_qubits >= 1 && n_qubits <= kMaxQubits, ErrorKind::InvalidArgument,
            "state vector: n_qubits must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                std::to_string(n_qubits));
    amps_.assign(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
    amps_[0] = Amplitude{1.0, 0.0};
}

double StateVector::norm_squared() const noexcept {
    double acc = 0.0;
    for (const auto& a : amps_) {
        acc += std::norm(a);
    }
    return acc;
}

StateVector new_state(int n_qubits) {
    return StateVector(n_qubits);
}

void apply_ry(StateVector& state, int qubit, double angle) {
    check_qubit(state.n_qubits(), qubit, "ry");
    require(std::isfinite(angle), ErrorKind::InvalidArgument, "ry: non-finite angle");
    ry_kernel(state.amplitudes(), bit_of(state.n_qubits(), qubit), std::cos(angle / 2), std::sin(angle / 2));
}

void apply_rx(StateVector& state, int qubit, double angle) {
    check_qubit(state.n_qubits(), qubit, "rx");
    require(std::isfinite(angle), ErrorKind::InvalidArgument, "rx: non-finite angle");
    const std::size_t bit = bit_of(state.n_qubits(), qubit);
    const double c = std::cos(angle / 2);
    const Amplitude mis{0.0, -std::sin(angle / 2)};
    auto amps = state.amplitudes();
    for (std::size_t base = 0; base < amps.size(); base += 2 * bit) {
        for (std::size_t j = base; j < base + bit; ++j) {
            const Amplitude a0 = amps[j];
            const Amplitude a1 = amps[j + bit];
            amps[j] = c * a0 + mis * a1;
            amps[j + bit] = mis * a0 + c * a1;
        }
    }
}

void apply_cnot(StateVector& state, int control, int target) {
    check_qubit(state.n_qubits(), control, "cnot control");
    check_qubit(state.n_qubits(), target, "cnot target");
    require(control != target, ErrorKind::InvalidArgument, "cnot: control and target must differ");
    cnot_kernel(state.amplitudes(), bit_of(state.n_qubits(), control), bit_of(state.n_qubits(), target));
}

double expect_z(const StateVector& state, int qubit) {
    check_qubit(state.n_qubits(), qubit, "expect_z");
    return z_kernel(state.amplitudes(), bit_of(state.n_qubits(), qubit));
}

CircuitSpec CircuitSpec::from_seed(int n_qubits, int n_layers, std::uint64_t seed) {
    CircuitSpec spec;
    spec.n_qubits = n_qubits;
    spec.n_layers = n_layers;
    spec.seed = seed;
    require(n_qubits >= 1 && n_qubits <= kMaxQubits && n_layers >= 1, ErrorKind::InvalidArgument,
            "circuit: need 1 <= n_qubits <= " + std::to_string(kMaxQubits) + " and n_layers >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    spec.weights.assign(static_cast<std::size_t>(n_layers), std::vector<double>(static_cast<std::size_t>(n_qubits)));
    for (auto& layer : spec.weights) {
        for (auto& w : layer) {
            w = angle(rng);
        }
    }
    return spec;
}

void CircuitSpec::validate() const {
    require(n_qubits >= 1 && n_qubits <= kMaxQubits, ErrorKind::InvalidArgument,
            "circuit: n_qubits must be in [1, " + std::to_string(kMaxQubits) + "]");
    require(n_layers >= 1, ErrorKind::InvalidArgument, "circuit: n_layers must be >= 1");
    require(weights.size() == static_cast<std::size_t>(n_layers), ErrorKind::InvalidArgument,
            "circuit: expected " + std::to_string(n_layers) + " weight layers, got " +
                std::to_string(weights.size()));
    for (const auto& layer : weights) {
        require(layer.size() == static_cast<std::size_t>(n_qubits), ErrorKind::InvalidArgument,
                "circuit: each weight layer needs " + std::to_string(n_qubits) + " angles");
        for (double w : layer) {
            require(std::isfinite(w), ErrorKind::InvalidArgument, "circuit: non-finite weight");
        }
    }
}

nlohmann::json to_json(const CircuitSpec& spec) {
    return nlohmann::json{{"n_qubits", spec.n_qubits},
                          {"n_layers", spec.n_layers},
                          {"seed", spec.seed},
                          {"weights", spec.weights}};
}

CircuitSpec circuit_from_json(const nlohmann::json& j) {
    try {
        const int n_qubits = j.at("n_qubits").get<int>();
        const int n_layers = j.at("n_layers").get<int>();
        const auto seed = j.at("seed").get<std::uint64_t>();
        CircuitSpec spec;
        if (j.contains("weights") && !j.at("weights").is_null()) {
            spec.n_qubits = n_qubits;
            spec.n_layers = n_layers;
            spec.seed = seed;
            spec.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        } else {
            spec = CircuitSpec::from_seed(n_qubits, n_layers, seed);
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("circuit spec json: ") + e.what());
    }
}

std::string spec_hash(const CircuitSpec& spec) {
    return sha256_hex(to_json(spec).dump());
}

std::vector<double> run_basic_entangler(std::span<const double> input_angles, const CircuitSpec& spec) {
    std::vector<double> out(static_cast<std::size_t>(spec.n_qubits));
    run_basic_entangler(input_angles, spec, out);
    return out;
}

void run_basic_entangler(std::span<const double> input_angles, const CircuitSpec& spec,
                         std::span<double> out) {
    const int n = spec.n_qubits;
    require(input_angles.size() == static_cast<std::size_t>(n), ErrorKind::InvalidArgument,
            "basic entangler: expected " + std::to_string(n) + " input angles, got " +
                std::to_string(input_angles.size()));
    require(out.size() == static_cast<std::size_t>(n), ErrorKind::InvalidArgument,
            "basic entangler: output span must hold one value per qubit");
    require(n >= 1 && n <= kMaxQubits && spec.weights.size() == static_cast<std::size_t>(spec.n_layers),
            ErrorKind::InvalidArgument, "basic entangler: malformed circuit spec");

    thread_local std::vector<double> buffer;
    buffer.assign(std::size_t{1} << n, 0.0);
    buffer[0] = 1.0;
    const std::span<double> amps(buffer);

    auto ry = [&](int q, double angle) { ry_kernel(amps, bit_of(n, q), std::cos(angle / 2), std::sin(angle / 2)); };
    auto cnot = [&](int c, int t) { cnot_kernel(amps, bit_of(n, c), bit_of(n, t)); };

    for (int q = 0; q < n; ++q) {
        ry(q, input_angles[static_cast<std::size_t>(q)]);
    }
    for (const auto& layer : spec.weights) {
        require(layer.size() == static_cast<std::size_t>(n), ErrorKind::InvalidArgument,
                "basic entangler: weight layer has wrong length");
        for (int q = 0; q < n; ++q) {
            ry(q, layer[static_cast<std::size_t>(q)]);
        }
        ring(n, cnot);
    }
    for (int q = 0; q < n; ++q) {
        out[static_cast<std::size_t>(q)] = z_kernel<double>(amps, bit_of(n, q));
    }
}

} // namespace qspeckle::qsim
