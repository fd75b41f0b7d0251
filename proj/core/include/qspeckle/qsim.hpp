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

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qspeckle::qsim {

inline constexpr int kMaxQubits = 12;

using Amplitude = std::complex<double>;

/// Dense n-qubit pure state. Qubit 0 is the most significant bit of the
/// basis index, so |q0 q1 ... q(n-1)> maps to index sum q_k * 2^(n-1-k).
class StateVector {
public:
    /// |0...0>. Throws InvalidArgument unless 1 <= n_qubits <= kMaxQubits.
    explicit StateVector(int n_qubits);

    int n_qubits() const noexcept { return n_qubits_; }
    std::size_t dimension() const noexcept { return amps_.size(); }

    std::span<Amplitude> amplitudes() noexcept { return amps_; }
    std::span<const Amplitude> amplitudes() const noexcept { return amps_; }

    double norm_squared() const noexcept;

private:
    int n_qubits_;
    std::vector<Amplitude> amps_;
};

StateVector new_state(int n_qubits);

/// RY(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]].
void apply_ry(StateVector& state, int qubit, double angle);
/// RX(theta) = [[cos t/2, -i sin t/2], [-i sin t/2, cos t/2]].
void apply_rx(StateVector& state, int qubit, double angle);
void apply_cnot(StateVector& state, int control, int target);
double expect_z(const StateVector& state, int qubit);

/// Basic Entangler circuit description. `weights[layer][qubit]` are radians,
/// kept unreduced.
struct CircuitSpec {
    int n_qubits = 9;
    int n_layers = 1;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> weights;

    /// Draws weights i.i.d. Uniform[0, 2pi) from mt19937_64(seed), layer-major.
    static CircuitSpec from_seed(int n_qubits, int n_layers, std::uint64_t seed);

    void validate() const;

    friend bool operator==(const CircuitSpec&, const CircuitSpec&) = default;
};

/// {n_qubits, n_layers, seed, weights}; weights always written.
nlohmann::json to_json(const CircuitSpec& spec);
/// `weights` is optional and derived from `seed` when absent.
CircuitSpec circuit_from_json(const nlohmann::json& j);

/// SHA-256 of the canonical JSON form; identifies features and checkpoints.
std::string spec_hash(const CircuitSpec& spec);

/// Prepares |0...0>, applies RY(input_angles[q]) on every wire, then per layer
/// RY(weights[l][q]) on every wire followed by the CNOT ring q -> q+1 (mod n),
/// and returns <Z_q> for each wire. The ring degenerates to a single CNOT for
/// two wires and to nothing for one.
///
/// All gates here are real, so this runs on a real amplitude buffer rather
/// than StateVector. Switching the layer rotation to RX would route through
/// the complex StateVector path instead.
std::vector<double> run_basic_entangler(std::span<const double> input_angles, const CircuitSpec& spec);

/// Allocation-free variant; `out` must have n_qubits entries. Reuses a
/// thread-local amplitude buffer.
void run_basic_entangler(std::span<const double> input_angles, const CircuitSpec& spec,
                         std::span<double> out);

} // namespace qspeckle::qsim
