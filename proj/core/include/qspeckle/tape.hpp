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
#include <functional>
#include <initializer_list>
#include <vector>

#include "qspeckle/tensor.hpp"

namespace qspeckle {

/// Reverse-mode gradient tape over a static graph.
///
/// Every op appends one node holding its output value and an adjoint closure.
/// `backward` walks nodes in reverse insertion order, so each node's gradient
/// is complete before its adjoint runs. Only first-order gradients.
template <typename T>
class BasicTape {
public:
    using TensorT = BasicTensor<T>;

    struct Var {
        std::size_t id = 0;
    };

    /// Adds `grad_out` contributions into the inputs' gradients via accumulate().
    using Adjoint = std::function<void(BasicTape&, const TensorT& grad_out)>;

    Var leaf(TensorT value, bool requires_grad = false);

    /// Appends an op result. The node requires grad iff any input does; the
    /// output is checked for NaN/Inf.
    Var record(TensorT value, std::initializer_list<Var> inputs, Adjoint adjoint);

    const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    /// Gradient of the last backward() root w.r.t. `v`; zeros if `v` was unreachable.
    TensorT grad(Var v) const;

    void accumulate(Var v, const TensorT& g);

    /// Seeds d(root)/d(root) = 1. `root` must hold exactly one element.
    void backward(Var root);

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        TensorT value;
        TensorT grad;
        bool requires_grad = false;
        bool has_grad = false;
        Adjoint adjoint;
    };

    std::vector<Node> nodes_;
};

using Tape = BasicTape<float>;
using TapeD = BasicTape<double>;

namespace ad {

template <typename T>
using Var = typename BasicTape<T>::Var;

template <typename T>
Var<T> conv2d(BasicTape<T>& tape, Var<T> input, Var<T> kernels);
template <typename T>
Var<T> add_bias(BasicTape<T>& tape, Var<T> x, Var<T> bias);
template <typename T>
Var<T> add(BasicTape<T>& tape, Var<T> a, Var<T> b);
/// The subtraction layer of the residual denoiser is this op.
template <typename T>
Var<T> sub(BasicTape<T>& tape, Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(BasicTape<T>& tape, Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(BasicTape<T>& tape, Var<T> a, double factor);
/// relu'(0) = 0.
template <typename T>
Var<T> relu(BasicTape<T>& tape, Var<T> a);
template <typename T>
Var<T> square(BasicTape<T>& tape, Var<T> a);
template <typename T>
Var<T> sqrt(BasicTape<T>& tape, Var<T> a);
/// Rank-0 result.
template <typename T>
Var<T> sum(BasicTape<T>& tape, Var<T> a);
/// Rank-0 result.
template <typename T>
Var<T> mean(BasicTape<T>& tape, Var<T> a);

} // namespace ad

} // namespace qspeckle
