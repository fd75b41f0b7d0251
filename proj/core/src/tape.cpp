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

#include "qspeckle/tape.hpp"

#include <cmath>

namespace qspeckle {

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::leaf(TensorT value, bool requires_grad) {
    check_finite(value, "tape leaf");
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
typename BasicTape<T>::Var BasicTape<T>::record(TensorT value, std::initializer_list<Var> inputs,
                                                Adjoint adjoint) {
    check_finite(value, "tape op output");
    bool needs = false;
    for (Var in : inputs) {
        require(in.id < nodes_.size(), ErrorKind::InvalidArgument, "tape: unknown input variable");
        needs = needs || nodes_[in.id].requires_grad;
    }
    Node node;
    node.value = std::move(value);
    node.requires_grad = needs;
    if (needs) {
        node.adjoint = std::move(adjoint);
    }
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
typename BasicTape<T>::TensorT BasicTape<T>::grad(Var v) const {
    const Node& node = nodes_.at(v.id);
    if (node.has_grad) {
        return node.grad;
    }
    return TensorT(node.value.shape());
}

template <typename T>
void BasicTape<T>::accumulate(Var v, const TensorT& g) {
    Node& node = nodes_.at(v.id);
    if (!node.requires_grad) {
        return;
    }
    require(g.shape() == node.value.shape(), ErrorKind::Shape,
            "tape: gradient shape " + shape_string(g.shape()) + " does not match value shape " +
                shape_string(node.value.shape()));
    check_finite(g, "tape gradient");
    if (!node.has_grad) {
        node.grad = g;
        node.has_grad = true;
        return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        node.grad[i] += g[i];
    }
}

template <typename T>
void BasicTape<T>::backward(Var root) {
    require(root.id < nodes_.size(), ErrorKind::InvalidArgument, "tape: unknown root variable");
    require(nodes_[root.id].value.size() == 1, ErrorKind::Shape,
            "tape: backward root must be a scalar, got " + shape_string(nodes_[root.id].value.shape()));
    for (Node& node : nodes_) {
        node.has_grad = false;
        node.grad = TensorT();
    }
    if (!nodes_[root.id].requires_grad) {
        return;
    }
    nodes_[root.id].grad = TensorT(nodes_[root.id].value.shape(), T{1});
    nodes_[root.id].has_grad = true;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.has_grad || !node.adjoint) {
            continue;
        }
        // Copy: the adjoint may grow or touch other nodes, never this one.
        const TensorT g = node.grad;
        node.adjoint(*this, g);
    }
}

namespace ad {

template <typename T>
Var<T> conv2d(BasicTape<T>& tape, Var<T> input, Var<T> kernels) {
    auto out = qspeckle::conv2d(tape.value(input), tape.value(kernels));
    return tape.record(std::move(out), {input, kernels}, [input, kernels](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& w = t.value(kernels);
        if (t.requires_grad(input)) {
            t.accumulate(input, conv2d_backward_input(g, w));
        }
        if (t.requires_grad(kernels)) {
            t.accumulate(kernels, conv2d_backward_kernels(g, t.value(input), w.dim(0)));
        }
    });
}

template <typename T>
Var<T> add_bias(BasicTape<T>& tape, Var<T> x, Var<T> bias) {
    auto out = qspeckle::add_bias(tape.value(x), tape.value(bias));
    return tape.record(std::move(out), {x, bias}, [x, bias](BasicTape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(x, g);
        if (t.requires_grad(bias)) {
            const std::size_t c = t.value(bias).size();
            std::vector<double> acc(c, 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                acc[i % c] += static_cast<double>(g[i]);
            }
            BasicTensor<T> gb(Shape{c});
            for (std::size_t j = 0; j < c; ++j) {
                gb[j] = static_cast<T>(acc[j]);
            }
            t.accumulate(bias, gb);
        }
    });
}

template <typename T>
Var<T> add(BasicTape<T>& tape, Var<T> a, Var<T> b) {
    auto out = qspeckle::add(tape.value(a), tape.value(b));
    return tape.record(std::move(out), {a, b}, [a, b](BasicTape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

template <typename T>
Var<T> sub(BasicTape<T>& tape, Var<T> a, Var<T> b) {
    auto out = qspeckle::sub(tape.value(a), tape.value(b));
    return tape.record(std::move(out), {a, b}, [a, b](BasicTape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, g);
        if (t.requires_grad(b)) {
            t.accumulate(b, qspeckle::scale(g, -1.0));
        }
    });
}

template <typename T>
Var<T> mul(BasicTape<T>& tape, Var<T> a, Var<T> b) {
    auto out = qspeckle::mul(tape.value(a), tape.value(b));
    return tape.record(std::move(out), {a, b}, [a, b](BasicTape<T>& t, const BasicTensor<T>& g) {
        if (t.requires_grad(a)) {
            t.accumulate(a, qspeckle::mul(g, t.value(b)));
        }
        if (t.requires_grad(b)) {
            t.accumulate(b, qspeckle::mul(g, t.value(a)));
        }
    });
}

template <typename T>
Var<T> scale(BasicTape<T>& tape, Var<T> a, double factor) {
    auto out = qspeckle::scale(tape.value(a), factor);
    return tape.record(std::move(out), {a}, [a, factor](BasicTape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, qspeckle::scale(g, factor));
    });
}

template <typename T>
Var<T> relu(BasicTape<T>& tape, Var<T> a) {
    auto out = qspeckle::relu(tape.value(a));
    return tape.record(std::move(out), {a}, [a](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& x = t.value(a);
        BasicTensor<T> ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = x[i] > T{0} ? g[i] : T{0};
        }
        t.accumulate(a, ga);
    });
}

template <typename T>
Var<T> square(BasicTape<T>& tape, Var<T> a) {
    auto out = qspeckle::square(tape.value(a));
    return tape.record(std::move(out), {a}, [a](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& x = t.value(a);
        BasicTensor<T> ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = T{2} * x[i] * g[i];
        }
        t.accumulate(a, ga);
    });
}

template <typename T>
Var<T> sqrt(BasicTape<T>& tape, Var<T> a) {
    auto out = qspeckle::sqrt(tape.value(a));
    return tape.record(std::move(out), {a}, [a](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& x = t.value(a);
        BasicTensor<T> ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = static_cast<T>(static_cast<double>(g[i]) * 0.5 / std::sqrt(static_cast<double>(x[i])));
        }
        t.accumulate(a, ga);
    });
}

template <typename T>
Var<T> sum(BasicTape<T>& tape, Var<T> a) {
    auto out = BasicTensor<T>::scalar(static_cast<T>(qspeckle::sum(tape.value(a))));
    return tape.record(std::move(out), {a}, [a](BasicTape<T>& t, const BasicTensor<T>& g) {
        t.accumulate(a, BasicTensor<T>(t.value(a).shape(), g.item()));
    });
}

template <typename T>
Var<T> mean(BasicTape<T>& tape, Var<T> a) {
    auto out = BasicTensor<T>::scalar(static_cast<T>(qspeckle::mean(tape.value(a))));
    return tape.record(std::move(out), {a}, [a](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& x = t.value(a);
        const T each = static_cast<T>(static_cast<double>(g.item()) / static_cast<double>(x.size()));
        t.accumulate(a, BasicTensor<T>(x.shape(), each));
    });
}

} // namespace ad

template class BasicTape<float>;
template class BasicTape<double>;

#define QSPECKLE_INSTANTIATE_AD_OPS(T)                                               \
    template ad::Var<T> ad::conv2d<T>(BasicTape<T>&, ad::Var<T>, ad::Var<T>);        \
    template ad::Var<T> ad::add_bias<T>(BasicTape<T>&, ad::Var<T>, ad::Var<T>);      \
    template ad::Var<T> ad::add<T>(BasicTape<T>&, ad::Var<T>, ad::Var<T>);           \
    template ad::Var<T> ad::sub<T>(BasicTape<T>&, ad::Var<T>, ad::Var<T>);           \
    template ad::Var<T> ad::mul<T>(BasicTape<T>&, ad::Var<T>, ad::Var<T>);           \
    template ad::Var<T> ad::scale<T>(BasicTape<T>&, ad::Var<T>, double);             \
    template ad::Var<T> ad::relu<T>(BasicTape<T>&, ad::Var<T>);                      \
    template ad::Var<T> ad::square<T>(BasicTape<T>&, ad::Var<T>);                    \
    template ad::Var<T> ad::sqrt<T>(BasicTape<T>&, ad::Var<T>);                      \
    template ad::Var<T> ad::sum<T>(BasicTape<T>&, ad::Var<T>);                       \
    template ad::Var<T> ad::mean<T>(BasicTape<T>&, ad::Var<T>);

QSPECKLE_INSTANTIATE_AD_OPS(float)
QSPECKLE_INSTANTIATE_AD_OPS(double)

#undef QSPECKLE_INSTANTIATE_AD_OPS

} // namespace qspeckle
