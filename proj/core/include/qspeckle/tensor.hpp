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

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qspeckle/error.hpp"

namespace qspeckle {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Rank 0 tensors hold a single scalar.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() : shape_{0} {}

    explicit BasicTensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        require(shape_size(shape_) == data_.size(), ErrorKind::Shape,
                "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                    shape_string(shape_));
    }

    static BasicTensor scalar(T value) { return BasicTensor(Shape{}, std::vector<T>{value}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Scalar value of a single-element tensor.
    T item() const {
        require(data_.size() == 1, ErrorKind::Shape,
                "item() on tensor of shape " + shape_string(shape_));
        return data_[0];
    }

    bool all_finite() const noexcept {
        for (T v : data_) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    template <typename U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out[i] = static_cast<U>(data_[i]);
        }
        return BasicTensor<U>(shape_, std::move(out));
    }

    BasicTensor reshaped(Shape shape) const& { return BasicTensor(std::move(shape), data_); }
    BasicTensor reshaped(Shape shape) && { return BasicTensor(std::move(shape), std::move(data_)); }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Throws ErrorKind::Numeric naming `what` if any value is NaN or infinite.
template <typename T>
void check_finite(const BasicTensor<T>& t, std::string_view what);

// ---------------------------------------------------------------------------
// 2-D convolution over H x W x C tensors with k x k x Cin x Cout kernels.
//
// Cross-correlation with zero "same" padding. Accumulation is in double, in
// the fixed order (ky, kx, cin) per output pixel, so results are bitwise
// reproducible regardless of how callers parallelise across images.
// ---------------------------------------------------------------------------

enum class Padding { Same };

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      Padding padding = Padding::Same);

template <typename T>
struct Conv2dGrads {
    BasicTensor<T> grad_input;
    BasicTensor<T> grad_kernels;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& saved_input,
                               const BasicTensor<T>& kernels);

template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_out, const BasicTensor<T>& kernels);

template <typename T>
BasicTensor<T> conv2d_backward_kernels(const BasicTensor<T>& grad_out,
                                       const BasicTensor<T>& saved_input, std::size_t kernel_size);

// Elementwise and reduction ops. Binary ops require identical shapes.

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor);
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a);
template <typename T>
BasicTensor<T> square(const BasicTensor<T>& a);
/// Requires all inputs >= 0.
template <typename T>
BasicTensor<T> sqrt(const BasicTensor<T>& a);
/// Channel-wise bias over the last axis.
template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& a, const BasicTensor<T>& bias);

template <typename T>
double sum(const BasicTensor<T>& a);
template <typename T>
double mean(const BasicTensor<T>& a);

} // namespace qspeckle
