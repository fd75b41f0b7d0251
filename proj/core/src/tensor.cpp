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

#include "qspeckle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qspeckle {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            s += "x";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <typename T>
void check_finite(const BasicTensor<T>& t, std::string_view what) {
    const auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            fail(ErrorKind::Numeric, std::string(what) + ": non-finite value at flat index " +
                                         std::to_string(i) + " of tensor " +
                                         shape_string(t.shape()));
        }
    }
}

namespace {

struct ConvDims {
    std::size_t height, width, cin, cout, k;
};

template <typename T>
ConvDims conv_dims(const BasicTensor<T>& input, const BasicTensor<T>& kernels) {
    require(input.rank() == 3, ErrorKind::Shape,
            "conv2d: input must be H x W x C, got " + shape_string(input.shape()));
    require(kernels.rank() == 4, ErrorKind::Shape,
            "conv2d: kernels must be k x k x Cin x Cout, got " + shape_string(kernels.shape()));
    const std::size_t k = kernels.dim(0);
    require(kernels.dim(1) == k, ErrorKind::Shape,
            "conv2d: kernels must be square, got " + shape_string(kernels.shape()));
    require(k % 2 == 1, ErrorKind::Shape, "conv2d: kernel size must be odd, got " + std::to_string(k));
    require(kernels.dim(2) == input.dim(2), ErrorKind::Shape,
            "conv2d: input has " + std::to_string(input.dim(2)) + " channels but kernels expect " +
                std::to_string(kernels.dim(2)));
    return {input.dim(0), input.dim(1), input.dim(2), kernels.dim(3), k};
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
    require(a.shape() == b.shape(), ErrorKind::Shape,
            std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                shape_string(b.shape()));
}

template <typename T, typename F>
BasicTensor<T> map(const BasicTensor<T>& a, const char* op, F f) {
    BasicTensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = f(a[i]);
    }
    check_finite(out, op);
    return out;
}

template <typename T, typename F>
BasicTensor<T> zip(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op, F f) {
    require_same_shape(a, b, op);
    BasicTensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = f(a[i], b[i]);
    }
    check_finite(out, op);
    return out;
}

} // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, Padding) {
    const auto [h, w, cin, cout, k] = conv_dims(input, kernels);
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);
    BasicTensor<T> out({h, w, cout});
    std::vector<double> acc(cout);
    const T* in = input.data().data();
    const T* ker = kernels.data().data();
    T* dst = out.data().data();

    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - r;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) - r;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const T* px = in + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
                    const T* tap = ker + (ky * k + kx) * cin * cout;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const double v = px[ci];
                        // Exact: adding v * w == 0 leaves acc unchanged for finite w.
                        if (v == 0.0) {
                            continue;
                        }
                        const T* row = tap + ci * cout;
                        for (std::size_t co = 0; co < cout; ++co) {
                            acc[co] += v * static_cast<double>(row[co]);
                        }
                    }
                }
            }
            T* o = dst + (y * w + x) * cout;
            for (std::size_t co = 0; co < cout; ++co) {
                o[co] = static_cast<T>(acc[co]);
            }
        }
    }
    return out;
}

template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_out, const BasicTensor<T>& kernels) {
    require(grad_out.rank() == 3 && kernels.rank() == 4, ErrorKind::Shape,
            "conv2d_backward: grad_out must be H x W x Cout and kernels k x k x Cin x Cout");
    const std::size_t h = grad_out.dim(0), w = grad_out.dim(1), cout = grad_out.dim(2);
    const std::size_t k = kernels.dim(0), cin = kernels.dim(2);
    require(kernels.dim(3) == cout, ErrorKind::Shape,
            "conv2d_backward: grad_out has " + std::to_string(cout) + " channels, kernels produce " +
                std::to_string(kernels.dim(3)));
    require(kernels.dim(1) == k && k % 2 == 1, ErrorKind::Shape,
            "conv2d_backward: kernels must be square with odd size");
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);

    std::vector<double> acc(h * w * cin, 0.0);
    const T* g = grad_out.data().data();
    const T* ker = kernels.data().data();

    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const T* gp = g + (y * w + x) * cout;
            for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - r;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) - r;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    double* dst = acc.data() + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
                    const T* tap = ker + (ky * k + kx) * cin * cout;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const T* row = tap + ci * cout;
                        double s = 0.0;
                        for (std::size_t co = 0; co < cout; ++co) {
                            s += static_cast<double>(gp[co]) * static_cast<double>(row[co]);
                        }
                        dst[ci] += s;
                    }
                }
            }
        }
    }

    BasicTensor<T> out({h, w, cin});
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<T>(acc[i]);
    }
    return out;
}

template <typename T>
BasicTensor<T> conv2d_backward_kernels(const BasicTensor<T>& grad_out, const BasicTensor<T>& saved_input,
                                       std::size_t kernel_size) {
    require(grad_out.rank() == 3 && saved_input.rank() == 3, ErrorKind::Shape,
            "conv2d_backward: grad_out and input must be rank 3");
    require(grad_out.dim(0) == saved_input.dim(0) && grad_out.dim(1) == saved_input.dim(1),
            ErrorKind::Shape,
            "conv2d_backward: spatial dims differ: " + shape_string(grad_out.shape()) + " vs " +
                shape_string(saved_input.shape()));
    require(kernel_size % 2 == 1, ErrorKind::Shape, "conv2d_backward: kernel size must be odd");
    const std::size_t h = grad_out.dim(0), w = grad_out.dim(1), cout = grad_out.dim(2);
    const std::size_t cin = saved_input.dim(2), k = kernel_size;
    const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);

    std::vector<double> acc(k * k * cin * cout, 0.0);
    const T* g = grad_out.data().data();
    const T* in = saved_input.data().data();

    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const T* gp = g + (y * w + x) * cout;
            for (std::size_t ky = 0; ky < k; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - r;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + kx) - r;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const T* px = in + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
                    double* tap = acc.data() + (ky * k + kx) * cin * cout;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const double v = px[ci];
                        if (v == 0.0) {
                            continue;
                        }
                        double* row = tap + ci * cout;
                        for (std::size_t co = 0; co < cout; ++co) {
                            row[co] += v * static_cast<double>(gp[co]);
                        }
                    }
                }
            }
        }
    }

    BasicTensor<T> out({k, k, cin, cout});
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<T>(acc[i]);
    }
    return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& saved_input,
                               const BasicTensor<T>& kernels) {
    const auto dims = conv_dims(saved_input, kernels);
    require(grad_out.shape() == Shape{dims.height, dims.width, dims.cout}, ErrorKind::Shape,
            "conv2d_backward: grad_out shape " + shape_string(grad_out.shape()) +
                " inconsistent with forward output " +
                shape_string({dims.height, dims.width, dims.cout}));
    return {conv2d_backward_input(grad_out, kernels),
            conv2d_backward_kernels(grad_out, saved_input, dims.k)};
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return zip(a, b, "add", [](T x, T y) { return x + y; });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return zip(a, b, "sub", [](T x, T y) { return x - y; });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return zip(a, b, "mul", [](T x, T y) { return x * y; });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor) {
    return map(a, "scale", [factor](T x) { return static_cast<T>(x * factor); });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
    return map(a, "relu", [](T x) { return x > T{0} ? x : T{0}; });
}

template <typename T>
BasicTensor<T> square(const BasicTensor<T>& a) {
    return map(a, "square", [](T x) { return x * x; });
}

template <typename T>
BasicTensor<T> sqrt(const BasicTensor<T>& a) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(a[i] >= T{0}, ErrorKind::Numeric,
                "sqrt: negative input at flat index " + std::to_string(i));
    }
    return map(a, "sqrt", [](T x) { return std::sqrt(x); });
}

template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& a, const BasicTensor<T>& bias) {
    require(a.rank() >= 1 && bias.rank() == 1 && bias.dim(0) == a.shape().back(), ErrorKind::Shape,
            "add_bias: bias " + shape_string(bias.shape()) + " does not match last axis of " +
                shape_string(a.shape()));
    BasicTensor<T> out(a.shape());
    const std::size_t c = bias.dim(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] + bias[i % c];
    }
    return out;
}

template <typename T>
double sum(const BasicTensor<T>& a) {
    double s = 0.0;
    for (T v : a.data()) {
        s += static_cast<double>(v);
    }
    return s;
}

template <typename T>
double mean(const BasicTensor<T>& a) {
    require(a.size() > 0, ErrorKind::Shape, "mean of empty tensor");
    return sum(a) / static_cast<double>(a.size());
}

#define QSPECKLE_INSTANTIATE_TENSOR_OPS(T)                                                          \
    template void check_finite<T>(const BasicTensor<T>&, std::string_view);                       \
    template BasicTensor<T> conv2d<T>(const BasicTensor<T>&, const BasicTensor<T>&, Padding);      \
    template Conv2dGrads<T> conv2d_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,       \
                                               const BasicTensor<T>&);                             \
    template BasicTensor<T> conv2d_backward_input<T>(const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> conv2d_backward_kernels<T>(const BasicTensor<T>&,                      \
                                                       const BasicTensor<T>&, std::size_t);        \
    template BasicTensor<T> add<T>(const BasicTensor<T>&, const BasicTensor<T>&);                  \
    template BasicTensor<T> sub<T>(const BasicTensor<T>&, const BasicTensor<T>&);                  \
    template BasicTensor<T> mul<T>(const BasicTensor<T>&, const BasicTensor<T>&);                  \
    template BasicTensor<T> scale<T>(const BasicTensor<T>&, double);                               \
    template BasicTensor<T> relu<T>(const BasicTensor<T>&);                                        \
    template BasicTensor<T> square<T>(const BasicTensor<T>&);                                      \
    template BasicTensor<T> sqrt<T>(const BasicTensor<T>&);                                        \
    template BasicTensor<T> add_bias<T>(const BasicTensor<T>&, const BasicTensor<T>&);             \
    template double sum<T>(const BasicTensor<T>&);                                                 \
    template double mean<T>(const BasicTensor<T>&);

QSPECKLE_INSTANTIATE_TENSOR_OPS(float)
QSPECKLE_INSTANTIATE_TENSOR_OPS(double)

#undef QSPECKLE_INSTANTIATE_TENSOR_OPS

} // namespace qspeckle
