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

#include "qspeckle/denoiser.hpp"

namespace qspeckle::denoiser {

namespace {

template <typename T>
std::pair<std::size_t, std::size_t> plane_dims(const BasicTensor<T>& t, const char* what) {
    const bool plane = t.rank() == 2 || (t.rank() == 3 && t.dim(2) == 1);
    require(plane, ErrorKind::Shape,
            std::string(what) + ": expected H x W or H x W x 1, got " + shape_string(t.shape()));
    return {t.dim(0), t.dim(1)};
}

template <typename T>
void require_matching(const BasicTensor<T>& pred, const BasicTensor<T>& gt, const char* what) {
    const auto a = plane_dims(pred, what);
    const auto b = plane_dims(gt, what);
    require(a == b, ErrorKind::Shape,
            std::string(what) + ": prediction " + shape_string(pred.shape()) + " vs reference " +
                shape_string(gt.shape()));
    require(a.first * a.second >= 2, ErrorKind::Shape, std::string(what) + ": need at least two pixels");
}

template <typename T>
ad::Var<T> add_constant(BasicTape<T>& tape, ad::Var<T> a, double c) {
    auto out = BasicTensor<T>::scalar(static_cast<T>(static_cast<double>(tape.value(a).item()) + c));
    return tape.record(std::move(out), {a}, [a](BasicTape<T>& t, const BasicTensor<T>& g) { t.accumulate(a, g); });
}

} // namespace

template <typename T>
ad::Var<T> mse_term(BasicTape<T>& tape, ad::Var<T> pred, const BasicTensor<T>& gt) {
    const auto& x = tape.value(pred);
    require_matching(x, gt, "mse term");
    const std::size_t n = x.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - gt[i];
        acc += d * d;
    }
    auto out = BasicTensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)));
    return tape.record(std::move(out), {pred}, [pred, gt](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& xv = t.value(pred);
        const double scale = 2.0 * static_cast<double>(g.item()) / static_cast<double>(xv.size());
        BasicTensor<T> gx(xv.shape());
        for (std::size_t i = 0; i < xv.size(); ++i) {
            gx[i] = static_cast<T>(scale * (static_cast<double>(xv[i]) - gt[i]));
        }
        t.accumulate(pred, gx);
    });
}

template <typename T>
ad::Var<T> ssim_term(BasicTape<T>& tape, ad::Var<T> pred, const BasicTensor<T>& gt, double c1, double c2) {
    const auto& x = tape.value(pred);
    require_matching(x, gt, "ssim term");
    require(c1 > 0 && c2 > 0, ErrorKind::InvalidArgument, "ssim term: stabilizers must be positive");
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);

    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += gt[i];
    }
    const double mx = sx / nd;
    const double my = sy / nd;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = gt[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    vx /= nd;
    vy /= nd;
    cxy /= nd;
    const double a = 2.0 * mx * my + c1;
    const double b = 2.0 * cxy + c2;
    const double c = mx * mx + my * my + c1;
    const double d = vx + vy + c2;
    const double s = (a * b) / (c * d);

    auto out = BasicTensor<T>::scalar(static_cast<T>(s));
    return tape.record(std::move(out), {pred}, [=](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& xv = t.value(pred);
        // dS/dx_i = S * (dA/A + dB/B - dC/C - dD/D) with dA = 2 my / N,
        // dB = 2 (y_i - my) / N, dC = 2 mx / N, dD = 2 (x_i - mx) / N.
        const double k = static_cast<double>(g.item()) * s * 2.0 / nd;
        const double common = my / a - mx / c;
        BasicTensor<T> gx(xv.shape());
        for (std::size_t i = 0; i < xv.size(); ++i) {
            gx[i] = static_cast<T>(k * (common + (gt[i] - my) / b - (xv[i] - mx) / d));
        }
        t.accumulate(pred, gx);
    });
}

template <typename T>
ad::Var<T> tv_term(BasicTape<T>& tape, ad::Var<T> pred, double epsilon) {
    const auto& x = tape.value(pred);
    const auto [h, w] = plane_dims(x, "tv term");
    require(h >= 2 && w >= 2, ErrorKind::Shape, "tv term: image must be at least 2x2");
    require(epsilon >= 0.0, ErrorKind::InvalidArgument, "tv term: epsilon must be non-negative");
    const double eps2 = epsilon * epsilon;
    double acc = 0.0;
    for (std::size_t r = 0; r + 1 < h; ++r) {
        for (std::size_t c = 0; c + 1 < w; ++c) {
            const double v = x[r * w + c];
            const double dx = x[r * w + c + 1] - v;
            const double dy = x[(r + 1) * w + c] - v;
            acc += std::sqrt(dx * dx + dy * dy + eps2) - epsilon;
        }
    }
    auto out = BasicTensor<T>::scalar(static_cast<T>(acc));
    return tape.record(std::move(out), {pred}, [pred, h, w, eps2](BasicTape<T>& t, const BasicTensor<T>& g) {
        const auto& xv = t.value(pred);
        const double gs = g.item();
        std::vector<double> acc_grad(xv.size(), 0.0);
        for (std::size_t r = 0; r + 1 < h; ++r) {
            for (std::size_t c = 0; c + 1 < w; ++c) {
                const std::size_t i = r * w + c;
                const double v = xv[i];
                const double dx = xv[i + 1] - v;
                const double dy = xv[i + w] - v;
                const double root = std::sqrt(dx * dx + dy * dy + eps2);
                if (root == 0.0) {
                    continue; // eps == 0 on a flat spot: use the zero subgradient
                }
                acc_grad[i + 1] += gs * dx / root;
                acc_grad[i + w] += gs * dy / root;
                acc_grad[i] -= gs * (dx + dy) / root;
            }
        }
        BasicTensor<T> gx(xv.shape());
        for (std::size_t i = 0; i < xv.size(); ++i) {
            gx[i] = static_cast<T>(acc_grad[i]);
        }
        t.accumulate(pred, gx);
    });
}

template <typename T>
ad::Var<T> composite_loss(BasicTape<T>& tape, ad::Var<T> pred, const BasicTensor<T>& gt, const LossWeights& w) {
    w.validate();
    require_matching(tape.value(pred), gt, "loss");
    std::vector<ad::Var<T>> terms;
    if (w.alpha != 0.0) {
        terms.push_back(ad::scale(tape, mse_term(tape, pred, gt), w.alpha));
    }
    if (w.beta != 0.0) {
        const auto s = ssim_term(tape, pred, gt, w.c1, w.c2);
        terms.push_back(w.ssim_mode == SsimMode::Literal ? ad::scale(tape, s, w.beta)
                                                         : add_constant(tape, ad::scale(tape, s, -w.beta), w.beta));
    }
    if (w.gamma != 0.0) {
        terms.push_back(ad::scale(tape, tv_term(tape, pred, w.tv_epsilon), w.gamma));
    }
    ad::Var<T> total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        total = ad::add(tape, total, terms[i]);
    }
    return total;
}

double loss(const Image& pred, const Image& gt, const LossWeights& w) {
    require_same_dims(pred, gt, "loss");
    TapeD tape;
    const auto p = tape.leaf(pred.tensor().cast<double>());
    return tape.value(composite_loss(tape, p, gt.tensor().cast<double>(), w)).item();
}

#define QSPECKLE_INSTANTIATE_LOSS(T)                                                                          \
    template ad::Var<T> mse_term<T>(BasicTape<T>&, ad::Var<T>, const BasicTensor<T>&);                        \
    template ad::Var<T> ssim_term<T>(BasicTape<T>&, ad::Var<T>, const BasicTensor<T>&, double, double);       \
    template ad::Var<T> tv_term<T>(BasicTape<T>&, ad::Var<T>, double);                                        \
    template ad::Var<T> composite_loss<T>(BasicTape<T>&, ad::Var<T>, const BasicTensor<T>&, const LossWeights&);

QSPECKLE_INSTANTIATE_LOSS(float)
QSPECKLE_INSTANTIATE_LOSS(double)

#undef QSPECKLE_INSTANTIATE_LOSS

} // namespace qspeckle::denoiser
