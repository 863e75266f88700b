// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checking at 64-bit precision. The
// numeric route never touches the tape, so it stays independent of the
// analytic backward path it verifies.

#pragma once

#include <functional>
#include <vector>

#include "mtkd/tensor.hpp"

namespace mtkd {

// Loss function over a set of differentiable inputs; must return a scalar.
using GradCheckFn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

// Returns max over all input elements of |analytic - numeric| scaled by
// max(1, |analytic|, |numeric|).
inline double gradcheck_max_rel_err(const GradCheckFn& f, std::vector<Tensor<double>> inputs, double h = 1e-5) {
    for (auto& t : inputs) t.set_requires_grad(true);

    std::vector<std::vector<double>> analytic;
    {
        TapeScope<double> scope;
        Tensor<double> loss = f(inputs);
        backward(loss);
        for (auto& t : inputs) analytic.push_back(t.grad());
    }

    double worst = 0.0;
    {
        NoGradScope<double> ng;
        for (size_t k = 0; k < inputs.size(); ++k) {
            auto& vals = inputs[k].values();
            for (size_t i = 0; i < vals.size(); ++i) {
                double orig = vals[i];
                vals[i] = orig + h;
                double up = f(inputs).item();
                vals[i] = orig - h;
                double dn = f(inputs).item();
                vals[i] = orig;
                double numeric = (up - dn) / (2.0 * h);
                double a = analytic[k][i];
                double scale = std::max({1.0, std::abs(a), std::abs(numeric)});
                worst = std::max(worst, std::abs(a - numeric) / scale);
            }
        }
    }
    return worst;
}

// Scalar readout used to reduce a non-scalar op output for checking: the
// weighted sum against a fixed (non-differentiated) coefficient tensor.
inline Tensor<double> weighted_sum(const Tensor<double>& x, const Tensor<double>& weights) {
    return sum_all(mul(x, weights));
}

// Normal draw conditioned to keep every last-axis row's variance well above
// the layer-norm eps. Near-constant rows put the normalization into its
// eps-dominated regime, where the curvature makes central differences at
// h=1e-5 inaccurate even though the analytic gradient is exact; this is the
// layer-norm analogue of sampling off the L1 kink.
inline Tensor<double> randn_row_spread(Shape shape, Rng& rng, double min_var = 0.05) {
    Tensor<double> t = Tensor<double>::randn(shape, rng);
    i64 d = shape.back();
    if (d < 2) return t;
    i64 rows = t.numel() / d;
    for (i64 r = 0; r < rows; ++r) {
        double* p = t.data() + r * d;
        for (;;) {
            double mu = 0.0;
            for (i64 j = 0; j < d; ++j) mu += p[j];
            mu /= static_cast<double>(d);
            double var = 0.0;
            for (i64 j = 0; j < d; ++j) var += (p[j] - mu) * (p[j] - mu);
            var /= static_cast<double>(d);
            if (var >= min_var) break;
            p[0] += 0.5;
        }
    }
    return t;
}

} // namespace mtkd
