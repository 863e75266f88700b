// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Naive reference implementations used only by tests. Everything here is
// straight-line scalar code, deliberately independent of the library's
// compute paths.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mtkd/dctswin.hpp"
#include "mtkd/tensor.hpp"

namespace mtkd::oracles {

// Direct per-token multi-head attention with an explicit allowed-pair
// predicate: forbidden pairs are excluded from the softmax entirely rather
// than masked additively.
inline std::vector<double> brute_force_window_attention(const std::vector<double>& tokens, i64 M, i64 T, i64 C,
                                                        const DctstlParams<double>& p,
                                                        const std::function<bool(i64, i64, i64)>& allowed) {
    int heads = p.heads;
    i64 d = C / heads;
    auto rel = relative_position_index(p.window);
    const auto& qkv_w = p.qkv_w.values();
    const auto& qkv_b = p.qkv_b.values();
    const auto& proj_w = p.proj_w.values();
    const auto& proj_b = p.proj_b.values();
    const auto& bias = p.rel_bias.values();

    auto qkv_of = [&](i64 m, i64 t, i64 col) {
        double acc = qkv_b[static_cast<size_t>(col)];
        for (i64 c = 0; c < C; ++c)
            acc += tokens[static_cast<size_t>((m * T + t) * C + c)] * qkv_w[static_cast<size_t>(c * 3 * C + col)];
        return acc;
    };

    std::vector<double> merged(static_cast<size_t>(M * T * C), 0.0);
    for (i64 m = 0; m < M; ++m)
        for (int h = 0; h < heads; ++h)
            for (i64 i = 0; i < T; ++i) {
                std::vector<double> q(static_cast<size_t>(d));
                for (i64 k = 0; k < d; ++k) q[static_cast<size_t>(k)] = qkv_of(m, i, h * d + k);
                std::vector<double> weights(static_cast<size_t>(T), 0.0);
                double denom = 0.0, mx = -1e300;
                std::vector<double> score(static_cast<size_t>(T), 0.0);
                for (i64 j = 0; j < T; ++j) {
                    if (!allowed(m, i, j)) continue;
                    double s = 0.0;
                    for (i64 k = 0; k < d; ++k) s += q[static_cast<size_t>(k)] * qkv_of(m, j, C + h * d + k);
                    s /= std::sqrt(static_cast<double>(d));
                    s += bias[static_cast<size_t>((*rel)[static_cast<size_t>(i * T + j)] * heads + h)];
                    score[static_cast<size_t>(j)] = s;
                    mx = std::max(mx, s);
                }
                for (i64 j = 0; j < T; ++j) {
                    if (!allowed(m, i, j)) continue;
                    weights[static_cast<size_t>(j)] = std::exp(score[static_cast<size_t>(j)] - mx);
                    denom += weights[static_cast<size_t>(j)];
                }
                for (i64 k = 0; k < d; ++k) {
                    double acc = 0.0;
                    for (i64 j = 0; j < T; ++j) {
                        if (!allowed(m, i, j)) continue;
                        acc += weights[static_cast<size_t>(j)] / denom * qkv_of(m, j, 2 * C + h * d + k);
                    }
                    merged[static_cast<size_t>((m * T + i) * C + h * d + k)] = acc;
                }
            }

    std::vector<double> out(static_cast<size_t>(M * T * C), 0.0);
    for (i64 m = 0; m < M; ++m)
        for (i64 t = 0; t < T; ++t)
            for (i64 co = 0; co < C; ++co) {
                double acc = proj_b[static_cast<size_t>(co)];
                for (i64 ci = 0; ci < C; ++ci)
                    acc += merged[static_cast<size_t>((m * T + t) * C + ci)] * proj_w[static_cast<size_t>(ci * C + co)];
                out[static_cast<size_t>((m * T + t) * C + co)] = acc;
            }
    return out;
}

// Allowed-pair predicate for a cyclically shifted window layout: tokens may
// attend iff neither axis crosses the wrap boundary, i.e. their original
// coordinates fall in the same wrap category per axis.
inline std::function<bool(i64, i64, i64)> shifted_neighborhood(const WindowLayout& layout) {
    i64 ws = layout.window, sh = layout.shift, H = layout.height, W = layout.width;
    i64 wx_n = W / ws;
    i64 nW = layout.windows_per_image();
    return [=](i64 m, i64 i, i64 j) {
        if (sh == 0) return true;
        i64 widx = m % nW;
        i64 wy = widx / wx_n, wx = widx % wx_n;
        auto orig = [&](i64 t) {
            i64 row = (wy * ws + t / ws + sh) % H;
            i64 col = (wx * ws + t % ws + sh) % W;
            return std::pair<bool, bool>{row < sh, col < sh};
        };
        return orig(i) == orig(j);
    };
}

// Elementwise-mean L1 via a plain double loop.
template <class T>
double naive_l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
    double acc = 0.0;
    for (i64 i = 0; i < a.numel(); ++i)
        acc += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
    return acc / static_cast<double>(a.numel());
}

// PSNR from a direct double loop over one plane.
inline double naive_psnr(const std::vector<double>& ref, const std::vector<double>& test) {
    double mse = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        double d = ref[i] - test[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// Single-scale SSIM via explicit 11x11 sliding windows, no separable
// shortcuts. Same constants as the library: K1=0.01, K2=0.03, L=255.
inline double naive_ssim(const std::vector<double>& x, const std::vector<double>& y, i64 h, i64 w) {
    const double c1 = 6.5025, c2 = 58.5225;
    std::vector<double> g(121);
    double gsum = 0.0;
    for (int a = 0; a < 11; ++a)
        for (int b = 0; b < 11; ++b) {
            double dy = a - 5, dx = b - 5;
            g[static_cast<size_t>(a * 11 + b)] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            gsum += g[static_cast<size_t>(a * 11 + b)];
        }
    for (auto& v : g) v /= gsum;

    double acc = 0.0;
    i64 count = 0;
    for (i64 oy = 0; oy + 11 <= h; ++oy)
        for (i64 ox = 0; ox + 11 <= w; ++ox) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int a = 0; a < 11; ++a)
                for (int b = 0; b < 11; ++b) {
                    double wgt = g[static_cast<size_t>(a * 11 + b)];
                    double xv = x[static_cast<size_t>((oy + a) * w + ox + b)];
                    double yv = y[static_cast<size_t>((oy + a) * w + ox + b)];
                    mx += wgt * xv;
                    my += wgt * yv;
                    sxx += wgt * xv * xv;
                    syy += wgt * yv * yv;
                    sxy += wgt * xv * yv;
                }
            double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
            acc += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return acc / static_cast<double>(count);
}

// Direct bicubic downsample reference: per output pixel, recompute the
// stretched kernel weights along each axis independently (no phase
// precomputation, no shared passes).
inline std::vector<double> naive_bicubic_downsample(const std::vector<double>& src, i64 h, i64 w, i64 s) {
    auto weight = [](double x) {
        const double a = -0.5;
        x = std::abs(x);
        if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
        if (x < 2.0) return a * (((x - 5.0) * x + 8.0) * x - 4.0);
        return 0.0;
    };
    auto reflect = [](i64 i, i64 n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };
    i64 oh = h / s, ow = w / s;
    double ss = static_cast<double>(s);
    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (i64 oy = 0; oy < oh; ++oy)
        for (i64 ox = 0; ox < ow; ++ox) {
            double cy = (static_cast<double>(oy) + 0.5) * ss - 0.5;
            double cx = (static_cast<double>(ox) + 0.5) * ss - 0.5;
            double acc = 0.0, wsum = 0.0;
            for (i64 j = static_cast<i64>(std::floor(cy - 2.0 * ss)) + 1; j < cy + 2.0 * ss; ++j)
                for (i64 k = static_cast<i64>(std::floor(cx - 2.0 * ss)) + 1; k < cx + 2.0 * ss; ++k) {
                    double wy = weight((cy - static_cast<double>(j)) / ss);
                    double wx = weight((cx - static_cast<double>(k)) / ss);
                    acc += wy * wx * src[static_cast<size_t>(reflect(j, h) * w + reflect(k, w))];
                    wsum += wy * wx;
                }
            out[static_cast<size_t>(oy * ow + ox)] = acc / wsum;
        }
    return out;
}

} // namespace mtkd::oracles
