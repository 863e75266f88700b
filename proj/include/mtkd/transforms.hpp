// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Orthonormal blockwise 2D DCT-II over W_s x W_s windows and multi-level
// orthonormal Haar DWT. Both are linear, so their backward passes are the
// transpose maps (the respective inverses).

#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "mtkd/tensor.hpp"

namespace mtkd {

// The basis is kept in double and applied with double accumulation so the
// transform identities hold tightly even for float tensors.
template <class T>
struct DctPlan {
    i64 window = 0;
    std::vector<double> basis;   // row-major [window, window], basis[a*W+u]
    std::vector<double> basis_t; // transpose, for the inverse map

    static DctPlan make(i64 window) {
        if (window < 1) throw ShapeError("DctPlan: window must be positive");
        DctPlan p;
        p.window = window;
        p.basis.resize(static_cast<size_t>(window * window));
        p.basis_t.resize(static_cast<size_t>(window * window));
        double n = static_cast<double>(window);
        for (i64 a = 0; a < window; ++a) {
            double c = (a == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (i64 u = 0; u < window; ++u) {
                double v = c * std::cos(M_PI * (2.0 * static_cast<double>(u) + 1.0) * static_cast<double>(a) /
                                        (2.0 * n));
                p.basis[static_cast<size_t>(a * window + u)] = v;
                p.basis_t[static_cast<size_t>(u * window + a)] = v;
            }
        }
        return p;
    }

    // max |B^T B - I|.
    double orthonormality_error() const {
        double worst = 0.0;
        for (i64 i = 0; i < window; ++i)
            for (i64 j = 0; j < window; ++j) {
                double acc = 0.0;
                for (i64 k = 0; k < window; ++k)
                    acc += basis[static_cast<size_t>(k * window + i)] * basis[static_cast<size_t>(k * window + j)];
                worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
            }
        return worst;
    }
};

namespace detail {

// y[n,a,b,c] = sum_{u,v} M[a,u] M[b,v] x[n,u,v,c], M = basis or its transpose.
template <class T>
void dct_separable_apply(const T* x, T* y, i64 n_windows, i64 w, i64 c, const double* m) {
    std::vector<double> tmp(static_cast<size_t>(w * w * c));
    std::vector<double> acc(static_cast<size_t>(c));
    i64 stride = w * w * c;
    for (i64 n = 0; n < n_windows; ++n) {
        const T* xb = x + n * stride;
        // rows: tmp[a,v,ch] = sum_u m[a,u] x[u,v,ch]
        for (i64 a = 0; a < w; ++a)
            for (i64 v = 0; v < w; ++v) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (i64 u = 0; u < w; ++u) {
                    double coef = m[a * w + u];
                    const T* src = xb + (u * w + v) * c;
                    for (i64 ch = 0; ch < c; ++ch) acc[static_cast<size_t>(ch)] += coef * static_cast<double>(src[ch]);
                }
                for (i64 ch = 0; ch < c; ++ch) tmp[static_cast<size_t>((a * w + v) * c + ch)] = acc[static_cast<size_t>(ch)];
            }
        // cols: y[a,b,ch] = sum_v m[b,v] tmp[a,v,ch]
        T* yb = y + n * stride;
        for (i64 a = 0; a < w; ++a)
            for (i64 b = 0; b < w; ++b) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (i64 v = 0; v < w; ++v) {
                    double coef = m[b * w + v];
                    const double* src = tmp.data() + (a * w + v) * c;
                    for (i64 ch = 0; ch < c; ++ch) acc[static_cast<size_t>(ch)] += coef * src[ch];
                }
                for (i64 ch = 0; ch < c; ++ch) yb[(a * w + b) * c + ch] = static_cast<T>(acc[static_cast<size_t>(ch)]);
            }
    }
}

template <class T>
void check_windows(const char* op, const Tensor<T>& windows, const DctPlan<T>& plan) {
    if (windows.ndim() != 4)
        throw ShapeError(std::string(op) + ": expected [n,W,W,C] windows, got " + shape_str(windows.shape()));
    if (windows.dim(1) != plan.window || windows.dim(2) != plan.window)
        throw ShapeError(std::string(op) + ": window axes " + std::to_string(windows.dim(1)) + "x" +
                         std::to_string(windows.dim(2)) + " != plan window " + std::to_string(plan.window));
}

} // namespace detail

template <class T>
Tensor<T> dct2d(const Tensor<T>& windows, const DctPlan<T>& plan) {
    detail::check_windows("dct2d", windows, plan);
    i64 n = windows.dim(0), w = plan.window, c = windows.dim(3);
    Tensor<T> out(windows.shape());
    detail::dct_separable_apply(windows.data(), out.data(), n, w, c, plan.basis.data());
    auto basis_t = std::make_shared<std::vector<double>>(plan.basis_t);
    record_op<T>("dct2d", {&windows}, out, [windows = windows, out, basis_t, n, w, c]() mutable {
        std::vector<T> gx(static_cast<size_t>(out.numel()));
        detail::dct_separable_apply(out.grad().data(), gx.data(), n, w, c, basis_t->data());
        auto& g = windows.grad();
        for (size_t i = 0; i < gx.size(); ++i) g[i] += gx[i];
    });
    return out;
}

template <class T>
Tensor<T> idct2d(const Tensor<T>& coeffs, const DctPlan<T>& plan) {
    detail::check_windows("idct2d", coeffs, plan);
    i64 n = coeffs.dim(0), w = plan.window, c = coeffs.dim(3);
    Tensor<T> out(coeffs.shape());
    detail::dct_separable_apply(coeffs.data(), out.data(), n, w, c, plan.basis_t.data());
    auto basis = std::make_shared<std::vector<double>>(plan.basis);
    record_op<T>("idct2d", {&coeffs}, out, [coeffs = coeffs, out, basis, n, w, c]() mutable {
        std::vector<T> gx(static_cast<size_t>(out.numel()));
        detail::dct_separable_apply(out.grad().data(), gx.data(), n, w, c, basis->data());
        auto& g = coeffs.grad();
        for (size_t i = 0; i < gx.size(); ++i) g[i] += gx[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// Haar DWT

enum class Band { LL, LH, HL, HH };

inline const char* band_name(Band b) {
    switch (b) {
        case Band::LL: return "LL";
        case Band::LH: return "LH";
        case Band::HL: return "HL";
        case Band::HH: return "HH";
    }
    return "?";
}

namespace detail {
// Signs of (a, b, c, d) = (x[2i,2j], x[2i,2j+1], x[2i+1,2j], x[2i+1,2j+1])
// for each band; the shared factor is 1/2. HL is high along the horizontal
// axis, LH along the vertical one.
inline std::array<int, 4> band_signs(Band b) {
    switch (b) {
        case Band::LL: return {+1, +1, +1, +1};
        case Band::HL: return {+1, -1, +1, -1};
        case Band::LH: return {+1, +1, -1, -1};
        case Band::HH: return {+1, -1, -1, +1};
    }
    return {0, 0, 0, 0};
}
} // namespace detail

// One analysis level, one band: [N,H,W,C] -> [N,H/2,W/2,C].
template <class T>
Tensor<T> haar_band(const Tensor<T>& x, Band band) {
    if (x.ndim() != 4) throw ShapeError("haar_band: input must be NHWC");
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw ShapeError("haar_band: spatial axes " + std::to_string(H) + "x" + std::to_string(W) +
                         " must be even");
    i64 OH = H / 2, OW = W / 2;
    auto sg = detail::band_signs(band);
    const T half = T(0.5);
    Tensor<T> out(Shape{N, OH, OW, C});
    const T* px = x.data();
    T* po = out.data();
    for (i64 n = 0; n < N; ++n)
        for (i64 i = 0; i < OH; ++i)
            for (i64 j = 0; j < OW; ++j)
                for (i64 c = 0; c < C; ++c) {
                    const T* r0 = px + ((n * H + 2 * i) * W + 2 * j) * C + c;
                    const T* r1 = px + ((n * H + 2 * i + 1) * W + 2 * j) * C + c;
                    po[((n * OH + i) * OW + j) * C + c] =
                        half * (T(sg[0]) * r0[0] + T(sg[1]) * r0[C] + T(sg[2]) * r1[0] + T(sg[3]) * r1[C]);
                }
    record_op<T>("haar_band", {&x}, out, [x = x, out, sg, N, H, W, C, OH, OW, half]() mutable {
        const T* pg = out.grad().data();
        T* gx = x.grad().data();
        for (i64 n = 0; n < N; ++n)
            for (i64 i = 0; i < OH; ++i)
                for (i64 j = 0; j < OW; ++j)
                    for (i64 c = 0; c < C; ++c) {
                        T g = half * pg[((n * OH + i) * OW + j) * C + c];
                        T* r0 = gx + ((n * H + 2 * i) * W + 2 * j) * C + c;
                        T* r1 = gx + ((n * H + 2 * i + 1) * W + 2 * j) * C + c;
                        r0[0] += T(sg[0]) * g;
                        r0[C] += T(sg[1]) * g;
                        r1[0] += T(sg[2]) * g;
                        r1[C] += T(sg[3]) * g;
                    }
    });
    return out;
}

// One synthesis level from the four bands of one level.
template <class T>
Tensor<T> haar_synthesis(const Tensor<T>& ll, const Tensor<T>& lh, const Tensor<T>& hl, const Tensor<T>& hh) {
    for (const Tensor<T>* b : {&lh, &hl, &hh})
        if (!b->valid() || b->shape() != ll.shape())
            throw ShapeError("haar_synthesis: missing or mismatched band (expected " + shape_str(ll.shape()) + ")");
    i64 N = ll.dim(0), OH = ll.dim(1), OW = ll.dim(2), C = ll.dim(3);
    i64 H = 2 * OH, W = 2 * OW;
    Tensor<T> out(Shape{N, H, W, C});
    const T half = T(0.5);
    const T* pll = ll.data();
    const T* plh = lh.data();
    const T* phl = hl.data();
    const T* phh = hh.data();
    T* po = out.data();
    for (i64 n = 0; n < N; ++n)
        for (i64 i = 0; i < OH; ++i)
            for (i64 j = 0; j < OW; ++j)
                for (i64 c = 0; c < C; ++c) {
                    i64 k = ((n * OH + i) * OW + j) * C + c;
                    T a = half * (pll[k] + phl[k] + plh[k] + phh[k]);
                    T b = half * (pll[k] - phl[k] + plh[k] - phh[k]);
                    T cc = half * (pll[k] + phl[k] - plh[k] - phh[k]);
                    T d = half * (pll[k] - phl[k] - plh[k] + phh[k]);
                    T* r0 = po + ((n * H + 2 * i) * W + 2 * j) * C + c;
                    T* r1 = po + ((n * H + 2 * i + 1) * W + 2 * j) * C + c;
                    r0[0] = a;
                    r0[C] = b;
                    r1[0] = cc;
                    r1[C] = d;
                }
    record_op<T>("haar_synthesis", {&ll, &lh, &hl, &hh}, out, [ll = ll, lh = lh, hl = hl, hh = hh, out, N, OH, OW, C, H, W, half]() mutable {
        const T* pg = out.grad().data();
        for (i64 n = 0; n < N; ++n)
            for (i64 i = 0; i < OH; ++i)
                for (i64 j = 0; j < OW; ++j)
                    for (i64 c = 0; c < C; ++c) {
                        i64 k = ((n * OH + i) * OW + j) * C + c;
                        const T* r0 = pg + ((n * H + 2 * i) * W + 2 * j) * C + c;
                        const T* r1 = pg + ((n * H + 2 * i + 1) * W + 2 * j) * C + c;
                        T ga = r0[0], gb = r0[C], gc = r1[0], gd = r1[C];
                        if (ll.requires_grad()) ll.grad()[static_cast<size_t>(k)] += half * (ga + gb + gc + gd);
                        if (hl.requires_grad()) hl.grad()[static_cast<size_t>(k)] += half * (ga - gb + gc - gd);
                        if (lh.requires_grad()) lh.grad()[static_cast<size_t>(k)] += half * (ga + gb - gc - gd);
                        if (hh.requires_grad()) hh.grad()[static_cast<size_t>(k)] += half * (ga - gb - gc + gd);
                    }
    });
    return out;
}

// The 3K+1 subbands of a K-level decomposition: detail bands at every level
// 1..K plus the LL band at level K.
template <class T>
struct SubbandPyramid {
    int levels = 0;
    Tensor<T> ll;
    struct Detail {
        Tensor<T> lh, hl, hh;
    };
    std::vector<Detail> details; // details[k-1] holds level k

    int band_count() const { return 3 * levels + 1; }

    // Bands in a fixed order: (LH,HL,HH) for k=1..K, then LL.
    std::vector<std::pair<std::string, Tensor<T>>> ordered_bands() const {
        std::vector<std::pair<std::string, Tensor<T>>> out;
        for (int k = 1; k <= levels; ++k) {
            out.emplace_back("LH" + std::to_string(k), details[static_cast<size_t>(k - 1)].lh);
            out.emplace_back("HL" + std::to_string(k), details[static_cast<size_t>(k - 1)].hl);
            out.emplace_back("HH" + std::to_string(k), details[static_cast<size_t>(k - 1)].hh);
        }
        out.emplace_back("LL" + std::to_string(levels), ll);
        return out;
    }
};

template <class T>
SubbandPyramid<T> dwt2d(const Tensor<T>& image, int levels) {
    if (levels < 1) throw ShapeError("dwt2d: level must be >= 1");
    if (image.ndim() != 4) throw ShapeError("dwt2d: input must be NHWC");
    i64 H = image.dim(1), W = image.dim(2);
    i64 div = i64(1) << levels;
    if (H % div != 0 || W % div != 0)
        throw ShapeError("dwt2d: spatial axes " + std::to_string(H) + "x" + std::to_string(W) +
                         " must be divisible by 2^" + std::to_string(levels) + " = " + std::to_string(div));
    SubbandPyramid<T> p;
    p.levels = levels;
    Tensor<T> cur = image;
    for (int k = 1; k <= levels; ++k) {
        typename SubbandPyramid<T>::Detail d;
        d.lh = haar_band(cur, Band::LH);
        d.hl = haar_band(cur, Band::HL);
        d.hh = haar_band(cur, Band::HH);
        p.details.push_back(d);
        cur = haar_band(cur, Band::LL);
    }
    p.ll = cur;
    return p;
}

template <class T>
Tensor<T> idwt2d(const SubbandPyramid<T>& pyramid) {
    if (pyramid.levels < 1 || !pyramid.ll.valid() ||
        pyramid.details.size() != static_cast<size_t>(pyramid.levels))
        throw ShapeError("idwt2d: malformed pyramid");
    Tensor<T> cur = pyramid.ll;
    for (int k = pyramid.levels; k >= 1; --k) {
        const auto& d = pyramid.details[static_cast<size_t>(k - 1)];
        cur = haar_synthesis(cur, d.lh, d.hl, d.hh);
    }
    return cur;
}

} // namespace mtkd
