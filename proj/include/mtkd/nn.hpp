// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Structured NHWC kernels: convolution, pixel shuffle/unshuffle, layer norm,
// reflective padding and the small broadcast helpers the networks need.

#pragma once

#include <memory>

#include "mtkd/tensor.hpp"

namespace mtkd {

enum class Padding { Same, Valid };

namespace detail {

// Gathers conv patches into a [N*OH*OW, kh*kw*Cin] row-major matrix.
template <class T>
void im2col(const T* x, i64 N, i64 H, i64 W, i64 C, i64 kh, i64 kw, i64 ph, i64 pw, i64 OH, i64 OW, T* cols) {
    i64 patch = kh * kw * C;
    for (i64 n = 0; n < N; ++n) {
        for (i64 oh = 0; oh < OH; ++oh) {
            for (i64 ow = 0; ow < OW; ++ow) {
                T* dst = cols + ((n * OH + oh) * OW + ow) * patch;
                for (i64 ky = 0; ky < kh; ++ky) {
                    i64 ih = oh + ky - ph;
                    for (i64 kx = 0; kx < kw; ++kx) {
                        i64 iw = ow + kx - pw;
                        T* d = dst + (ky * kw + kx) * C;
                        if (ih < 0 || ih >= H || iw < 0 || iw >= W) {
                            for (i64 c = 0; c < C; ++c) d[c] = T(0);
                        } else {
                            const T* s = x + ((n * H + ih) * W + iw) * C;
                            for (i64 c = 0; c < C; ++c) d[c] = s[c];
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_accum(const T* cols, i64 N, i64 H, i64 W, i64 C, i64 kh, i64 kw, i64 ph, i64 pw, i64 OH, i64 OW, T* gx) {
    i64 patch = kh * kw * C;
    for (i64 n = 0; n < N; ++n) {
        for (i64 oh = 0; oh < OH; ++oh) {
            for (i64 ow = 0; ow < OW; ++ow) {
                const T* src = cols + ((n * OH + oh) * OW + ow) * patch;
                for (i64 ky = 0; ky < kh; ++ky) {
                    i64 ih = oh + ky - ph;
                    if (ih < 0 || ih >= H) continue;
                    for (i64 kx = 0; kx < kw; ++kx) {
                        i64 iw = ow + kx - pw;
                        if (iw < 0 || iw >= W) continue;
                        const T* s = src + (ky * kw + kx) * C;
                        T* d = gx + ((n * H + ih) * W + iw) * C;
                        for (i64 c = 0; c < C; ++c) d[c] += s[c];
                    }
                }
            }
        }
    }
}

} // namespace detail

// 2D convolution, stride 1. input NHWC, weight [kh,kw,Cin,Cout], bias [Cout].
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, Padding padding) {
    if (input.ndim() != 4) throw ShapeError("conv2d: input must be NHWC, got " + shape_str(input.shape()));
    if (weight.ndim() != 4) throw ShapeError("conv2d: weight must be [kh,kw,Cin,Cout], got " + shape_str(weight.shape()));
    i64 N = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
    i64 kh = weight.dim(0), kw = weight.dim(1), Cin = weight.dim(2), Cout = weight.dim(3);
    if (C != Cin)
        throw ShapeError("conv2d: input channel axis (" + std::to_string(C) + ") != weight Cin axis (" +
                         std::to_string(Cin) + ")");
    if (bias.valid() && (bias.ndim() != 1 || bias.dim(0) != Cout))
        throw ShapeError("conv2d: bias axis " + shape_str(bias.shape()) + " != [Cout=" + std::to_string(Cout) + "]");
    i64 ph = 0, pw = 0, OH, OW;
    if (padding == Padding::Same) {
        if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d: same padding requires odd kernel dims");
        ph = (kh - 1) / 2;
        pw = (kw - 1) / 2;
        OH = H;
        OW = W;
    } else {
        OH = H - kh + 1;
        OW = W - kw + 1;
        if (OH <= 0 || OW <= 0)
            throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " larger than input " + std::to_string(H) + "x" + std::to_string(W));
    }

    i64 patch = kh * kw * C;
    i64 rows = N * OH * OW;
    std::vector<T> cols(static_cast<size_t>(rows * patch));
    detail::im2col(input.data(), N, H, W, C, kh, kw, ph, pw, OH, OW, cols.data());

    Tensor<T> out(Shape{N, OH, OW, Cout});
    {
        detail::CMatMap<T> mc(cols.data(), rows, patch);
        detail::CMatMap<T> mw(weight.data(), patch, Cout);
        detail::MatMap<T> mo(out.data(), rows, Cout);
        mo.noalias() = mc * mw;
    }
    if (bias.valid()) {
        T* po = out.data();
        const T* pb = bias.data();
        for (i64 r = 0; r < rows; ++r)
            for (i64 c = 0; c < Cout; ++c) po[r * Cout + c] += pb[c];
    }

    record_op<T>("conv2d", {&input, &weight, &bias}, out,
                 [input = input, weight = weight, bias = bias, out, N, H, W, C, kh, kw, ph, pw, OH, OW, Cout, patch, rows]() mutable {
                     const T* pg = out.grad().data();
                     detail::CMatMap<T> mg(pg, rows, Cout);
                     // Patches are rebuilt rather than kept alive on the tape.
                     std::vector<T> cols2(static_cast<size_t>(rows * patch));
                     detail::im2col(input.data(), N, H, W, C, kh, kw, ph, pw, OH, OW, cols2.data());
                     if (weight.requires_grad()) {
                         detail::CMatMap<T> mc(cols2.data(), rows, patch);
                         detail::MatMap<T> mgw(weight.grad().data(), patch, Cout);
                         mgw.noalias() += mc.transpose() * mg;
                     }
                     if (bias.valid() && bias.requires_grad()) {
                         T* gb = bias.grad().data();
                         for (i64 r = 0; r < rows; ++r)
                             for (i64 c = 0; c < Cout; ++c) gb[c] += pg[r * Cout + c];
                     }
                     if (input.requires_grad()) {
                         std::vector<T> gcols(static_cast<size_t>(rows * patch));
                         detail::CMatMap<T> mw(weight.data(), patch, Cout);
                         detail::MatMap<T> mgc(gcols.data(), rows, patch);
                         mgc.noalias() = mg * mw.transpose();
                         detail::col2im_accum(gcols.data(), N, H, W, C, kh, kw, ph, pw, OH, OW, input.grad().data());
                     }
                 });
    return out;
}

// Space-to-depth by factor s: [N,H,W,C] -> [N,H/s,W/s,C*s*s].
// Output channel index is c*s*s + dy*s + dx (row-major sub-pixel order).
template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, i64 s) {
    if (x.ndim() != 4) throw ShapeError("pixel_unshuffle: input must be NHWC");
    if (s < 1) throw ShapeError("pixel_unshuffle: factor must be positive");
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (H % s != 0 || W % s != 0)
        throw ShapeError("pixel_unshuffle: spatial axes " + std::to_string(H) + "x" + std::to_string(W) +
                         " not divisible by " + std::to_string(s));
    i64 OH = H / s, OW = W / s, OC = C * s * s;
    Tensor<T> out(Shape{N, OH, OW, OC});
    const T* px = x.data();
    T* po = out.data();
    for (i64 n = 0; n < N; ++n)
        for (i64 oh = 0; oh < OH; ++oh)
            for (i64 ow = 0; ow < OW; ++ow)
                for (i64 c = 0; c < C; ++c)
                    for (i64 dy = 0; dy < s; ++dy)
                        for (i64 dx = 0; dx < s; ++dx)
                            po[((n * OH + oh) * OW + ow) * OC + (c * s + dy) * s + dx] =
                                px[((n * H + oh * s + dy) * W + ow * s + dx) * C + c];
    record_op<T>("pixel_unshuffle", {&x}, out, [x = x, out, N, H, W, C, s, OH, OW, OC]() mutable {
        const T* pg = out.grad().data();
        T* gx = x.grad().data();
        for (i64 n = 0; n < N; ++n)
            for (i64 oh = 0; oh < OH; ++oh)
                for (i64 ow = 0; ow < OW; ++ow)
                    for (i64 c = 0; c < C; ++c)
                        for (i64 dy = 0; dy < s; ++dy)
                            for (i64 dx = 0; dx < s; ++dx)
                                gx[((n * H + oh * s + dy) * W + ow * s + dx) * C + c] +=
                                    pg[((n * OH + oh) * OW + ow) * OC + (c * s + dy) * s + dx];
    });
    return out;
}

// Depth-to-space by factor s: [N,H,W,C] -> [N,H*s,W*s,C/(s*s)]. Exact inverse
// of pixel_unshuffle.
template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, i64 s) {
    if (x.ndim() != 4) throw ShapeError("pixel_shuffle: input must be NHWC");
    if (s < 1) throw ShapeError("pixel_shuffle: factor must be positive");
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (C % (s * s) != 0)
        throw ShapeError("pixel_shuffle: channel axis " + std::to_string(C) + " not divisible by " +
                         std::to_string(s * s));
    i64 OC = C / (s * s), OH = H * s, OW = W * s;
    Tensor<T> out(Shape{N, OH, OW, OC});
    const T* px = x.data();
    T* po = out.data();
    for (i64 n = 0; n < N; ++n)
        for (i64 h = 0; h < H; ++h)
            for (i64 w = 0; w < W; ++w)
                for (i64 c = 0; c < OC; ++c)
                    for (i64 dy = 0; dy < s; ++dy)
                        for (i64 dx = 0; dx < s; ++dx)
                            po[((n * OH + h * s + dy) * OW + w * s + dx) * OC + c] =
                                px[((n * H + h) * W + w) * C + (c * s + dy) * s + dx];
    record_op<T>("pixel_shuffle", {&x}, out, [x = x, out, N, H, W, C, s, OC, OH, OW]() mutable {
        const T* pg = out.grad().data();
        T* gx = x.grad().data();
        for (i64 n = 0; n < N; ++n)
            for (i64 h = 0; h < H; ++h)
                for (i64 w = 0; w < W; ++w)
                    for (i64 c = 0; c < OC; ++c)
                        for (i64 dy = 0; dy < s; ++dy)
                            for (i64 dx = 0; dx < s; ++dx)
                                gx[((n * H + h) * W + w) * C + (c * s + dy) * s + dx] +=
                                    pg[((n * OH + h * s + dy) * OW + w * s + dx) * OC + c];
    });
    return out;
}

// Layer norm over the last axis with learned affine parameters.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps = 1e-5) {
    if (eps <= 0.0) throw NumericError("layer_norm: eps must be positive");
    i64 D = x.dim(-1);
    if (gamma.ndim() != 1 || gamma.dim(0) != D || beta.ndim() != 1 || beta.dim(0) != D)
        throw ShapeError("layer_norm: gamma/beta must be [" + std::to_string(D) + "], got " +
                         shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));
    i64 rows = x.numel() / D;
    Tensor<T> out(x.shape());
    auto mean = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
    const T* px = x.data();
    const T* pg = gamma.data();
    const T* pb = beta.data();
    T* po = out.data();
    T te = static_cast<T>(eps);
    for (i64 r = 0; r < rows; ++r) {
        const T* row = px + r * D;
        T mu = T(0);
        for (i64 j = 0; j < D; ++j) mu += row[j];
        mu /= static_cast<T>(D);
        T var = T(0);
        for (i64 j = 0; j < D; ++j) {
            T d = row[j] - mu;
            var += d * d;
        }
        var /= static_cast<T>(D);
        T inv = T(1) / std::sqrt(var + te);
        (*mean)[static_cast<size_t>(r)] = mu;
        (*inv_std)[static_cast<size_t>(r)] = inv;
        T* orow = po + r * D;
        for (i64 j = 0; j < D; ++j) orow[j] = pg[j] * ((row[j] - mu) * inv) + pb[j];
    }
    record_op<T>("layer_norm", {&x, &gamma, &beta}, out, [x = x, gamma = gamma, beta = beta, out, mean, inv_std, D, rows]() mutable {
        const T* pgo = out.grad().data();
        const T* px2 = x.data();
        const T* pgm = gamma.data();
        for (i64 r = 0; r < rows; ++r) {
            const T* go = pgo + r * D;
            const T* row = px2 + r * D;
            T mu = (*mean)[static_cast<size_t>(r)];
            T inv = (*inv_std)[static_cast<size_t>(r)];
            if (gamma.requires_grad()) {
                auto& gg = gamma.grad();
                for (i64 j = 0; j < D; ++j) gg[static_cast<size_t>(j)] += go[j] * (row[j] - mu) * inv;
            }
            if (beta.requires_grad()) {
                auto& gb = beta.grad();
                for (i64 j = 0; j < D; ++j) gb[static_cast<size_t>(j)] += go[j];
            }
            if (x.requires_grad()) {
                T sum_g = T(0), sum_gx = T(0);
                for (i64 j = 0; j < D; ++j) {
                    T g = go[j] * pgm[j];
                    sum_g += g;
                    sum_gx += g * (row[j] - mu);
                }
                T* gx = x.grad().data() + r * D;
                T invD = T(1) / static_cast<T>(D);
                for (i64 j = 0; j < D; ++j) {
                    T g = go[j] * pgm[j];
                    T xc = row[j] - mu;
                    gx[j] += inv * (g - sum_g * invD - xc * inv * inv * sum_gx * invD);
                }
            }
        }
    });
    return out;
}

// Symmetric (edge-inclusive mirror) padding of the spatial axes.
template <class T>
Tensor<T> pad_symmetric_hw(const Tensor<T>& x, i64 top, i64 bottom, i64 left, i64 right) {
    if (x.ndim() != 4) throw ShapeError("pad_symmetric_hw: input must be NHWC");
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (top > H || bottom > H || left > W || right > W)
        throw ShapeError("pad_symmetric_hw: pad exceeds image size");
    i64 OH = H + top + bottom, OW = W + left + right;
    auto reflect = [](i64 i, i64 n) {
        if (i < 0) return -i - 1;
        if (i >= n) return 2 * n - 1 - i;
        return i;
    };
    auto map = std::make_shared<std::vector<i64>>(static_cast<size_t>(N * OH * OW * C));
    i64 k = 0;
    for (i64 n = 0; n < N; ++n)
        for (i64 oh = 0; oh < OH; ++oh) {
            i64 ih = reflect(oh - top, H);
            for (i64 ow = 0; ow < OW; ++ow) {
                i64 iw = reflect(ow - left, W);
                i64 base = ((n * H + ih) * W + iw) * C;
                for (i64 c = 0; c < C; ++c) (*map)[static_cast<size_t>(k++)] = base + c;
            }
        }
    return gather_linear(x, map, Shape{N, OH, OW, C}, "pad_symmetric");
}

template <class T>
Tensor<T> crop_hw(const Tensor<T>& x, i64 top, i64 left, i64 h, i64 w) {
    if (x.ndim() != 4) throw ShapeError("crop_hw: input must be NHWC");
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    if (top < 0 || left < 0 || top + h > H || left + w > W) throw ShapeError("crop_hw: window out of range");
    auto map = std::make_shared<std::vector<i64>>(static_cast<size_t>(N * h * w * C));
    i64 k = 0;
    for (i64 n = 0; n < N; ++n)
        for (i64 oh = 0; oh < h; ++oh)
            for (i64 ow = 0; ow < w; ++ow) {
                i64 base = ((n * H + top + oh) * W + left + ow) * C;
                for (i64 c = 0; c < C; ++c) (*map)[static_cast<size_t>(k++)] = base + c;
            }
    return gather_linear(x, map, Shape{N, h, w, C}, "crop");
}

// Mean over the spatial axes: [N,H,W,C] -> [N,1,1,C].
template <class T>
Tensor<T> spatial_mean(const Tensor<T>& x) {
    if (x.ndim() != 4) throw ShapeError("spatial_mean: input must be NHWC");
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    Tensor<T> out(Shape{N, 1, 1, C});
    const T* px = x.data();
    T* po = out.data();
    T invHW = T(1) / static_cast<T>(H * W);
    for (i64 n = 0; n < N; ++n) {
        for (i64 c = 0; c < C; ++c) po[n * C + c] = T(0);
        for (i64 p = 0; p < H * W; ++p)
            for (i64 c = 0; c < C; ++c) po[n * C + c] += px[(n * H * W + p) * C + c];
        for (i64 c = 0; c < C; ++c) po[n * C + c] *= invHW;
    }
    record_op<T>("spatial_mean", {&x}, out, [x = x, out, N, H, W, C, invHW]() mutable {
        const T* pg = out.grad().data();
        T* gx = x.grad().data();
        for (i64 n = 0; n < N; ++n)
            for (i64 p = 0; p < H * W; ++p)
                for (i64 c = 0; c < C; ++c) gx[(n * H * W + p) * C + c] += pg[n * C + c] * invHW;
    });
    return out;
}

// x * s with s of shape [N,1,1,C] broadcast across the spatial axes.
template <class T>
Tensor<T> mul_channel_gate(const Tensor<T>& x, const Tensor<T>& s) {
    if (x.ndim() != 4 || s.ndim() != 4 || s.dim(1) != 1 || s.dim(2) != 1 || s.dim(0) != x.dim(0) ||
        s.dim(3) != x.dim(3))
        throw ShapeError("mul_channel_gate: gate " + shape_str(s.shape()) + " incompatible with " +
                         shape_str(x.shape()));
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    Tensor<T> out(x.shape());
    const T* px = x.data();
    const T* ps = s.data();
    T* po = out.data();
    for (i64 n = 0; n < N; ++n)
        for (i64 p = 0; p < H * W; ++p)
            for (i64 c = 0; c < C; ++c) po[(n * H * W + p) * C + c] = px[(n * H * W + p) * C + c] * ps[n * C + c];
    record_op<T>("mul_channel_gate", {&x, &s}, out, [x = x, s = s, out, N, H, W, C]() mutable {
        const T* pg = out.grad().data();
        const T* px2 = x.data();
        const T* ps2 = s.data();
        if (x.requires_grad()) {
            T* gx = x.grad().data();
            for (i64 n = 0; n < N; ++n)
                for (i64 p = 0; p < H * W; ++p)
                    for (i64 c = 0; c < C; ++c)
                        gx[(n * H * W + p) * C + c] += pg[(n * H * W + p) * C + c] * ps2[n * C + c];
        }
        if (s.requires_grad()) {
            T* gs = s.grad().data();
            for (i64 n = 0; n < N; ++n)
                for (i64 p = 0; p < H * W; ++p)
                    for (i64 c = 0; c < C; ++c)
                        gs[n * C + c] += pg[(n * H * W + p) * C + c] * px2[(n * H * W + p) * C + c];
        }
    });
    return out;
}

} // namespace mtkd
