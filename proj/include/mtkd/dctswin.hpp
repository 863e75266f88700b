// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shifted-window attention over per-window DCT coefficients: window
// partition/reverse with cyclic shift, the cross-region attention mask,
// multi-head self-attention with relative position bias, and the transformer
// layer that wraps them (LN -> windows -> DCT -> attention -> IDCT ->
// reverse -> residual, then an optional MLP sublayer).

#pragma once

#include <memory>
#include <vector>

#include "mtkd/nn.hpp"
#include "mtkd/tensor.hpp"
#include "mtkd/transforms.hpp"

namespace mtkd {

inline constexpr double kMaskNegative = -1e9;

struct WindowLayout {
    i64 window = 0;
    i64 shift = 0; // 0 or window/2
    i64 height = 0;
    i64 width = 0;

    WindowLayout(i64 window_size, i64 shift_offset, i64 h, i64 w)
        : window(window_size), shift(shift_offset), height(h), width(w) {
        if (window < 1) throw ShapeError("WindowLayout: window must be positive");
        if (h % window != 0 || w % window != 0)
            throw ShapeError("WindowLayout: spatial axes " + std::to_string(h) + "x" + std::to_string(w) +
                             " not divisible by window " + std::to_string(window));
        if (shift != 0 && shift != window / 2)
            throw ShapeError("WindowLayout: shift must be 0 or window/2, got " + std::to_string(shift));
    }

    i64 windows_per_image() const { return (height / window) * (width / window); }
    i64 tokens() const { return window * window; }
};

// [N,H,W,C] -> [N*nW, W_s, W_s, C]; a cyclic shift by (-shift,-shift) is
// applied before partitioning.
template <class T>
Tensor<T> window_partition(const Tensor<T>& features, const WindowLayout& layout) {
    if (features.ndim() != 4) throw ShapeError("window_partition: input must be NHWC");
    i64 N = features.dim(0), H = features.dim(1), W = features.dim(2), C = features.dim(3);
    if (H != layout.height || W != layout.width)
        throw ShapeError("window_partition: input " + std::to_string(H) + "x" + std::to_string(W) +
                         " does not match layout " + std::to_string(layout.height) + "x" +
                         std::to_string(layout.width));
    i64 ws = layout.window, sh = layout.shift;
    i64 wy_n = H / ws, wx_n = W / ws, nW = wy_n * wx_n;
    auto map = std::make_shared<std::vector<i64>>(static_cast<size_t>(N * H * W * C));
    i64 k = 0;
    for (i64 n = 0; n < N; ++n)
        for (i64 wy = 0; wy < wy_n; ++wy)
            for (i64 wx = 0; wx < wx_n; ++wx)
                for (i64 i = 0; i < ws; ++i) {
                    i64 ih = (wy * ws + i + sh) % H;
                    for (i64 j = 0; j < ws; ++j) {
                        i64 iw = (wx * ws + j + sh) % W;
                        i64 base = ((n * H + ih) * W + iw) * C;
                        for (i64 c = 0; c < C; ++c) (*map)[static_cast<size_t>(k++)] = base + c;
                    }
                }
    return gather_linear(features, map, Shape{N * nW, ws, ws, C}, "window_partition");
}

// Exact inverse of window_partition, including the un-shift.
template <class T>
Tensor<T> window_reverse(const Tensor<T>& windows, const WindowLayout& layout) {
    if (windows.ndim() != 4) throw ShapeError("window_reverse: input must be [M,W_s,W_s,C]");
    i64 ws = layout.window, sh = layout.shift;
    i64 H = layout.height, W = layout.width;
    i64 nW = layout.windows_per_image();
    i64 M = windows.dim(0), C = windows.dim(3);
    if (windows.dim(1) != ws || windows.dim(2) != ws)
        throw ShapeError("window_reverse: window axes " + shape_str(windows.shape()) + " != layout window " +
                         std::to_string(ws));
    if (M % nW != 0)
        throw ShapeError("window_reverse: window count " + std::to_string(M) + " not a multiple of " +
                         std::to_string(nW) + " windows per image");
    i64 N = M / nW;
    i64 wx_n = W / ws;
    auto map = std::make_shared<std::vector<i64>>(static_cast<size_t>(N * H * W * C));
    i64 k = 0;
    for (i64 n = 0; n < N; ++n)
        for (i64 h = 0; h < H; ++h) {
            i64 ph = (h - sh % H + H) % H;
            i64 wy = ph / ws, i = ph % ws;
            for (i64 w = 0; w < W; ++w) {
                i64 pw = (w - sh % W + W) % W;
                i64 wx = pw / ws, j = pw % ws;
                i64 base = (((n * nW + wy * wx_n + wx) * ws + i) * ws + j) * C;
                for (i64 c = 0; c < C; ++c) (*map)[static_cast<size_t>(k++)] = base + c;
            }
        }
    return gather_linear(windows, map, Shape{N, H, W, C}, "window_reverse");
}

// Additive attention mask: zero for permitted token pairs, a large negative
// value for pairs that cross a cyclic-shift wrap boundary.
template <class T>
struct AttentionMask {
    i64 windows_per_image = 0;
    i64 tokens = 0;
    bool all_zero = true;
    std::vector<T> values; // [nW, T, T] when not all_zero

    static AttentionMask make(const WindowLayout& layout) {
        AttentionMask m;
        m.windows_per_image = layout.windows_per_image();
        m.tokens = layout.tokens();
        if (layout.shift == 0) return m; // all-zero by contract
        m.all_zero = false;

        i64 H = layout.height, W = layout.width, ws = layout.window, sh = layout.shift;
        // Region ids over the shifted image, split at H-ws and H-shift.
        auto region = [&](i64 p, i64 n) { return p < n - ws ? 0 : (p < n - sh ? 1 : 2); };
        std::vector<int> id(static_cast<size_t>(H * W));
        for (i64 h = 0; h < H; ++h)
            for (i64 w = 0; w < W; ++w) id[static_cast<size_t>(h * W + w)] = region(h, H) * 3 + region(w, W);

        i64 wy_n = H / ws, wx_n = W / ws;
        i64 tok = m.tokens;
        m.values.assign(static_cast<size_t>(m.windows_per_image * tok * tok), T(0));
        for (i64 wy = 0; wy < wy_n; ++wy)
            for (i64 wx = 0; wx < wx_n; ++wx) {
                i64 widx = wy * wx_n + wx;
                for (i64 a = 0; a < tok; ++a) {
                    int ida = id[static_cast<size_t>((wy * ws + a / ws) * W + wx * ws + a % ws)];
                    for (i64 b = 0; b < tok; ++b) {
                        int idb = id[static_cast<size_t>((wy * ws + b / ws) * W + wx * ws + b % ws)];
                        if (ida != idb)
                            m.values[static_cast<size_t>((widx * tok + a) * tok + b)] = static_cast<T>(kMaskNegative);
                    }
                }
            }
        return m;
    }
};

// Per-layer learned parameters of one transformer layer.
template <class T>
struct DctstlParams {
    i64 channels = 0;
    i64 window = 0;
    int heads = 1;
    bool use_mlp = true;
    static constexpr i64 mlp_ratio = 2;

    Tensor<T> ln1_gamma, ln1_beta;
    Tensor<T> qkv_w, qkv_b;   // [C,3C], [3C]
    Tensor<T> proj_w, proj_b; // [C,C], [C]
    Tensor<T> rel_bias;       // [(2W_s-1)^2, heads]
    Tensor<T> ln2_gamma, ln2_beta;
    Tensor<T> mlp_w1, mlp_b1; // [C, r*C], [r*C]
    Tensor<T> mlp_w2, mlp_b2; // [r*C, C], [C]

    static int default_heads(i64 channels) { return channels % 8 == 0 ? static_cast<int>(channels / 8) : 1; }

    static DctstlParams make(i64 channels, i64 window, int heads, Rng& rng, bool use_mlp = true,
                             double init_std = 0.02) {
        if (heads < 1 || channels % heads != 0)
            throw ShapeError("DctstlParams: channels " + std::to_string(channels) + " not divisible by heads " +
                             std::to_string(heads));
        DctstlParams p;
        p.channels = channels;
        p.window = window;
        p.heads = heads;
        p.use_mlp = use_mlp;
        i64 span = 2 * window - 1;
        p.ln1_gamma = Tensor<T>::full({channels}, T(1));
        p.ln1_beta = Tensor<T>::zeros({channels});
        p.qkv_w = Tensor<T>::randn({channels, 3 * channels}, rng, 0.0, init_std);
        p.qkv_b = Tensor<T>::zeros({3 * channels});
        p.proj_w = Tensor<T>::randn({channels, channels}, rng, 0.0, init_std);
        p.proj_b = Tensor<T>::zeros({channels});
        p.rel_bias = Tensor<T>::randn({span * span, heads}, rng, 0.0, init_std);
        p.ln2_gamma = Tensor<T>::full({channels}, T(1));
        p.ln2_beta = Tensor<T>::zeros({channels});
        p.mlp_w1 = Tensor<T>::randn({channels, mlp_ratio * channels}, rng, 0.0, init_std);
        p.mlp_b1 = Tensor<T>::zeros({mlp_ratio * channels});
        p.mlp_w2 = Tensor<T>::randn({mlp_ratio * channels, channels}, rng, 0.0, init_std);
        p.mlp_b2 = Tensor<T>::zeros({channels});
        return p;
    }

    static DctstlParams make_zero(i64 channels, i64 window, int heads, bool use_mlp = true) {
        Rng rng(0);
        DctstlParams p = make(channels, window, heads, rng, use_mlp, 0.0);
        p.ln1_gamma = Tensor<T>::zeros({channels});
        p.ln2_gamma = Tensor<T>::zeros({channels});
        return p;
    }

    std::vector<Tensor<T>> tensors() const {
        std::vector<Tensor<T>> v{ln1_gamma, ln1_beta, qkv_w, qkv_b, proj_w, proj_b, rel_bias};
        if (use_mlp) {
            v.push_back(ln2_gamma);
            v.push_back(ln2_beta);
            v.push_back(mlp_w1);
            v.push_back(mlp_b1);
            v.push_back(mlp_w2);
            v.push_back(mlp_b2);
        }
        return v;
    }
};

// Relative position index for token pairs on a window x window lattice.
inline std::shared_ptr<std::vector<i64>> relative_position_index(i64 window) {
    i64 tok = window * window;
    i64 span = 2 * window - 1;
    auto idx = std::make_shared<std::vector<i64>>(static_cast<size_t>(tok * tok));
    for (i64 a = 0; a < tok; ++a) {
        i64 ya = a / window, xa = a % window;
        for (i64 b = 0; b < tok; ++b) {
            i64 yb = b / window, xb = b % window;
            (*idx)[static_cast<size_t>(a * tok + b)] = (ya - yb + window - 1) * span + (xa - xb + window - 1);
        }
    }
    return idx;
}

namespace detail {

// scores[m,h,i,j] += table[idx[i*T+j], h]; differentiable w.r.t. both.
template <class T>
Tensor<T> add_relative_bias(const Tensor<T>& scores, const Tensor<T>& table,
                            std::shared_ptr<const std::vector<i64>> idx) {
    i64 M = scores.dim(0), Hh = scores.dim(1), Tk = scores.dim(2);
    if (scores.dim(3) != Tk) throw ShapeError("add_relative_bias: scores must be [M,h,T,T]");
    if (table.dim(1) != Hh) throw ShapeError("add_relative_bias: table heads != score heads");
    Tensor<T> out(scores.shape());
    const T* ps = scores.data();
    const T* pt = table.data();
    T* po = out.data();
    const i64* pi = idx->data();
    for (i64 m = 0; m < M; ++m)
        for (i64 h = 0; h < Hh; ++h)
            for (i64 ij = 0; ij < Tk * Tk; ++ij)
                po[(m * Hh + h) * Tk * Tk + ij] = ps[(m * Hh + h) * Tk * Tk + ij] + pt[pi[ij] * Hh + h];
    record_op<T>("add_relative_bias", {&scores, &table}, out, [scores = scores, table = table, out, idx, M, Hh, Tk]() mutable {
        const T* pg = out.grad().data();
        const i64* pi2 = idx->data();
        if (scores.requires_grad()) {
            auto& gs = scores.grad();
            for (size_t i = 0; i < gs.size(); ++i) gs[i] += pg[i];
        }
        if (table.requires_grad()) {
            T* gt = table.grad().data();
            for (i64 m = 0; m < M; ++m)
                for (i64 h = 0; h < Hh; ++h)
                    for (i64 ij = 0; ij < Tk * Tk; ++ij)
                        gt[pi2[ij] * Hh + h] += pg[(m * Hh + h) * Tk * Tk + ij];
        }
    });
    return out;
}

// scores[m,h,i,j] += mask[m % nW, i, j]; the mask is constant.
template <class T>
Tensor<T> add_window_mask(const Tensor<T>& scores, std::shared_ptr<const std::vector<T>> mask, i64 nW) {
    i64 M = scores.dim(0), Hh = scores.dim(1), Tk = scores.dim(2);
    Tensor<T> out(scores.shape());
    const T* ps = scores.data();
    T* po = out.data();
    const T* pm = mask->data();
    for (i64 m = 0; m < M; ++m) {
        const T* mw = pm + (m % nW) * Tk * Tk;
        for (i64 h = 0; h < Hh; ++h)
            for (i64 ij = 0; ij < Tk * Tk; ++ij)
                po[(m * Hh + h) * Tk * Tk + ij] = ps[(m * Hh + h) * Tk * Tk + ij] + mw[ij];
    }
    record_op<T>("add_window_mask", {&scores}, out, [scores = scores, out]() mutable {
        const auto& g = out.grad();
        auto& gs = scores.grad();
        for (size_t i = 0; i < g.size(); ++i) gs[i] += g[i];
    });
    return out;
}

} // namespace detail

// Windowed multi-head self-attention with relative position bias and an
// additive cross-region mask. windows: [nW, W_s^2, C].
template <class T>
Tensor<T> w_msa(const Tensor<T>& windows, const DctstlParams<T>& params, const AttentionMask<T>& mask) {
    if (windows.ndim() != 3) throw ShapeError("w_msa: input must be [nW, T, C]");
    i64 M = windows.dim(0), Tk = windows.dim(1), C = windows.dim(2);
    int heads = params.heads;
    if (heads < 1 || C % heads != 0)
        throw ShapeError("w_msa: channels " + std::to_string(C) + " not divisible by heads " + std::to_string(heads));
    if (Tk != params.window * params.window)
        throw ShapeError("w_msa: token count " + std::to_string(Tk) + " != window^2");
    i64 d = C / heads;

    Tensor<T> qkv = add_bias(matmul(windows, params.qkv_w), params.qkv_b); // [M,T,3C]
    auto split_heads = [&](i64 from) {
        Tensor<T> part = slice_lastdim(qkv, from, from + C);            // [M,T,C]
        Tensor<T> r = reshape(part, Shape{M, Tk, heads, d});            // [M,T,h,d]
        return transpose_axes(r, {0, 2, 1, 3});                         // [M,h,T,d]
    };
    Tensor<T> q = split_heads(0);
    Tensor<T> k = split_heads(C);
    Tensor<T> v = split_heads(2 * C);

    Tensor<T> kt = transpose_axes(k, {0, 1, 3, 2});                     // [M,h,d,T]
    Tensor<T> scores = scale(matmul(q, kt), 1.0 / std::sqrt(static_cast<double>(d)));
    scores = detail::add_relative_bias(scores, params.rel_bias, relative_position_index(params.window));
    if (!mask.all_zero) {
        if (M % mask.windows_per_image != 0 || Tk != mask.tokens)
            throw ShapeError("w_msa: mask layout does not match the window batch");
        scores = detail::add_window_mask(scores, std::make_shared<const std::vector<T>>(mask.values),
                                         mask.windows_per_image);
    }
    Tensor<T> attn = softmax_lastdim(scores);                           // [M,h,T,T]
    Tensor<T> ctx = matmul(attn, v);                                    // [M,h,T,d]
    Tensor<T> merged = reshape(transpose_axes(ctx, {0, 2, 1, 3}), Shape{M, Tk, C});
    return add_bias(matmul(merged, params.proj_w), params.proj_b);
}

// One transformer layer:
//   h = x + reverse(IDCT(attn(DCT(partition(LN(x))))))
//   y = h + MLP(LN(h))            (when the MLP sublayer is enabled)
// With use_dct disabled the DCT/IDCT pair is skipped (plain window attention).
template <class T>
Tensor<T> dctstl_forward(const Tensor<T>& features, const DctstlParams<T>& params, const WindowLayout& layout,
                         const DctPlan<T>& plan, bool use_dct = true) {
    if (features.ndim() != 4) throw ShapeError("dctstl_forward: input must be NHWC");
    i64 N = features.dim(0), C = features.dim(3);
    if (C != params.channels)
        throw ShapeError("dctstl_forward: channel axis " + std::to_string(C) + " != params channels " +
                         std::to_string(params.channels));
    if (use_dct && plan.window != layout.window)
        throw ShapeError("dctstl_forward: DCT plan window != layout window");

    Tensor<T> normed = layer_norm(features, params.ln1_gamma, params.ln1_beta);
    Tensor<T> win = window_partition(normed, layout); // [M,ws,ws,C]
    Tensor<T> coeffs = use_dct ? dct2d(win, plan) : win;
    i64 M = coeffs.dim(0);
    Tensor<T> tokens = reshape(coeffs, Shape{M, layout.tokens(), C});
    AttentionMask<T> mask = AttentionMask<T>::make(layout);
    Tensor<T> att = w_msa(tokens, params, mask);
    Tensor<T> back = reshape(att, Shape{M, layout.window, layout.window, C});
    Tensor<T> spatial = use_dct ? idct2d(back, plan) : back;
    Tensor<T> img = window_reverse(spatial, layout);
    Tensor<T> h = add(features, img);
    if (!params.use_mlp) return h;

    Tensor<T> n2 = layer_norm(h, params.ln2_gamma, params.ln2_beta);
    Tensor<T> flat = reshape(n2, Shape{N * layout.height * layout.width, C});
    Tensor<T> hidden = gelu(add_bias(matmul(flat, params.mlp_w1), params.mlp_b1));
    Tensor<T> mlp_out = add_bias(matmul(hidden, params.mlp_w2), params.mlp_b2);
    Tensor<T> mlp_img = reshape(mlp_out, Shape{N, layout.height, layout.width, C});
    return add(h, mlp_img);
}

// L layers with alternating shift: layer 1 unshifted, layer 2 shifted by
// W_s/2, and so on.
template <class T>
Tensor<T> dctswin_block_forward(const Tensor<T>& features, const std::vector<DctstlParams<T>>& layers,
                                i64 window, const DctPlan<T>& plan, bool use_dct = true) {
    if (layers.empty()) throw ShapeError("dctswin_block_forward: need at least one layer");
    Tensor<T> x = features;
    i64 H = features.dim(1), W = features.dim(2);
    for (size_t l = 0; l < layers.size(); ++l) {
        i64 shift = (l % 2 == 1) ? window / 2 : 0;
        WindowLayout layout(window, shift, H, W);
        x = dctstl_forward(x, layers[l], layout, plan, use_dct);
    }
    return x;
}

} // namespace mtkd
