// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: plain L1 aggregation/student losses, the
// wavelet-subband distillation loss (mean of per-subband L1 over the 3K+1
// bands of a K-level Haar decomposition), and their weighted combination.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "mtkd/tensor.hpp"
#include "mtkd/transforms.hpp"

namespace mtkd {

// Evaluated (non-differentiable) view of one loss computation.
struct LossReport {
    double total = 0.0;
    std::map<std::string, double> components;
    i64 iteration = 0;
};

template <class T>
Tensor<T> loss_ka(const Tensor<T>& aggregated, const Tensor<T>& ground_truth) {
    if (aggregated.shape() != ground_truth.shape())
        throw ShapeError("loss_ka: shape mismatch " + shape_str(aggregated.shape()) + " vs " +
                         shape_str(ground_truth.shape()));
    return l1_mean(aggregated, ground_truth);
}

template <class T>
Tensor<T> loss_stu(const Tensor<T>& student_out, const Tensor<T>& ground_truth) {
    if (student_out.shape() != ground_truth.shape())
        throw ShapeError("loss_stu: shape mismatch " + shape_str(student_out.shape()) + " vs " +
                         shape_str(ground_truth.shape()));
    return l1_mean(student_out, ground_truth);
}

template <class T>
struct SubbandLoss {
    Tensor<T> total;                                      // scalar, differentiable
    std::vector<std::pair<std::string, double>> subbands; // 3K+1 evaluated terms
};

template <class T>
SubbandLoss<T> loss_dis(const Tensor<T>& student_out, const Tensor<T>& aggregated, int levels) {
    if (student_out.shape() != aggregated.shape())
        throw ShapeError("loss_dis: shape mismatch " + shape_str(student_out.shape()) + " vs " +
                         shape_str(aggregated.shape()));
    SubbandPyramid<T> ps = dwt2d(student_out, levels);
    SubbandPyramid<T> pa = dwt2d(aggregated, levels);
    auto bs = ps.ordered_bands();
    auto ba = pa.ordered_bands();

    SubbandLoss<T> out;
    Tensor<T> acc;
    for (size_t i = 0; i < bs.size(); ++i) {
        Tensor<T> term = l1_mean(bs[i].second, ba[i].second);
        out.subbands.emplace_back(bs[i].first, static_cast<double>(term.item()));
        acc = acc.valid() ? add(acc, term) : term;
    }
    out.total = scale(acc, 1.0 / static_cast<double>(3 * levels + 1));
    return out;
}

// Restriction of the subband loss to the 3K detail bands; the DC content
// (LL) does not participate.
template <class T>
SubbandLoss<T> loss_dis_detail_only(const Tensor<T>& student_out, const Tensor<T>& aggregated, int levels) {
    if (student_out.shape() != aggregated.shape())
        throw ShapeError("loss_dis: shape mismatch " + shape_str(student_out.shape()) + " vs " +
                         shape_str(aggregated.shape()));
    SubbandPyramid<T> ps = dwt2d(student_out, levels);
    SubbandPyramid<T> pa = dwt2d(aggregated, levels);
    auto bs = ps.ordered_bands();
    auto ba = pa.ordered_bands();

    SubbandLoss<T> out;
    Tensor<T> acc;
    for (size_t i = 0; i < bs.size(); ++i) {
        if (bs[i].first.rfind("LL", 0) == 0) continue;
        Tensor<T> term = l1_mean(bs[i].second, ba[i].second);
        out.subbands.emplace_back(bs[i].first, static_cast<double>(term.item()));
        acc = acc.valid() ? add(acc, term) : term;
    }
    out.total = scale(acc, 1.0 / static_cast<double>(3 * levels));
    return out;
}

// Unshifted tiling of an image into non-overlapping windows.
template <class T>
Tensor<T> tile_windows(const Tensor<T>& x, i64 ws) {
    i64 N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    i64 wy_n = H / ws, wx_n = W / ws;
    auto map = std::make_shared<std::vector<i64>>(static_cast<size_t>(x.numel()));
    i64 k = 0;
    for (i64 n = 0; n < N; ++n)
        for (i64 wy = 0; wy < wy_n; ++wy)
            for (i64 wx = 0; wx < wx_n; ++wx)
                for (i64 i = 0; i < ws; ++i)
                    for (i64 j = 0; j < ws; ++j) {
                        i64 base = ((n * H + wy * ws + i) * W + wx * ws + j) * C;
                        for (i64 c = 0; c < C; ++c) (*map)[static_cast<size_t>(k++)] = base + c;
                    }
    return gather_linear(x, map, Shape{N * wy_n * wx_n, ws, ws, C}, "tile_windows");
}

// L1 between blockwise DCT coefficients of the two images (windows tiled
// over the image, plan window must divide both spatial axes).
template <class T>
Tensor<T> loss_dct_domain(const Tensor<T>& student_out, const Tensor<T>& aggregated, const DctPlan<T>& plan) {
    if (student_out.shape() != aggregated.shape())
        throw ShapeError("loss_dct_domain: shape mismatch " + shape_str(student_out.shape()) + " vs " +
                         shape_str(aggregated.shape()));
    i64 H = student_out.dim(1), W = student_out.dim(2);
    if (H % plan.window != 0 || W % plan.window != 0)
        throw ShapeError("loss_dct_domain: spatial axes must be divisible by the DCT window");
    Tensor<T> ws = tile_windows(student_out, plan.window);
    Tensor<T> wa = tile_windows(aggregated, plan.window);
    return l1_mean(dct2d(ws, plan), dct2d(wa, plan));
}

template <class T>
struct TotalLoss {
    Tensor<T> total; // differentiable scalar
    LossReport report;
};

template <class T>
TotalLoss<T> loss_total(const Tensor<T>& student_out, const Tensor<T>& ground_truth, const Tensor<T>& aggregated,
                        double alpha, int levels) {
    if (alpha < 0.0) throw ConfigError("loss_total: alpha must be >= 0");
    Tensor<T> stu = loss_stu(student_out, ground_truth);
    SubbandLoss<T> dis = loss_dis(student_out, aggregated, levels);
    TotalLoss<T> out;
    out.total = add(scale(stu, alpha), dis.total);
    out.report.total = static_cast<double>(out.total.item());
    out.report.components["L_stu"] = static_cast<double>(stu.item());
    out.report.components["L_dis"] = static_cast<double>(dis.total.item());
    for (const auto& [name, v] : dis.subbands) out.report.components["L_dis." + name] = v;
    return out;
}

} // namespace mtkd
