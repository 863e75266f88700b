// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// PSNR and single-scale SSIM over de-normalized (0..255) image planes,
// evaluated in double. PSNR of identical images is reported as +inf.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mtkd/image.hpp"

namespace mtkd {

struct MetricResult {
    double psnr = 0.0;
    double ssim = 0.0;
    ChannelMode mode = ChannelMode::Luma;
    i64 crop = 0;
};

namespace detail {

inline std::vector<double> crop_plane(const std::vector<double>& p, i64 h, i64 w, i64 crop) {
    if (2 * crop >= h || 2 * crop >= w) throw ShapeError("metrics: border crop larger than the image");
    if (crop == 0) return p;
    std::vector<double> out(static_cast<size_t>((h - 2 * crop) * (w - 2 * crop)));
    i64 k = 0;
    for (i64 y = crop; y < h - crop; ++y)
        for (i64 x = crop; x < w - crop; ++x) out[static_cast<size_t>(k++)] = p[static_cast<size_t>(y * w + x)];
    return out;
}

inline std::vector<double> gaussian_kernel_11() {
    std::vector<double> g(11);
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        double d = static_cast<double>(i - 5);
        g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += g[static_cast<size_t>(i)];
    }
    for (auto& v : g) v /= sum;
    return g;
}

// Separable valid-mode Gaussian filtering of an h x w plane.
inline std::vector<double> gauss_valid(const std::vector<double>& p, i64 h, i64 w, const std::vector<double>& g) {
    i64 k = static_cast<i64>(g.size());
    i64 ow = w - k + 1, oh = h - k + 1;
    std::vector<double> horiz(static_cast<size_t>(h * ow));
    for (i64 y = 0; y < h; ++y)
        for (i64 x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (i64 t = 0; t < k; ++t) acc += g[static_cast<size_t>(t)] * p[static_cast<size_t>(y * w + x + t)];
            horiz[static_cast<size_t>(y * ow + x)] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (i64 y = 0; y < oh; ++y)
        for (i64 x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (i64 t = 0; t < k; ++t) acc += g[static_cast<size_t>(t)] * horiz[static_cast<size_t>((y + t) * ow + x)];
            out[static_cast<size_t>(y * ow + x)] = acc;
        }
    return out;
}

} // namespace detail

// PSNR over one or more channel planes (pooled MSE), 0..255 range.
inline double psnr_planes(const std::vector<std::vector<double>>& ref, const std::vector<std::vector<double>>& test,
                          i64 h, i64 w, i64 crop) {
    if (ref.size() != test.size() || ref.empty()) throw ShapeError("psnr: mismatched channel planes");
    double mse = 0.0;
    i64 count = 0;
    for (size_t c = 0; c < ref.size(); ++c) {
        auto rc = detail::crop_plane(ref[c], h, w, crop);
        auto tc = detail::crop_plane(test[c], h, w, crop);
        if (rc.size() != tc.size()) throw ShapeError("psnr: mismatched plane sizes");
        for (size_t i = 0; i < rc.size(); ++i) {
            double d = rc[i] - tc[i];
            mse += d * d;
        }
        count += static_cast<i64>(rc.size());
    }
    mse /= static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// Single-scale SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// L=255, averaged over valid positions (and over planes when several).
inline double ssim_planes(const std::vector<std::vector<double>>& ref, const std::vector<std::vector<double>>& test,
                          i64 h, i64 w, i64 crop) {
    if (ref.size() != test.size() || ref.empty()) throw ShapeError("ssim: mismatched channel planes");
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    auto g = detail::gaussian_kernel_11();
    i64 ch = h - 2 * crop, cw = w - 2 * crop;
    if (ch < 11 || cw < 11) throw ShapeError("ssim: image smaller than the 11x11 window after cropping");

    double acc = 0.0;
    for (size_t c = 0; c < ref.size(); ++c) {
        auto x = detail::crop_plane(ref[c], h, w, crop);
        auto y = detail::crop_plane(test[c], h, w, crop);
        std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        auto mx = detail::gauss_valid(x, ch, cw, g);
        auto my = detail::gauss_valid(y, ch, cw, g);
        auto mxx = detail::gauss_valid(xx, ch, cw, g);
        auto myy = detail::gauss_valid(yy, ch, cw, g);
        auto mxy = detail::gauss_valid(xy, ch, cw, g);
        double plane = 0.0;
        for (size_t i = 0; i < mx.size(); ++i) {
            double vx = mxx[i] - mx[i] * mx[i];
            double vy = myy[i] - my[i] * my[i];
            double cov = mxy[i] - mx[i] * my[i];
            plane += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        acc += plane / static_cast<double>(mx.size());
    }
    return acc / static_cast<double>(ref.size());
}

// Metrics for one image of a unit-range batch pair.
template <class T>
MetricResult compute_metrics(const Tensor<T>& ref, const Tensor<T>& test, i64 index, ChannelMode mode, i64 crop) {
    if (ref.shape() != test.shape())
        throw ShapeError("metrics: shape mismatch " + shape_str(ref.shape()) + " vs " + shape_str(test.shape()));
    auto rp = metric_planes(ref, index, mode);
    auto tp = metric_planes(test, index, mode);
    MetricResult r;
    r.mode = mode;
    r.crop = crop;
    r.psnr = psnr_planes(rp, tp, ref.dim(1), ref.dim(2), crop);
    r.ssim = ssim_planes(rp, tp, ref.dim(1), ref.dim(2), crop);
    return r;
}

// CSV-friendly rendering; +inf serializes as "inf".
inline std::string format_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace mtkd
