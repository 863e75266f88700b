// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Convolution-based bicubic downsampling (a = -0.5) with the kernel
// stretched by the integer scale factor for antialiasing, symmetric boundary
// handling, and center-aligned sampling. This is the degradation used to
// derive LR training data from HR images.

#pragma once

#include <cmath>
#include <vector>

#include "mtkd/image.hpp"

namespace mtkd {

inline double bicubic_weight(double x, double a = -0.5) {
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return a * (((x - 5.0) * x + 8.0) * x - 4.0);
    return 0.0;
}

namespace detail {

struct ResampleTaps {
    std::vector<i64> offsets; // relative to o*s
    std::vector<double> weights;
};

// For integer downscale s, every output sample shares one fractional phase:
// the input-space center of output o is o*s + (s-1)/2.
inline ResampleTaps bicubic_taps(i64 s) {
    ResampleTaps t;
    double center = (static_cast<double>(s) - 1.0) / 2.0;
    i64 lo = static_cast<i64>(std::floor(center - 2.0 * static_cast<double>(s))) + 1;
    i64 hi = static_cast<i64>(std::ceil(center + 2.0 * static_cast<double>(s))) - 1;
    double sum = 0.0;
    for (i64 j = lo; j <= hi; ++j) {
        double w = bicubic_weight((center - static_cast<double>(j)) / static_cast<double>(s)) /
                   static_cast<double>(s);
        t.offsets.push_back(j);
        t.weights.push_back(w);
        sum += w;
    }
    for (auto& w : t.weights) w /= sum;
    return t;
}

inline i64 reflect_index(i64 i, i64 n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

} // namespace detail

// Downsample one plane by integer factor s (h and w divisible by s), two
// separable passes in double.
inline std::vector<double> bicubic_downsample_plane(const std::vector<double>& src, i64 h, i64 w, i64 s) {
    if (s < 1 || h % s != 0 || w % s != 0)
        throw ShapeError("bicubic_downsample_plane: dims must be divisible by the scale");
    if (s == 1) return src;
    auto taps = detail::bicubic_taps(s);
    i64 oh = h / s, ow = w / s;

    std::vector<double> horiz(static_cast<size_t>(h * ow));
    for (i64 y = 0; y < h; ++y)
        for (i64 x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (size_t k = 0; k < taps.offsets.size(); ++k) {
                i64 sx = detail::reflect_index(x * s + taps.offsets[k], w);
                acc += taps.weights[k] * src[static_cast<size_t>(y * w + sx)];
            }
            horiz[static_cast<size_t>(y * ow + x)] = acc;
        }

    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (i64 y = 0; y < oh; ++y)
        for (i64 x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (size_t k = 0; k < taps.offsets.size(); ++k) {
                i64 sy = detail::reflect_index(y * s + taps.offsets[k], h);
                acc += taps.weights[k] * horiz[static_cast<size_t>(sy * ow + x)];
            }
            out[static_cast<size_t>(y * ow + x)] = acc;
        }
    return out;
}

// 8-bit RGB wrapper: per-channel downsample, round-to-nearest, clamp.
inline ImageU8 bicubic_downsample(const ImageU8& hr, i64 s) {
    if (hr.height % s != 0 || hr.width % s != 0)
        throw ShapeError("bicubic_downsample: image dims must be divisible by the scale");
    ImageU8 lr;
    lr.height = hr.height / s;
    lr.width = hr.width / s;
    lr.rgb.resize(static_cast<size_t>(lr.numel()));
    std::vector<double> plane(static_cast<size_t>(hr.height * hr.width));
    for (int c = 0; c < 3; ++c) {
        for (i64 i = 0; i < hr.height * hr.width; ++i)
            plane[static_cast<size_t>(i)] = static_cast<double>(hr.rgb[static_cast<size_t>(i * 3 + c)]);
        auto small = bicubic_downsample_plane(plane, hr.height, hr.width, s);
        for (i64 i = 0; i < lr.height * lr.width; ++i) {
            double v = std::round(small[static_cast<size_t>(i)]);
            v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
            lr.rgb[static_cast<size_t>(i * 3 + c)] = static_cast<std::uint8_t>(v);
        }
    }
    return lr;
}

} // namespace mtkd
