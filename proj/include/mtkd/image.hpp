// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtkd/tensor.hpp"

namespace mtkd {

// 8-bit interleaved RGB image, the on-disk currency of the pipeline.
struct ImageU8 {
    i64 width = 0;
    i64 height = 0;
    std::vector<std::uint8_t> rgb; // height * width * 3, row-major

    bool empty() const { return rgb.empty(); }
    i64 numel() const { return height * width * 3; }
};

// Implemented in png_io.cpp. read throws DataError on unreadable or
// non-8-bit-convertible files; all inputs are normalized to RGB8.
ImageU8 read_png_rgb8(const std::string& path);
void write_png_rgb8(const std::string& path, const ImageU8& img);

enum class ValueRange { Unit, EightBit };
enum class ColorSpace { Srgb, LumaOnly };
enum class ChannelMode { Luma, Rgb };

inline const char* channel_mode_name(ChannelMode m) { return m == ChannelMode::Luma ? "Y" : "RGB"; }

// NHWC float view of a batch of images plus color-space and value-range
// metadata.
template <class T>
struct ImageBatch {
    Tensor<T> data; // [N,H,W,3]
    ValueRange range = ValueRange::Unit;
    ColorSpace space = ColorSpace::Srgb;
};

template <class T>
ImageBatch<T> batch_from_images(const std::vector<ImageU8>& images) {
    if (images.empty()) throw DataError("batch_from_images: empty image list");
    i64 H = images[0].height, W = images[0].width;
    for (const auto& im : images)
        if (im.height != H || im.width != W) throw DataError("batch_from_images: mixed image sizes");
    Tensor<T> t(Shape{static_cast<i64>(images.size()), H, W, 3});
    T* p = t.data();
    for (const auto& im : images)
        for (i64 i = 0; i < im.numel(); ++i) *p++ = static_cast<T>(im.rgb[static_cast<size_t>(i)]) / T(255);
    return ImageBatch<T>{t, ValueRange::Unit};
}

// Converts one image of a unit-range batch back to 8-bit with clamping and
// round-to-nearest.
template <class T>
ImageU8 image_from_batch(const Tensor<T>& t, i64 index) {
    if (t.ndim() != 4 || t.dim(3) != 3) throw ShapeError("image_from_batch: tensor must be [N,H,W,3]");
    ImageU8 im;
    im.height = t.dim(1);
    im.width = t.dim(2);
    im.rgb.resize(static_cast<size_t>(im.numel()));
    const T* p = t.data() + index * im.numel();
    for (i64 i = 0; i < im.numel(); ++i) {
        double v = static_cast<double>(p[i]) * 255.0;
        v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
        im.rgb[static_cast<size_t>(i)] = static_cast<std::uint8_t>(v + 0.5);
    }
    return im;
}

// De-normalized planes for metric evaluation: 0..255 doubles, clamped but not
// quantized. One vector per channel in ChannelMode order.
template <class T>
std::vector<std::vector<double>> metric_planes(const Tensor<T>& t, i64 index, ChannelMode mode) {
    if (t.ndim() != 4 || t.dim(3) != 3) throw ShapeError("metric_planes: tensor must be [N,H,W,3]");
    i64 H = t.dim(1), W = t.dim(2);
    const T* p = t.data() + index * H * W * 3;
    auto clamp255 = [](double v) { return v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v); };
    std::vector<std::vector<double>> planes;
    if (mode == ChannelMode::Luma) {
        std::vector<double> y(static_cast<size_t>(H * W));
        for (i64 i = 0; i < H * W; ++i) {
            double r = clamp255(static_cast<double>(p[i * 3 + 0]) * 255.0);
            double g = clamp255(static_cast<double>(p[i * 3 + 1]) * 255.0);
            double b = clamp255(static_cast<double>(p[i * 3 + 2]) * 255.0);
            // BT.601 limited-range luma of full-range RGB.
            y[static_cast<size_t>(i)] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
        }
        planes.push_back(std::move(y));
    } else {
        for (int c = 0; c < 3; ++c) {
            std::vector<double> ch(static_cast<size_t>(H * W));
            for (i64 i = 0; i < H * W; ++i) ch[static_cast<size_t>(i)] = clamp255(static_cast<double>(p[i * 3 + c]) * 255.0);
            planes.push_back(std::move(ch));
        }
    }
    return planes;
}

} // namespace mtkd
