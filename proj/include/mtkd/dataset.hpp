// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset ingestion (HR PNG folder -> paired HR/LR with cached bicubic LR),
// the deterministic manifest, and the seeded patch sampler with paired
// augmentation.

#pragma once

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mtkd/bicubic.hpp"
#include "mtkd/image.hpp"
#include "mtkd/rng.hpp"
#include "mtkd/tensor.hpp"

namespace mtkd {

inline std::uint64_t fnv1a_hash(const std::string& data, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct Manifest {
    struct Pair {
        std::string name;
        i64 hr_h = 0, hr_w = 0;
    };
    i64 scale = 0;
    std::vector<Pair> pairs;
    std::vector<std::pair<std::string, std::string>> skipped; // file, reason

    std::string to_text() const {
        std::ostringstream os;
        os << "# mtkd-manifest-v1\n";
        os << "scale=" << scale << "\n";
        for (const auto& p : pairs) os << "pair " << p.name << " " << p.hr_h << "x" << p.hr_w << "\n";
        for (const auto& [f, r] : skipped) os << "skip " << f << " " << r << "\n";
        return os.str();
    }

    std::uint64_t content_hash() const { return fnv1a_hash(to_text()); }
};

struct DatasetEntry {
    std::string name;
    ImageU8 hr;
    ImageU8 lr;
};

struct Dataset {
    i64 scale = 0;
    std::vector<DatasetEntry> entries;
    Manifest manifest;
};

// Reads every regular file in hr_dir (sorted by filename), crops HR images
// to scale multiples, and derives LR by bicubic downsampling. LR images are
// cached under <hr_dir>/lr_x<scale>/; unreadable files are skipped with a
// recorded reason.
inline Dataset ingest_dataset(const std::string& hr_dir, i64 scale, bool write_cache = true,
                              std::vector<std::string>* warnings = nullptr) {
    namespace fs = std::filesystem;
    if (scale < 1) throw ConfigError("ingest_dataset: scale must be positive");
    if (!fs::is_directory(hr_dir)) throw DataError("dataset directory not found: " + hr_dir);

    Dataset ds;
    ds.scale = scale;
    ds.manifest.scale = scale;

    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(hr_dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());

    fs::path cache_dir = fs::path(hr_dir) / ("lr_x" + std::to_string(scale));
    bool cache_ok = write_cache;
    if (write_cache) {
        std::error_code ec;
        fs::create_directories(cache_dir, ec);
        if (ec) {
            cache_ok = false;
            if (warnings) warnings->push_back("cannot create LR cache dir " + cache_dir.string());
        }
    }

    for (const auto& name : names) {
        DatasetEntry entry;
        entry.name = name;
        try {
            entry.hr = read_png_rgb8((fs::path(hr_dir) / name).string());
        } catch (const DataError& e) {
            ds.manifest.skipped.emplace_back(name, e.what());
            if (warnings) warnings->push_back("skipped " + name + ": " + e.what());
            continue;
        }
        // crop HR to scale multiples (top-left anchored)
        i64 ch = entry.hr.height - entry.hr.height % scale;
        i64 cw = entry.hr.width - entry.hr.width % scale;
        if (ch < scale || cw < scale) {
            ds.manifest.skipped.emplace_back(name, "smaller than one scale step");
            continue;
        }
        if (ch != entry.hr.height || cw != entry.hr.width) {
            ImageU8 cropped;
            cropped.height = ch;
            cropped.width = cw;
            cropped.rgb.resize(static_cast<size_t>(ch * cw * 3));
            for (i64 y = 0; y < ch; ++y)
                std::copy_n(entry.hr.rgb.data() + y * entry.hr.width * 3, cw * 3,
                            cropped.rgb.data() + y * cw * 3);
            entry.hr = std::move(cropped);
        }

        fs::path cache_file = cache_dir / name;
        bool from_cache = false;
        if (fs::exists(cache_file)) {
            try {
                ImageU8 cached = read_png_rgb8(cache_file.string());
                if (cached.height == entry.hr.height / scale && cached.width == entry.hr.width / scale) {
                    entry.lr = std::move(cached);
                    from_cache = true;
                }
            } catch (const DataError&) {
                // fall through to recompute
            }
        }
        if (!from_cache) {
            entry.lr = bicubic_downsample(entry.hr, scale);
            if (cache_ok) {
                try {
                    write_png_rgb8(cache_file.string(), entry.lr);
                } catch (const DataError&) {
                    cache_ok = false;
                    if (warnings) warnings->push_back("cannot write LR cache for " + name);
                }
            }
        }
        ds.manifest.pairs.push_back({name, entry.hr.height, entry.hr.width});
        ds.entries.push_back(std::move(entry));
    }
    return ds;
}

// Seeded sampler of co-located LR/HR patch pairs with paired rotation and
// horizontal-flip augmentation.
class PatchSampler {
public:
    struct SampleMeta {
        i64 image = 0, ox = 0, oy = 0;
        int rot = 0;
        bool flip = false;
    };

    PatchSampler(const Dataset& ds, i64 lr_patch, bool augment, Rng rng)
        : ds_(&ds), patch_(lr_patch), augment_(augment), rng_(rng) {
        if (ds.entries.empty()) throw DataError("PatchSampler: empty dataset");
        if (lr_patch < 1) throw ConfigError("PatchSampler: patch size must be positive");
        for (const auto& e : ds.entries)
            if (e.lr.height < lr_patch || e.lr.width < lr_patch)
                throw DataError("PatchSampler: patch " + std::to_string(lr_patch) + " exceeds LR image " + e.name +
                                " (" + std::to_string(e.lr.height) + "x" + std::to_string(e.lr.width) + ")");
    }

    Rng& rng() { return rng_; }

    // Fills one LR patch and its HR counterpart; returns the draw metadata.
    template <class T>
    SampleMeta sample_pair(std::vector<T>& lr_out, std::vector<T>& hr_out) const {
        SampleMeta m;
        m.image = rng_.uniform_int(0, static_cast<i64>(ds_->entries.size()) - 1);
        const DatasetEntry& e = ds_->entries[static_cast<size_t>(m.image)];
        m.oy = rng_.uniform_int(0, e.lr.height - patch_);
        m.ox = rng_.uniform_int(0, e.lr.width - patch_);
        if (augment_) {
            m.rot = static_cast<int>(rng_.uniform_int(0, 3));
            m.flip = rng_.coin();
        }
        i64 s = ds_->scale;
        extract_patch(e.lr, m.oy, m.ox, patch_, m.rot, m.flip, lr_out);
        extract_patch(e.hr, m.oy * s, m.ox * s, patch_ * s, m.rot, m.flip, hr_out);
        return m;
    }

    template <class T>
    std::pair<Tensor<T>, Tensor<T>> sample_batch(i64 batch) const {
        i64 s = ds_->scale;
        Tensor<T> lr(Shape{batch, patch_, patch_, 3});
        Tensor<T> hr(Shape{batch, patch_ * s, patch_ * s, 3});
        std::vector<T> lbuf, hbuf;
        for (i64 b = 0; b < batch; ++b) {
            sample_pair(lbuf, hbuf);
            std::copy(lbuf.begin(), lbuf.end(), lr.data() + b * patch_ * patch_ * 3);
            std::copy(hbuf.begin(), hbuf.end(), hr.data() + b * patch_ * s * patch_ * s * 3);
        }
        return {lr, hr};
    }

    // Rotation (k quarter turns CCW) then horizontal flip, identical for the
    // pair because both are driven by the same draw.
    template <class T>
    static void extract_patch(const ImageU8& img, i64 oy, i64 ox, i64 p, int rot, bool flip, std::vector<T>& out) {
        out.resize(static_cast<size_t>(p * p * 3));
        for (i64 y = 0; y < p; ++y)
            for (i64 x = 0; x < p; ++x) {
                i64 sy = y, sx = x;
                if (flip) sx = p - 1 - sx;
                for (int r = 0; r < rot; ++r) {
                    i64 ty = sy;
                    sy = p - 1 - sx;
                    sx = ty;
                }
                const std::uint8_t* src = img.rgb.data() + ((oy + sy) * img.width + ox + sx) * 3;
                T* dst = out.data() + (y * p + x) * 3;
                for (int c = 0; c < 3; ++c) dst[c] = static_cast<T>(src[c]) / T(255);
            }
    }

private:
    const Dataset* ds_;
    i64 patch_;
    bool augment_;
    mutable Rng rng_;
};

} // namespace mtkd
