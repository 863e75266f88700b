// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint container: versioned header, model kind, config
// snapshot, named little-endian tensor table, optimizer state, iteration
// counter and RNG state. save -> load -> save is byte-identical.

#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "mtkd/adam.hpp"
#include "mtkd/networks.hpp"

namespace mtkd {

enum class BlobDtype : std::uint8_t { F32 = 0, F64 = 1 };

struct NamedBlob {
    std::string name;
    BlobDtype dtype = BlobDtype::F32;
    Shape shape;
    std::vector<std::uint8_t> bytes;
};

struct CheckpointData {
    std::uint32_t version = 1;
    std::string kind;        // model kind name
    std::string config_text; // key=value snapshot
    std::vector<NamedBlob> tensors;
    bool has_optimizer = false;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, lr = 1e-4;
    i64 opt_t = 0;
    std::vector<NamedBlob> opt_m, opt_v; // aligned with `tensors`
    i64 iteration = 0;
    std::uint64_t rng_state = 0, rng_inc = 0;
};

// Implemented in checkpoint.cpp.
void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// typed glue

template <class T>
constexpr BlobDtype dtype_of() {
    return sizeof(T) == 4 ? BlobDtype::F32 : BlobDtype::F64;
}

template <class T>
NamedBlob blob_from_values(const std::string& name, const Shape& shape, const std::vector<T>& values) {
    NamedBlob b;
    b.name = name;
    b.dtype = dtype_of<T>();
    b.shape = shape;
    b.bytes.resize(values.size() * sizeof(T));
    std::memcpy(b.bytes.data(), values.data(), b.bytes.size());
    return b;
}

template <class T>
std::vector<T> values_from_blob(const NamedBlob& b) {
    i64 n = shape_numel(b.shape);
    std::vector<T> out(static_cast<size_t>(n));
    if (b.dtype == dtype_of<T>()) {
        std::memcpy(out.data(), b.bytes.data(), b.bytes.size());
    } else if (b.dtype == BlobDtype::F32) {
        const float* p = reinterpret_cast<const float*>(b.bytes.data());
        for (i64 i = 0; i < n; ++i) out[static_cast<size_t>(i)] = static_cast<T>(p[i]);
    } else {
        const double* p = reinterpret_cast<const double*>(b.bytes.data());
        for (i64 i = 0; i < n; ++i) out[static_cast<size_t>(i)] = static_cast<T>(p[i]);
    }
    return out;
}

template <class T>
CheckpointData checkpoint_from_model(SrNet<T>& model, const std::string& config_text, AdamOptimizer<T>* opt,
                                     i64 iteration, const Rng& rng) {
    CheckpointData d;
    d.kind = model_kind_name(model.kind());
    d.config_text = config_text;
    for (const auto& [name, t] : model.params().items())
        d.tensors.push_back(blob_from_values(name, t.shape(), t.values()));
    if (opt) {
        d.has_optimizer = true;
        d.beta1 = opt->state().beta1;
        d.beta2 = opt->state().beta2;
        d.eps = opt->state().eps;
        d.lr = opt->state().lr;
        d.opt_t = opt->state().t;
        const auto& items = model.params().items();
        for (size_t k = 0; k < items.size(); ++k) {
            d.opt_m.push_back(blob_from_values(items[k].first, items[k].second.shape(), opt->state().m[k]));
            d.opt_v.push_back(blob_from_values(items[k].first, items[k].second.shape(), opt->state().v[k]));
        }
    }
    d.iteration = iteration;
    auto [st, inc] = rng.state();
    d.rng_state = st;
    d.rng_inc = inc;
    return d;
}

// Loads parameter values into an already-built model, validating names and
// shapes against the architecture.
template <class T>
void load_model_params(SrNet<T>& model, const CheckpointData& d) {
    const auto& items = model.params().items();
    if (items.size() != d.tensors.size())
        throw DataError("checkpoint: parameter count " + std::to_string(d.tensors.size()) +
                        " does not match architecture (" + std::to_string(items.size()) + ")");
    for (size_t k = 0; k < items.size(); ++k) {
        const auto& [name, t] = items[k];
        const NamedBlob& b = d.tensors[k];
        if (b.name != name)
            throw DataError("checkpoint: parameter '" + b.name + "' where architecture expects '" + name + "'");
        if (b.shape != t.shape())
            throw DataError("checkpoint: parameter '" + name + "' shape " + shape_str(b.shape) +
                            " does not match architecture " + shape_str(t.shape()));
        Tensor<T> h = t;
        h.values() = values_from_blob<T>(b);
    }
}

template <class T>
void load_optimizer_state(AdamOptimizer<T>& opt, const CheckpointData& d) {
    if (!d.has_optimizer) throw DataError("checkpoint carries no optimizer state");
    auto& st = opt.state();
    if (st.m.size() != d.opt_m.size()) throw DataError("checkpoint: optimizer state size mismatch");
    st.beta1 = d.beta1;
    st.beta2 = d.beta2;
    st.eps = d.eps;
    st.lr = d.lr;
    st.t = d.opt_t;
    for (size_t k = 0; k < st.m.size(); ++k) {
        st.m[k] = values_from_blob<T>(d.opt_m[k]);
        st.v[k] = values_from_blob<T>(d.opt_v[k]);
    }
}

} // namespace mtkd
