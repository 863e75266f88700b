// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtkd/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace mtkd {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'K', 'D', 'C', 'K', 'P', '1'};

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_i64(std::ostream& os, i64 v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_u8(std::ostream& os, std::uint8_t v) { os.write(reinterpret_cast<const char*>(&v), 1); }

void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_blob(std::ostream& os, const NamedBlob& b) {
    put_string(os, b.name);
    put_u8(os, static_cast<std::uint8_t>(b.dtype));
    put_u8(os, static_cast<std::uint8_t>(b.shape.size()));
    for (i64 d : b.shape) put_i64(os, d);
    put_u64(os, b.bytes.size());
    os.write(reinterpret_cast<const char*>(b.bytes.data()), static_cast<std::streamsize>(b.bytes.size()));
}

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open checkpoint " + p);
    }

    void read_raw(void* dst, size_t n) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!in) throw DataError("truncated checkpoint " + path);
    }

    std::uint32_t u32() {
        std::uint32_t v;
        read_raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        read_raw(&v, 8);
        return v;
    }
    i64 si64() {
        i64 v;
        read_raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        read_raw(&v, 8);
        return v;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        read_raw(&v, 1);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        std::string s(n, '\0');
        if (n) read_raw(s.data(), n);
        return s;
    }
    NamedBlob blob() {
        NamedBlob b;
        b.name = str();
        std::uint8_t dt = u8();
        if (dt > 1) throw DataError("checkpoint " + path + ": unknown dtype tag");
        b.dtype = static_cast<BlobDtype>(dt);
        std::uint8_t nd = u8();
        for (int i = 0; i < nd; ++i) b.shape.push_back(si64());
        std::uint64_t n = u64();
        size_t elem = b.dtype == BlobDtype::F32 ? 4 : 8;
        if (n != static_cast<std::uint64_t>(shape_numel(b.shape)) * elem)
            throw DataError("checkpoint " + path + ": blob size does not match its shape");
        b.bytes.resize(n);
        if (n) read_raw(b.bytes.data(), n);
        return b;
    }
};

} // namespace

void save_checkpoint(const std::string& path, const CheckpointData& data) {
    namespace fs = std::filesystem;
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write checkpoint " + path);
        os.write(kMagic, 8);
        put_u32(os, data.version);
        put_string(os, data.kind);
        put_string(os, data.config_text);
        put_u32(os, static_cast<std::uint32_t>(data.tensors.size()));
        for (const auto& b : data.tensors) put_blob(os, b);
        put_u8(os, data.has_optimizer ? 1 : 0);
        if (data.has_optimizer) {
            put_f64(os, data.beta1);
            put_f64(os, data.beta2);
            put_f64(os, data.eps);
            put_f64(os, data.lr);
            put_i64(os, data.opt_t);
            for (const auto& b : data.opt_m) put_blob(os, b);
            for (const auto& b : data.opt_v) put_blob(os, b);
        }
        put_i64(os, data.iteration);
        put_u64(os, data.rng_state);
        put_u64(os, data.rng_inc);
        if (!os) throw DataError("write failure on checkpoint " + path);
    }
    fs::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.read_raw(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw DataError(path + " is not a checkpoint file");
    CheckpointData d;
    d.version = r.u32();
    if (d.version != 1) throw DataError("checkpoint " + path + ": unsupported version " + std::to_string(d.version));
    d.kind = r.str();
    d.config_text = r.str();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) d.tensors.push_back(r.blob());
    d.has_optimizer = r.u8() != 0;
    if (d.has_optimizer) {
        d.beta1 = r.f64();
        d.beta2 = r.f64();
        d.eps = r.f64();
        d.lr = r.f64();
        d.opt_t = r.si64();
        for (std::uint32_t i = 0; i < n; ++i) d.opt_m.push_back(r.blob());
        for (std::uint32_t i = 0; i < n; ++i) d.opt_v.push_back(r.blob());
    }
    d.iteration = r.si64();
    d.rng_state = r.u64();
    d.rng_inc = r.u64();
    return d;
}

} // namespace mtkd
