// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// The super-resolution model zoo: three small but architecturally distinct
// teacher families, the compact student, and the multi-teacher aggregation
// network. All models map [N,H,W,3] -> [N,sH,sW,3] in NHWC with values in
// the unit range.

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mtkd/adam.hpp"
#include "mtkd/dctswin.hpp"
#include "mtkd/nn.hpp"

namespace mtkd {

enum class ModelKind { TeacherCnnA, TeacherCnnB, TeacherWindowed, Student, Aggregator };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::TeacherCnnA: return "teacher-cnn-a";
        case ModelKind::TeacherCnnB: return "teacher-cnn-b";
        case ModelKind::TeacherWindowed: return "teacher-windowed";
        case ModelKind::Student: return "student";
        case ModelKind::Aggregator: return "aggregator";
    }
    return "?";
}

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "teacher-cnn-a") return ModelKind::TeacherCnnA;
    if (s == "teacher-cnn-b") return ModelKind::TeacherCnnB;
    if (s == "teacher-windowed") return ModelKind::TeacherWindowed;
    if (s == "student") return ModelKind::Student;
    if (s == "aggregator") return ModelKind::Aggregator;
    throw DataError("unknown model kind '" + s + "'");
}

inline bool is_teacher_kind(ModelKind k) {
    return k == ModelKind::TeacherCnnA || k == ModelKind::TeacherCnnB || k == ModelKind::TeacherWindowed;
}

using HyperMap = std::map<std::string, std::string>;

namespace detail {

inline i64 hyper_get(const HyperMap& h, const std::string& key, i64 fallback) {
    auto it = h.find(key);
    return it == h.end() ? fallback : std::stoll(it->second);
}

template <class T>
Tensor<T> conv_weight(ParamStore<T>& store, const std::string& name, i64 kh, i64 kw, i64 cin, i64 cout, Rng& rng) {
    double stddev = std::sqrt(2.0 / static_cast<double>(kh * kw * cin));
    return store.add(name + ".w", Tensor<T>::randn({kh, kw, cin, cout}, rng, 0.0, stddev));
}

template <class T>
Tensor<T> conv_bias(ParamStore<T>& store, const std::string& name, i64 cout) {
    return store.add(name + ".b", Tensor<T>::zeros({cout}));
}

template <class T>
void register_layer_params(ParamStore<T>& store, const std::string& prefix, DctstlParams<T>& p) {
    store.add(prefix + ".ln1_g", p.ln1_gamma);
    store.add(prefix + ".ln1_b", p.ln1_beta);
    store.add(prefix + ".qkv_w", p.qkv_w);
    store.add(prefix + ".qkv_b", p.qkv_b);
    store.add(prefix + ".proj_w", p.proj_w);
    store.add(prefix + ".proj_b", p.proj_b);
    store.add(prefix + ".rel_bias", p.rel_bias);
    if (p.use_mlp) {
        store.add(prefix + ".ln2_g", p.ln2_gamma);
        store.add(prefix + ".ln2_b", p.ln2_beta);
        store.add(prefix + ".mlp_w1", p.mlp_w1);
        store.add(prefix + ".mlp_b1", p.mlp_b1);
        store.add(prefix + ".mlp_w2", p.mlp_w2);
        store.add(prefix + ".mlp_b2", p.mlp_b2);
    }
}

} // namespace detail

// Common surface for single-input super-resolution networks.
template <class T>
class SrNet {
public:
    virtual ~SrNet() = default;
    virtual Tensor<T> forward(const Tensor<T>& lr) = 0;
    virtual ModelKind kind() const = 0;
    virtual HyperMap hyper() const = 0;

    i64 scale() const { return scale_; }
    ParamStore<T>& params() { return store_; }
    const ParamStore<T>& params() const { return store_; }
    bool frozen() const { return frozen_; }

    void freeze() {
        frozen_ = true;
        store_.set_trainable(false);
    }

    std::vector<Tensor<T>> trainable_params() {
        if (frozen_) throw InternalError(std::string(model_kind_name(kind())) + " is frozen; its parameters must not be optimized");
        return store_.tensors();
    }

protected:
    explicit SrNet(i64 scale) : scale_(scale) {
        if (scale < 1) throw ConfigError("model scale must be positive");
    }

    void check_input(const Tensor<T>& lr) const {
        if (lr.ndim() != 4 || lr.dim(3) != 3)
            throw ShapeError(std::string(model_kind_name(kind())) + ": input must be [N,H,W,3], got " +
                             shape_str(lr.shape()));
    }

    i64 scale_;
    ParamStore<T> store_;
    bool frozen_ = false;
};

// Plain residual CNN: head conv, R (conv-ReLU-conv + skip) blocks, global
// skip, sub-pixel upsample. Used for the compact student and teacher A.
template <class T>
class ResidualSrNet : public SrNet<T> {
public:
    ResidualSrNet(ModelKind kind, i64 scale, i64 width, i64 blocks, Rng rng)
        : SrNet<T>(scale), kind_(kind), width_(width), blocks_(blocks) {
        auto& st = this->store_;
        head_w_ = detail::conv_weight(st, "head", 3, 3, 3, width, rng);
        head_b_ = detail::conv_bias(st, "head", width);
        for (i64 b = 0; b < blocks; ++b) {
            std::string p = "block" + std::to_string(b);
            body_.push_back({detail::conv_weight(st, p + ".c1", 3, 3, width, width, rng),
                             detail::conv_bias(st, p + ".c1", width),
                             detail::conv_weight(st, p + ".c2", 3, 3, width, width, rng),
                             detail::conv_bias(st, p + ".c2", width)});
        }
        up_w_ = detail::conv_weight(st, "up", 3, 3, width, 3 * scale * scale, rng);
        up_b_ = detail::conv_bias(st, "up", 3 * scale * scale);
    }

    Tensor<T> forward(const Tensor<T>& lr) override {
        this->check_input(lr);
        Tensor<T> h = conv2d(lr, head_w_, head_b_, Padding::Same);
        Tensor<T> x = h;
        for (const auto& blk : body_) {
            Tensor<T> t = conv2d(relu(conv2d(x, blk.w1, blk.b1, Padding::Same)), blk.w2, blk.b2, Padding::Same);
            x = add(x, t);
        }
        Tensor<T> fused = add(h, x); // global skip
        return pixel_shuffle(conv2d(fused, up_w_, up_b_, Padding::Same), this->scale_);
    }

    ModelKind kind() const override { return kind_; }
    HyperMap hyper() const override {
        return {{"width", std::to_string(width_)}, {"blocks", std::to_string(blocks_)}};
    }

private:
    struct Block {
        Tensor<T> w1, b1, w2, b2;
    };
    ModelKind kind_;
    i64 width_, blocks_;
    Tensor<T> head_w_, head_b_, up_w_, up_b_;
    std::vector<Block> body_;
};

// Residual CNN with squeeze-excite channel attention in each block
// (teacher B).
template <class T>
class ChannelAttnSrNet : public SrNet<T> {
public:
    ChannelAttnSrNet(i64 scale, i64 width, i64 blocks, Rng rng)
        : SrNet<T>(scale), width_(width), blocks_(blocks) {
        auto& st = this->store_;
        i64 hidden = std::max<i64>(width / 4, 4);
        head_w_ = detail::conv_weight(st, "head", 3, 3, 3, width, rng);
        head_b_ = detail::conv_bias(st, "head", width);
        for (i64 b = 0; b < blocks; ++b) {
            std::string p = "block" + std::to_string(b);
            body_.push_back({detail::conv_weight(st, p + ".c1", 3, 3, width, width, rng),
                             detail::conv_bias(st, p + ".c1", width),
                             detail::conv_weight(st, p + ".c2", 3, 3, width, width, rng),
                             detail::conv_bias(st, p + ".c2", width),
                             detail::conv_weight(st, p + ".se1", 1, 1, width, hidden, rng),
                             detail::conv_bias(st, p + ".se1", hidden),
                             detail::conv_weight(st, p + ".se2", 1, 1, hidden, width, rng),
                             detail::conv_bias(st, p + ".se2", width)});
        }
        up_w_ = detail::conv_weight(st, "up", 3, 3, width, 3 * scale * scale, rng);
        up_b_ = detail::conv_bias(st, "up", 3 * scale * scale);
    }

    Tensor<T> forward(const Tensor<T>& lr) override {
        this->check_input(lr);
        Tensor<T> h = conv2d(lr, head_w_, head_b_, Padding::Same);
        Tensor<T> x = h;
        for (const auto& blk : body_) {
            Tensor<T> t = conv2d(relu(conv2d(x, blk.w1, blk.b1, Padding::Same)), blk.w2, blk.b2, Padding::Same);
            Tensor<T> pooled = spatial_mean(t);
            Tensor<T> gate =
                sigmoid(conv2d(relu(conv2d(pooled, blk.se1w, blk.se1b, Padding::Same)), blk.se2w, blk.se2b,
                               Padding::Same));
            x = add(x, mul_channel_gate(t, gate));
        }
        Tensor<T> fused = add(h, x);
        return pixel_shuffle(conv2d(fused, up_w_, up_b_, Padding::Same), this->scale_);
    }

    ModelKind kind() const override { return ModelKind::TeacherCnnB; }
    HyperMap hyper() const override {
        return {{"width", std::to_string(width_)}, {"blocks", std::to_string(blocks_)}};
    }

private:
    struct Block {
        Tensor<T> w1, b1, w2, b2, se1w, se1b, se2w, se2b;
    };
    i64 width_, blocks_;
    Tensor<T> head_w_, head_b_, up_w_, up_b_;
    std::vector<Block> body_;
};

// Small windowed-attention network (teacher C): plain shifted-window layers
// at LR resolution, without the DCT pair. Pads its input symmetrically to a
// window multiple and crops the result back.
template <class T>
class WindowedSrNet : public SrNet<T> {
public:
    WindowedSrNet(i64 scale, i64 channels, i64 layers, i64 window, Rng rng)
        : SrNet<T>(scale), channels_(channels), layers_n_(layers), window_(window) {
        auto& st = this->store_;
        int heads = DctstlParams<T>::default_heads(channels);
        head_w_ = detail::conv_weight(st, "head", 3, 3, 3, channels, rng);
        head_b_ = detail::conv_bias(st, "head", channels);
        for (i64 l = 0; l < layers; ++l) {
            layers_.push_back(DctstlParams<T>::make(channels, window, heads, rng));
            detail::register_layer_params(st, "layer" + std::to_string(l), layers_.back());
        }
        fuse_w_ = detail::conv_weight(st, "fuse", 3, 3, channels, channels, rng);
        fuse_b_ = detail::conv_bias(st, "fuse", channels);
        up_w_ = detail::conv_weight(st, "up", 3, 3, channels, 3 * scale * scale, rng);
        up_b_ = detail::conv_bias(st, "up", 3 * scale * scale);
    }

    Tensor<T> forward(const Tensor<T>& lr) override {
        this->check_input(lr);
        i64 H = lr.dim(1), W = lr.dim(2);
        i64 ph = (window_ - H % window_) % window_;
        i64 pw = (window_ - W % window_) % window_;
        Tensor<T> x = (ph || pw) ? pad_symmetric_hw(lr, 0, ph, 0, pw) : lr;

        Tensor<T> h = conv2d(x, head_w_, head_b_, Padding::Same);
        Tensor<T> body = dctswin_block_forward(h, layers_, window_, DctPlan<T>{}, /*use_dct=*/false);
        Tensor<T> fused = add(h, conv2d(body, fuse_w_, fuse_b_, Padding::Same));
        Tensor<T> up = pixel_shuffle(conv2d(fused, up_w_, up_b_, Padding::Same), this->scale_);
        if (ph || pw) up = crop_hw(up, 0, 0, H * this->scale_, W * this->scale_);
        return up;
    }

    ModelKind kind() const override { return ModelKind::TeacherWindowed; }
    HyperMap hyper() const override {
        return {{"channels", std::to_string(channels_)},
                {"layers", std::to_string(layers_n_)},
                {"window", std::to_string(window_)}};
    }

private:
    i64 channels_, layers_n_, window_;
    Tensor<T> head_w_, head_b_, fuse_w_, fuse_b_, up_w_, up_b_;
    std::vector<DctstlParams<T>> layers_;
};

// ---------------------------------------------------------------------------
// Aggregation network

struct AggregatorConfig {
    i64 teachers = 1;
    i64 scale = 2;
    i64 channels = 24;
    i64 blocks = 4;
    i64 layers = 2;
    i64 window = 8;
    bool use_dct = true;
    bool use_mlp = true;

    void validate() const {
        if (teachers < 1) throw ConfigError("aggregator: teacher count must be >= 1");
        if (scale < 1) throw ConfigError("aggregator: scale must be >= 1");
        if (channels < 1 || blocks < 1 || layers < 1 || window < 1)
            throw ConfigError("aggregator: channels/blocks/layers/window must be positive");
    }
};

// Fuses N teacher outputs into one enhanced image: channel concat, pixel
// unshuffle by the scale, shallow conv, B windowed-attention blocks over DCT
// coefficients, feature fusion with a residual to the shallow features, and
// a sub-pixel upsample back to full resolution.
template <class T>
class Aggregator : public SrNet<T> {
public:
    Aggregator(const AggregatorConfig& cfg, Rng rng) : SrNet<T>(cfg.scale), cfg_(cfg), plan_(DctPlan<T>::make(cfg.window)) {
        cfg.validate();
        auto& st = this->store_;
        int heads = DctstlParams<T>::default_heads(cfg.channels);
        i64 in_ch = 3 * cfg.teachers * cfg.scale * cfg.scale;
        shallow_w_ = detail::conv_weight(st, "shallow", 3, 3, in_ch, cfg.channels, rng);
        shallow_b_ = detail::conv_bias(st, "shallow", cfg.channels);
        for (i64 b = 0; b < cfg.blocks; ++b) {
            std::vector<DctstlParams<T>> layers;
            for (i64 l = 0; l < cfg.layers; ++l) {
                layers.push_back(DctstlParams<T>::make(cfg.channels, cfg.window, heads, rng, cfg.use_mlp));
                detail::register_layer_params(st, "block" + std::to_string(b) + ".layer" + std::to_string(l),
                                              layers.back());
            }
            blocks_.push_back(std::move(layers));
        }
        fuse_w_ = detail::conv_weight(st, "fuse", 3, 3, cfg.channels, cfg.channels, rng);
        fuse_b_ = detail::conv_bias(st, "fuse", cfg.channels);
        expand_w_ = detail::conv_weight(st, "expand", 3, 3, cfg.channels, cfg.channels * cfg.scale * cfg.scale, rng);
        expand_b_ = detail::conv_bias(st, "expand", cfg.channels * cfg.scale * cfg.scale);
        out_w_ = detail::conv_weight(st, "out", 3, 3, cfg.channels, 3, rng);
        out_b_ = detail::conv_bias(st, "out", 3);
    }

    // teacher_outputs: N tensors of identical shape [N_b, sH, sW, 3].
    Tensor<T> aggregate(const std::vector<Tensor<T>>& teacher_outputs) {
        if (static_cast<i64>(teacher_outputs.size()) != cfg_.teachers)
            throw ShapeError("aggregator: got " + std::to_string(teacher_outputs.size()) + " teacher outputs, expected " +
                             std::to_string(cfg_.teachers));
        for (const auto& t : teacher_outputs) {
            if (t.ndim() != 4 || t.dim(3) != 3 || t.shape() != teacher_outputs[0].shape()) {
                std::string shapes;
                for (const auto& u : teacher_outputs) shapes += shape_str(u.shape()) + " ";
                throw ShapeError("aggregator: mismatched teacher output shapes: " + shapes);
            }
        }
        i64 sH = teacher_outputs[0].dim(1), sW = teacher_outputs[0].dim(2);
        i64 mult = cfg_.scale * cfg_.window;
        i64 ph = (mult - sH % mult) % mult;
        i64 pw = (mult - sW % mult) % mult;

        Tensor<T> cat = concat_lastdim(teacher_outputs);
        if (ph || pw) cat = pad_symmetric_hw(cat, 0, ph, 0, pw);

        Tensor<T> shallow = conv2d(pixel_unshuffle(cat, cfg_.scale), shallow_w_, shallow_b_, Padding::Same);
        Tensor<T> x = shallow;
        for (const auto& layers : blocks_) x = dctswin_block_forward(x, layers, cfg_.window, plan_, cfg_.use_dct);
        Tensor<T> deep = conv2d(x, fuse_w_, fuse_b_, Padding::Same);
        Tensor<T> fused = add(shallow, deep);
        Tensor<T> up = pixel_shuffle(conv2d(fused, expand_w_, expand_b_, Padding::Same), cfg_.scale);
        Tensor<T> out = conv2d(up, out_w_, out_b_, Padding::Same);
        if (ph || pw) out = crop_hw(out, 0, 0, sH, sW);
        return out;
    }

    // SrNet surface for the single-teacher case.
    Tensor<T> forward(const Tensor<T>& teacher_output) override { return aggregate({teacher_output}); }

    ModelKind kind() const override { return ModelKind::Aggregator; }
    const AggregatorConfig& config() const { return cfg_; }

    HyperMap hyper() const override {
        return {{"teachers", std::to_string(cfg_.teachers)}, {"channels", std::to_string(cfg_.channels)},
                {"blocks", std::to_string(cfg_.blocks)},     {"layers", std::to_string(cfg_.layers)},
                {"window", std::to_string(cfg_.window)},     {"use_dct", cfg_.use_dct ? "1" : "0"},
                {"use_mlp", cfg_.use_mlp ? "1" : "0"}};
    }

private:
    AggregatorConfig cfg_;
    DctPlan<T> plan_;
    Tensor<T> shallow_w_, shallow_b_, fuse_w_, fuse_b_, expand_w_, expand_b_, out_w_, out_b_;
    std::vector<std::vector<DctstlParams<T>>> blocks_;
};

// Desk-scale architecture defaults per model kind.
template <class T>
std::unique_ptr<SrNet<T>> make_model(ModelKind kind, i64 scale, const HyperMap& hyper, std::uint64_t seed) {
    Rng rng = Rng(seed).fork(std::string("init/") + model_kind_name(kind));
    using detail::hyper_get;
    switch (kind) {
        case ModelKind::Student:
            return std::make_unique<ResidualSrNet<T>>(ModelKind::Student, scale, hyper_get(hyper, "width", 16),
                                                      hyper_get(hyper, "blocks", 4), rng);
        case ModelKind::TeacherCnnA:
            return std::make_unique<ResidualSrNet<T>>(ModelKind::TeacherCnnA, scale, hyper_get(hyper, "width", 32),
                                                      hyper_get(hyper, "blocks", 4), rng);
        case ModelKind::TeacherCnnB:
            return std::make_unique<ChannelAttnSrNet<T>>(scale, hyper_get(hyper, "width", 24),
                                                         hyper_get(hyper, "blocks", 3), rng);
        case ModelKind::TeacherWindowed:
            return std::make_unique<WindowedSrNet<T>>(scale, hyper_get(hyper, "channels", 16),
                                                      hyper_get(hyper, "layers", 2), hyper_get(hyper, "window", 8),
                                                      rng);
        case ModelKind::Aggregator: {
            AggregatorConfig cfg;
            cfg.scale = scale;
            cfg.teachers = hyper_get(hyper, "teachers", 1);
            cfg.channels = hyper_get(hyper, "channels", 24);
            cfg.blocks = hyper_get(hyper, "blocks", 4);
            cfg.layers = hyper_get(hyper, "layers", 2);
            cfg.window = hyper_get(hyper, "window", 8);
            cfg.use_dct = hyper_get(hyper, "use_dct", 1) != 0;
            cfg.use_mlp = hyper_get(hyper, "use_mlp", 1) != 0;
            return std::make_unique<Aggregator<T>>(cfg, rng);
        }
    }
    throw InternalError("make_model: unhandled kind");
}

} // namespace mtkd
