// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense NHWC-friendly tensors with reverse-mode autodiff on a linear tape.
// Ops record a backward closure onto the thread-local active tape; backward
// replays the tape in strict reverse creation order. Everything is
// single-threaded and bit-deterministic for a fixed seed.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mtkd/errors.hpp"
#include "mtkd/rng.hpp"

namespace mtkd {

using i64 = std::int64_t;
using Shape = std::vector<i64>;

inline i64 shape_numel(const Shape& s) {
    i64 n = 1;
    for (i64 d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

namespace detail {
template <class T>
struct TensorImpl {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad; // allocated iff requires_grad
    bool requires_grad = false;
};
} // namespace detail

template <class T>
class Tensor {
    static_assert(std::is_floating_point_v<T>, "Tensor element type must be float or double");

public:
    Tensor() = default;

    explicit Tensor(Shape shape) {
        for (i64 d : shape)
            if (d <= 0) throw ShapeError("Tensor: non-positive dimension in " + shape_str(shape));
        impl_ = std::make_shared<detail::TensorImpl<T>>();
        impl_->shape = std::move(shape);
        impl_->values.assign(static_cast<size_t>(shape_numel(impl_->shape)), T(0));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, T v) {
        Tensor t(std::move(shape));
        std::fill(t.impl_->values.begin(), t.impl_->values.end(), v);
        return t;
    }

    static Tensor from_values(Shape shape, std::vector<T> values) {
        Tensor t;
        t.impl_ = std::make_shared<detail::TensorImpl<T>>();
        if (shape_numel(shape) != static_cast<i64>(values.size()))
            throw ShapeError("Tensor: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
        t.impl_->shape = std::move(shape);
        t.impl_->values = std::move(values);
        return t;
    }

    static Tensor randn(Shape shape, Rng& rng, double mean = 0.0, double stddev = 1.0) {
        Tensor t(std::move(shape));
        for (auto& v : t.impl_->values) v = static_cast<T>(rng.normal(mean, stddev));
        return t;
    }

    static Tensor rand_uniform(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
        Tensor t(std::move(shape));
        for (auto& v : t.impl_->values) v = static_cast<T>(lo + (hi - lo) * rng.uniform());
        return t;
    }

    bool valid() const { return impl_ != nullptr; }
    const Shape& shape() const { return check().shape; }
    i64 ndim() const { return static_cast<i64>(check().shape.size()); }
    i64 numel() const { return static_cast<i64>(check().values.size()); }

    // dim(-1) is the last axis.
    i64 dim(i64 i) const {
        const Shape& s = check().shape;
        i64 n = static_cast<i64>(s.size());
        if (i < 0) i += n;
        if (i < 0 || i >= n) throw ShapeError("Tensor::dim: axis out of range");
        return s[static_cast<size_t>(i)];
    }

    const std::vector<T>& values() const { return check().values; }
    std::vector<T>& values() { return check().values; }
    const T* data() const { return check().values.data(); }
    T* data() { return check().values.data(); }

    T item() const {
        if (numel() != 1) throw ShapeError("Tensor::item: tensor of shape " + shape_str(shape()) + " is not scalar");
        return check().values[0];
    }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }

    void set_requires_grad(bool on) {
        auto& im = check();
        im.requires_grad = on;
        if (on)
            im.grad.assign(im.values.size(), T(0));
        else
            im.grad.clear();
    }

    void enable_grad() {
        auto& im = check();
        if (!im.requires_grad) {
            im.requires_grad = true;
            im.grad.assign(im.values.size(), T(0));
        }
    }

    std::vector<T>& grad() {
        auto& im = check();
        if (!im.requires_grad) throw InternalError("Tensor::grad: tensor does not require grad");
        return im.grad;
    }

    const std::vector<T>& grad() const {
        const auto& im = check();
        if (!im.requires_grad) throw InternalError("Tensor::grad: tensor does not require grad");
        return im.grad;
    }

    void zero_grad() {
        auto& im = check();
        if (im.requires_grad) std::fill(im.grad.begin(), im.grad.end(), T(0));
    }

    // Deep copy of values; grads are not copied.
    Tensor clone() const {
        Tensor t;
        t.impl_ = std::make_shared<detail::TensorImpl<T>>();
        t.impl_->shape = check().shape;
        t.impl_->values = check().values;
        return t;
    }

    bool same_storage(const Tensor& o) const { return impl_ == o.impl_; }

private:
    detail::TensorImpl<T>& check() {
        if (!impl_) throw InternalError("use of empty tensor handle");
        return *impl_;
    }
    const detail::TensorImpl<T>& check() const {
        if (!impl_) throw InternalError("use of empty tensor handle");
        return *impl_;
    }

    std::shared_ptr<detail::TensorImpl<T>> impl_;
};

// ---------------------------------------------------------------------------
// Tape

template <class T>
class Tape {
public:
    struct Node {
        const char* op;
        std::function<void()> backward;
    };

    void record(const char* op, std::function<void()> backward) {
        nodes_.push_back(Node{op, std::move(backward)});
    }

    // Op outputs are non-leaf tensors: their grads are transient per backward
    // pass, while leaf grads accumulate across passes.
    void note_output(const Tensor<T>& t) { produced_.push_back(t); }

    void zero_transient() {
        for (auto& t : produced_) t.zero_grad();
    }

    void replay() {
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    }

    size_t size() const { return nodes_.size(); }
    void clear() {
        nodes_.clear();
        produced_.clear();
    }

    static Tape<T>*& active() {
        thread_local Tape<T>* t = nullptr;
        return t;
    }

private:
    std::vector<Node> nodes_;
    std::vector<Tensor<T>> produced_;
};

// Activates a fresh tape for the lifetime of the scope.
template <class T>
struct TapeScope {
    Tape<T> tape;
    Tape<T>* prev;
    TapeScope() : prev(Tape<T>::active()) { Tape<T>::active() = &tape; }
    ~TapeScope() { Tape<T>::active() = prev; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;
};

// Disables recording for the lifetime of the scope (inference paths).
template <class T>
struct NoGradScope {
    Tape<T>* prev;
    NoGradScope() : prev(Tape<T>::active()) { Tape<T>::active() = nullptr; }
    ~NoGradScope() { Tape<T>::active() = prev; }
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;
};

namespace detail {

template <class T>
Tape<T>* recording_tape(std::initializer_list<const Tensor<T>*> inputs) {
    Tape<T>* t = Tape<T>::active();
    if (!t) return nullptr;
    for (const Tensor<T>* p : inputs)
        if (p->valid() && p->requires_grad()) return t;
    return nullptr;
}

} // namespace detail

// Extension point: marks `out` as produced from `inputs` and registers the
// backward closure if any input requires grad and a tape is active. Modules
// outside the tensor engine (transforms, attention) register their linear ops
// through this.
template <class T>
void record_op(const char* name, std::initializer_list<const Tensor<T>*> inputs, Tensor<T>& out,
               std::function<void()> backward) {
    if (Tape<T>* t = detail::recording_tape<T>(inputs)) {
        out.enable_grad();
        t->note_output(out);
        t->record(name, std::move(backward));
    }
}

// Seeds d(loss)/d(loss) = 1 and replays the active tape in reverse creation
// order. Repeated calls without clearing accumulate gradients.
template <class T>
void backward(Tensor<T>& loss) {
    if (loss.numel() != 1)
        throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    if (!loss.requires_grad())
        throw InternalError("backward: loss is not connected to any recorded op");
    Tape<T>* t = Tape<T>::active();
    if (!t) throw InternalError("backward: no active tape");
    t->zero_transient();
    loss.grad()[0] += T(1);
    t->replay();
}

// ---------------------------------------------------------------------------
// Eigen helpers (row-major maps over tensor storage)

namespace detail {
template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using CMatMap = Eigen::Map<const RowMat<T>>;

template <class T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}
} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape("add", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    i64 n = out.numel();
    for (i64 i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    record_op<T>("add", {&a, &b}, out, [a = a, b = b, out]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
    return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape("sub", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    i64 n = out.numel();
    for (i64 i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
    record_op<T>("sub", {&a, &b}, out, [a = a, b = b, out]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
    return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape("mul", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    i64 n = out.numel();
    for (i64 i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    record_op<T>("mul", {&a, &b}, out, [a = a, b = b, out]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            const T* pb2 = b.data();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb2[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            const T* pa2 = a.data();
            for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa2[i];
        }
    });
    return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, double c) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    i64 n = out.numel();
    T tc = static_cast<T>(c);
    for (i64 i = 0; i < n; ++i) po[i] = px[i] * tc;
    record_op<T>("scale", {&x}, out, [x = x, out, tc]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * tc;
    });
    return out;
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& x, double c) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    i64 n = out.numel();
    T tc = static_cast<T>(c);
    for (i64 i = 0; i < n; ++i) po[i] = px[i] + tc;
    record_op<T>("add_scalar", {&x}, out, [x = x, out]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return out;
}

// bias shape must equal the trailing axes of x; broadcast over the rest.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
    const Shape& xs = x.shape();
    const Shape& bs = bias.shape();
    if (bs.size() > xs.size())
        throw ShapeError("add_bias: bias rank exceeds input rank");
    for (size_t i = 0; i < bs.size(); ++i) {
        size_t xi = xs.size() - bs.size() + i;
        if (bs[i] != xs[xi])
            throw ShapeError("add_bias: bias axis " + std::to_string(i) + " (" + std::to_string(bs[i]) +
                             ") != input axis " + std::to_string(xi) + " (" + std::to_string(xs[xi]) + ")");
    }
    Tensor<T> out(xs);
    i64 bn = bias.numel();
    i64 n = x.numel();
    const T* px = x.data();
    const T* pb = bias.data();
    T* po = out.data();
    for (i64 i = 0; i < n; ++i) po[i] = px[i] + pb[i % bn];
    record_op<T>("add_bias", {&x, &bias}, out, [x = x, bias = bias, out, bn]() mutable {
        const auto& g = out.grad();
        if (x.requires_grad()) {
            auto& gx = x.grad();
            for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (bias.requires_grad()) {
            auto& gb = bias.grad();
            for (size_t i = 0; i < g.size(); ++i) gb[static_cast<size_t>(i % bn)] += g[i];
        }
    });
    return out;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    i64 n = out.numel();
    for (i64 i = 0; i < n; ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
    record_op<T>("relu", {&x}, out, [x = x, out]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        const T* px2 = x.data();
        for (size_t i = 0; i < g.size(); ++i)
            if (px2[i] > T(0)) gx[i] += g[i];
    });
    return out;
}

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    i64 n = out.numel();
    const T inv_sqrt2 = static_cast<T>(0.7071067811865475244);
    for (i64 i = 0; i < n; ++i) po[i] = T(0.5) * px[i] * (T(1) + std::erf(px[i] * inv_sqrt2));
    record_op<T>("gelu", {&x}, out, [x = x, out]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        const T* px2 = x.data();
        const T inv_sqrt2 = static_cast<T>(0.7071067811865475244);
        const T inv_sqrt2pi = static_cast<T>(0.3989422804014327);
        for (size_t i = 0; i < g.size(); ++i) {
            T v = px2[i];
            T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
            T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
            gx[i] += g[i] * (cdf + v * pdf);
        }
    });
    return out;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    i64 n = out.numel();
    for (i64 i = 0; i < n; ++i) po[i] = T(1) / (T(1) + std::exp(-px[i]));
    record_op<T>("sigmoid", {&x}, out, [x = x, out]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        const T* po2 = out.data();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * po2[i] * (T(1) - po2[i]);
    });
    return out;
}

// ---------------------------------------------------------------------------
// matmul: a is [..., M, K]; b is [K, N] (broadcast) or [..., K, N] with the
// same leading axes as a.

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() < 2 || b.ndim() < 2) throw ShapeError("matmul: operands must have rank >= 2");
    i64 M = a.dim(-2), K = a.dim(-1);
    bool b_broadcast = (b.ndim() == 2);
    if (!b_broadcast) {
        if (b.ndim() != a.ndim())
            throw ShapeError("matmul: rank mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
        for (i64 i = 0; i < a.ndim() - 2; ++i)
            if (a.dim(i) != b.dim(i))
                throw ShapeError("matmul: batch axis " + std::to_string(i) + " mismatch " + shape_str(a.shape()) +
                                 " vs " + shape_str(b.shape()));
    }
    if (b.dim(-2) != K)
        throw ShapeError("matmul: inner dims " + std::to_string(K) + " vs " + std::to_string(b.dim(-2)));
    i64 N = b.dim(-1);
    i64 batch = a.numel() / (M * K);

    Shape out_shape(a.shape().begin(), a.shape().end() - 2);
    out_shape.push_back(M);
    out_shape.push_back(N);
    Tensor<T> out(out_shape);

    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    for (i64 i = 0; i < batch; ++i) {
        detail::CMatMap<T> ma(pa + i * M * K, M, K);
        detail::CMatMap<T> mb(pb + (b_broadcast ? 0 : i * K * N), K, N);
        detail::MatMap<T> mo(po + i * M * N, M, N);
        mo.noalias() = ma * mb;
    }
    record_op<T>("matmul", {&a, &b}, out, [a = a, b = b, out, M, K, N, batch, b_broadcast]() mutable {
        const T* pg = out.grad().data();
        if (a.requires_grad()) {
            T* pga = a.grad().data();
            const T* pb2 = b.data();
            for (i64 i = 0; i < batch; ++i) {
                detail::CMatMap<T> mg(pg + i * M * N, M, N);
                detail::CMatMap<T> mb(pb2 + (b_broadcast ? 0 : i * K * N), K, N);
                detail::MatMap<T> mga(pga + i * M * K, M, K);
                mga.noalias() += mg * mb.transpose();
            }
        }
        if (b.requires_grad()) {
            T* pgb = b.grad().data();
            const T* pa2 = a.data();
            for (i64 i = 0; i < batch; ++i) {
                detail::CMatMap<T> mg(pg + i * M * N, M, N);
                detail::CMatMap<T> ma(pa2 + i * M * K, M, K);
                detail::MatMap<T> mgb(pgb + (b_broadcast ? 0 : i * K * N), K, N);
                mgb.noalias() += ma.transpose() * mg;
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// softmax over the last axis

template <class T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
    i64 D = x.dim(-1);
    i64 rows = x.numel() / D;
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    for (i64 r = 0; r < rows; ++r) {
        const T* row = px + r * D;
        T* orow = po + r * D;
        T mx = row[0];
        for (i64 j = 1; j < D; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (i64 j = 0; j < D; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        T inv = T(1) / sum;
        for (i64 j = 0; j < D; ++j) orow[j] *= inv;
    }
    record_op<T>("softmax", {&x}, out, [x = x, out, D, rows]() mutable {
        const T* pg = out.grad().data();
        const T* py = out.data();
        T* pgx = x.grad().data();
        for (i64 r = 0; r < rows; ++r) {
            const T* g = pg + r * D;
            const T* y = py + r * D;
            T* gx = pgx + r * D;
            T dot = T(0);
            for (i64 j = 0; j < D; ++j) dot += g[j] * y[j];
            for (i64 j = 0; j < D; ++j) gx[j] += y[j] * (g[j] - dot);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// concat along the last (channel) axis

template <class T>
Tensor<T> concat_lastdim(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_lastdim: empty input list");
    Shape lead(parts[0].shape().begin(), parts[0].shape().end() - 1);
    i64 total = 0;
    for (const auto& p : parts) {
        Shape pl(p.shape().begin(), p.shape().end() - 1);
        if (pl != lead)
            throw ShapeError("concat_lastdim: leading axes mismatch " + shape_str(parts[0].shape()) + " vs " +
                             shape_str(p.shape()));
        total += p.dim(-1);
    }
    Shape os = lead;
    os.push_back(total);
    Tensor<T> out(os);
    i64 rows = out.numel() / total;
    T* po = out.data();
    i64 off = 0;
    for (const auto& p : parts) {
        i64 d = p.dim(-1);
        const T* pp = p.data();
        for (i64 r = 0; r < rows; ++r)
            for (i64 j = 0; j < d; ++j) po[r * total + off + j] = pp[r * d + j];
        off += d;
    }
    std::vector<const Tensor<T>*> ptrs;
    for (const auto& p : parts) ptrs.push_back(&p);
    Tape<T>* tape = Tape<T>::active();
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (tape && any) {
        out.enable_grad();
        tape->note_output(out);
        auto parts_copy = parts;
        tape->record("concat", [parts_copy, out, rows, total]() mutable {
            const T* pg = out.grad().data();
            i64 off2 = 0;
            for (auto& p : parts_copy) {
                i64 d = p.dim(-1);
                if (p.requires_grad()) {
                    T* gp = p.grad().data();
                    for (i64 r = 0; r < rows; ++r)
                        for (i64 j = 0; j < d; ++j) gp[r * d + j] += pg[r * total + off2 + j];
                }
                off2 += d;
            }
        });
    }
    return out;
}

// Contiguous slice over the last axis: out[..., j] = x[..., from + j].
template <class T>
Tensor<T> slice_lastdim(const Tensor<T>& x, i64 from, i64 to) {
    i64 D = x.dim(-1);
    if (from < 0 || to <= from || to > D)
        throw ShapeError("slice_lastdim: range [" + std::to_string(from) + "," + std::to_string(to) +
                         ") invalid for axis size " + std::to_string(D));
    Shape os = x.shape();
    os.back() = to - from;
    Tensor<T> out(os);
    i64 d = to - from;
    i64 rows = x.numel() / D;
    const T* px = x.data();
    T* po = out.data();
    for (i64 r = 0; r < rows; ++r)
        for (i64 j = 0; j < d; ++j) po[r * d + j] = px[r * D + from + j];
    record_op<T>("slice", {&x}, out, [x = x, out, from, D, d, rows]() mutable {
        const T* pg = out.grad().data();
        T* gx = x.grad().data();
        for (i64 r = 0; r < rows; ++r)
            for (i64 j = 0; j < d; ++j) gx[r * D + from + j] += pg[r * d + j];
    });
    return out;
}

// ---------------------------------------------------------------------------
// reductions

template <class T>
Tensor<T> sum_all(const Tensor<T>& x) {
    Tensor<T> out(Shape{1});
    const T* px = x.data();
    T s = T(0);
    i64 n = x.numel();
    for (i64 i = 0; i < n; ++i) s += px[i];
    out.data()[0] = s;
    record_op<T>("sum_all", {&x}, out, [x = x, out]() mutable {
        T g = out.grad()[0];
        auto& gx = x.grad();
        for (auto& v : gx) v += g;
    });
    return out;
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
    Tensor<T> out(Shape{1});
    const T* px = x.data();
    T s = T(0);
    i64 n = x.numel();
    for (i64 i = 0; i < n; ++i) s += px[i];
    out.data()[0] = s / static_cast<T>(n);
    record_op<T>("mean_all", {&x}, out, [x = x, out, n]() mutable {
        T g = out.grad()[0] / static_cast<T>(n);
        auto& gx = x.grad();
        for (auto& v : gx) v += g;
    });
    return out;
}

// Elementwise-mean L1 distance. Subgradient at 0 is defined as 0.
template <class T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_same_shape("l1_mean", a, b);
    Tensor<T> out(Shape{1});
    const T* pa = a.data();
    const T* pb = b.data();
    i64 n = a.numel();
    T s = T(0);
    for (i64 i = 0; i < n; ++i) s += std::abs(pa[i] - pb[i]);
    out.data()[0] = s / static_cast<T>(n);
    record_op<T>("l1_mean", {&a, &b}, out, [a = a, b = b, out, n]() mutable {
        T g = out.grad()[0] / static_cast<T>(n);
        const T* pa2 = a.data();
        const T* pb2 = b.data();
        for (i64 i = 0; i < n; ++i) {
            T d = pa2[i] - pb2[i];
            T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
            if (a.requires_grad()) a.grad()[static_cast<size_t>(i)] += g * sgn;
            if (b.requires_grad()) b.grad()[static_cast<size_t>(i)] -= g * sgn;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// layout ops

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel())
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
    Tensor<T> out = Tensor<T>::from_values(std::move(new_shape), x.values());
    record_op<T>("reshape", {&x}, out, [x = x, out]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return out;
}

// out element i reads x element map[i]; backward scatter-adds. The map is
// shared so layouts can cache it across calls.
template <class T>
Tensor<T> gather_linear(const Tensor<T>& x, std::shared_ptr<const std::vector<i64>> map, Shape out_shape,
                        const char* opname = "gather") {
    if (static_cast<i64>(map->size()) != shape_numel(out_shape))
        throw InternalError("gather_linear: map size does not match output shape");
    Tensor<T> out(out_shape);
    const T* px = x.data();
    T* po = out.data();
    const i64* pm = map->data();
    i64 n = out.numel();
    for (i64 i = 0; i < n; ++i) po[i] = px[pm[i]];
    record_op<T>(opname, {&x}, out, [x = x, out, map]() mutable {
        const auto& g = out.grad();
        auto& gx = x.grad();
        const i64* pm2 = map->data();
        for (size_t i = 0; i < g.size(); ++i) gx[static_cast<size_t>(pm2[i])] += g[i];
    });
    return out;
}

// numpy-style transpose: out axis i is input axis perm[i].
template <class T>
Tensor<T> transpose_axes(const Tensor<T>& x, const std::vector<int>& perm) {
    i64 nd = x.ndim();
    if (static_cast<i64>(perm.size()) != nd) throw ShapeError("transpose_axes: perm rank mismatch");
    std::vector<bool> seen(static_cast<size_t>(nd), false);
    for (int p : perm) {
        if (p < 0 || p >= nd || seen[static_cast<size_t>(p)]) throw ShapeError("transpose_axes: invalid permutation");
        seen[static_cast<size_t>(p)] = true;
    }
    Shape os(static_cast<size_t>(nd));
    for (i64 i = 0; i < nd; ++i) os[static_cast<size_t>(i)] = x.dim(perm[static_cast<size_t>(i)]);

    std::vector<i64> in_strides(static_cast<size_t>(nd), 1);
    for (i64 i = nd - 2; i >= 0; --i)
        in_strides[static_cast<size_t>(i)] = in_strides[static_cast<size_t>(i + 1)] * x.dim(i + 1);

    auto map = std::make_shared<std::vector<i64>>(static_cast<size_t>(x.numel()));
    std::vector<i64> idx(static_cast<size_t>(nd), 0);
    i64 n = x.numel();
    for (i64 lin = 0; lin < n; ++lin) {
        i64 src = 0;
        for (i64 i = 0; i < nd; ++i) src += idx[static_cast<size_t>(i)] * in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        (*map)[static_cast<size_t>(lin)] = src;
        for (i64 i = nd - 1; i >= 0; --i) {
            if (++idx[static_cast<size_t>(i)] < os[static_cast<size_t>(i)]) break;
            idx[static_cast<size_t>(i)] = 0;
        }
    }
    return gather_linear(x, map, os, "transpose");
}

} // namespace mtkd
