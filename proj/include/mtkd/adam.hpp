// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mtkd/tensor.hpp"

namespace mtkd {

template <class T>
struct AdamState {
    std::vector<std::vector<T>> m; // first moment, one buffer per parameter
    std::vector<std::vector<T>> v; // second moment
    i64 t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lr = 1e-4;
};

// Bias-corrected Adam over a fixed, ordered parameter list. Deterministic:
// the update loop order is the registration order.
template <class T>
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor<T>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : params_(std::move(params)) {
        state_.lr = lr;
        state_.beta1 = beta1;
        state_.beta2 = beta2;
        state_.eps = eps;
        for (const auto& p : params_) {
            if (!p.requires_grad())
                throw InternalError("AdamOptimizer: parameter without gradient slot registered");
            state_.m.emplace_back(static_cast<size_t>(p.numel()), T(0));
            state_.v.emplace_back(static_cast<size_t>(p.numel()), T(0));
        }
    }

    void set_lr(double lr) { state_.lr = lr; }
    double lr() const { return state_.lr; }
    i64 step_count() const { return state_.t; }
    AdamState<T>& state() { return state_; }
    const std::vector<Tensor<T>>& params() const { return params_; }

    void step() {
        state_.t += 1;
        T b1 = static_cast<T>(state_.beta1);
        T b2 = static_cast<T>(state_.beta2);
        T eps = static_cast<T>(state_.eps);
        T lr = static_cast<T>(state_.lr);
        T corr1 = T(1) - static_cast<T>(std::pow(state_.beta1, static_cast<double>(state_.t)));
        T corr2 = T(1) - static_cast<T>(std::pow(state_.beta2, static_cast<double>(state_.t)));
        for (size_t k = 0; k < params_.size(); ++k) {
            Tensor<T>& p = params_[k];
            if (!p.requires_grad() || p.grad().size() != p.values().size())
                throw InternalError("AdamOptimizer: missing gradient for parameter " + std::to_string(k));
            const std::vector<T>& g = p.grad();
            std::vector<T>& m = state_.m[k];
            std::vector<T>& v = state_.v[k];
            T* pv = p.data();
            for (size_t i = 0; i < g.size(); ++i) {
                m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                T mhat = m[i] / corr1;
                T vhat = v[i] / corr2;
                pv[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

private:
    std::vector<Tensor<T>> params_;
    AdamState<T> state_;
};

// Ordered named parameter set backing one network; the ordering is the
// serialization and optimizer-state order.
template <class T>
class ParamStore {
public:
    Tensor<T> add(const std::string& name, Tensor<T> t) {
        for (const auto& [n, _] : items_)
            if (n == name) throw InternalError("ParamStore: duplicate parameter name " + name);
        t.set_requires_grad(true);
        items_.emplace_back(name, t);
        return t;
    }

    Tensor<T> get(const std::string& name) const {
        for (const auto& [n, t] : items_)
            if (n == name) return t;
        throw InternalError("ParamStore: unknown parameter " + name);
    }

    std::vector<Tensor<T>> tensors() const {
        std::vector<Tensor<T>> out;
        for (const auto& [_, t] : items_) out.push_back(t);
        return out;
    }

    const std::vector<std::pair<std::string, Tensor<T>>>& items() const { return items_; }

    i64 total_elements() const {
        i64 n = 0;
        for (const auto& [_, t] : items_) n += t.numel();
        return n;
    }

    void set_trainable(bool on) {
        for (auto& [_, t] : items_) t.set_requires_grad(on);
    }

    bool trainable() const {
        for (const auto& [_, t] : items_)
            if (!t.requires_grad()) return false;
        return !items_.empty();
    }

    void zero_grad() {
        for (auto& [_, t] : items_) t.zero_grad();
    }

private:
    std::vector<std::pair<std::string, Tensor<T>>> items_;
};

} // namespace mtkd
