// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// The transform/gradient invariant suite behind the `selftest` subcommand
// and the corresponding acceptance checks: transform identities at both
// precisions, structural invariants, and central finite-difference gradient
// verification of every differentiable kernel at 64-bit.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mtkd/dctswin.hpp"
#include "mtkd/gradcheck.hpp"
#include "mtkd/losses.hpp"
#include "mtkd/networks.hpp"

namespace mtkd {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct SelfCheckOptions {
    int dct_windows = 1000; // random windows for the round-trip identities
    int grad_seeds = 20;    // seeds per gradient check
};

namespace selfcheck_detail {

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    double worst = 0.0;
    for (i64 i = 0; i < a.numel(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    return worst;
}

inline Tensor<double> offkink(Shape s, Rng& rng) {
    Tensor<double> t(std::move(s));
    for (auto& v : t.values()) v = (rng.coin() ? 1.0 : -1.0) * (0.1 + 0.9 * rng.uniform());
    return t;
}

inline CheckResult bound_check(const std::string& name, double worst, double bound) {
    CheckResult r;
    r.name = name;
    r.pass = worst < bound;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max_err=%.3g bound=%.3g", worst, bound);
    r.detail = buf;
    return r;
}

} // namespace selfcheck_detail

// Transform identities (round trips, Parseval, orthonormality), structural
// invariants (pixel shuffle, softmax, window round trips, zero-weight
// identity).
inline std::vector<CheckResult> run_transform_checks(const SelfCheckOptions& opt) {
    using namespace selfcheck_detail;
    std::vector<CheckResult> results;
    Rng rng(20260809);

    {
        double worst = 0.0;
        for (i64 w : {2, 4, 8, 16}) worst = std::max(worst, DctPlan<double>::make(w).orthonormality_error());
        results.push_back(bound_check("dct-basis-orthonormality", worst, 1e-12));
    }
    {
        auto plan = DctPlan<double>::make(8);
        Tensor<double> x = Tensor<double>::randn({opt.dct_windows, 8, 8, 3}, rng);
        results.push_back(bound_check("dct-roundtrip-f64", max_abs_diff(idct2d(dct2d(x, plan), plan), x), 1e-12));
        double energy_in = 0, energy_out = 0;
        Tensor<double> y = dct2d(x, plan);
        for (i64 i = 0; i < x.numel(); ++i) {
            energy_in += x.data()[i] * x.data()[i];
            energy_out += y.data()[i] * y.data()[i];
        }
        results.push_back(bound_check("dct-parseval", std::abs(energy_in - energy_out) / std::max(1.0, energy_in), 1e-6));
    }
    {
        auto plan = DctPlan<float>::make(8);
        Tensor<float> x = Tensor<float>::rand_uniform({opt.dct_windows, 8, 8, 3}, rng);
        results.push_back(bound_check("dct-roundtrip-f32", max_abs_diff(idct2d(dct2d(x, plan), plan), x), 1e-5));
    }
    {
        double worst = 0.0, eworst = 0.0;
        for (int k : {1, 2, 3}) {
            Tensor<float> x = Tensor<float>::rand_uniform({2, 16, 16, 3}, rng);
            SubbandPyramid<float> p = dwt2d(x, k);
            worst = std::max(worst, max_abs_diff(idwt2d(p), x));
            double ein = 0, eout = 0;
            for (i64 i = 0; i < x.numel(); ++i) ein += double(x.data()[i]) * double(x.data()[i]);
            for (const auto& [name, b] : p.ordered_bands())
                for (i64 i = 0; i < b.numel(); ++i) eout += double(b.data()[i]) * double(b.data()[i]);
            eworst = std::max(eworst, std::abs(ein - eout) / std::max(1.0, ein));
        }
        results.push_back(bound_check("dwt-perfect-reconstruction", worst, 1e-6));
        results.push_back(bound_check("dwt-parseval", eworst, 1e-6));
    }
    {
        bool ok = true;
        for (i64 s : {1, 2, 3, 4}) {
            Tensor<float> x = Tensor<float>::randn({2, 8 * s, 8 * s, 3}, rng);
            ok = ok && pixel_shuffle(pixel_unshuffle(x, s), s).values() == x.values();
        }
        results.push_back({"pixel-shuffle-roundtrip-bitexact", ok, ok ? "s in {1,2,3,4}" : "mismatch"});
    }
    {
        Tensor<float> x = Tensor<float>::randn({5, 9}, rng, 0.0, 5.0);
        Tensor<float> y = softmax_lastdim(x);
        double worst = 0.0;
        for (i64 r = 0; r < 5; ++r) {
            double s = 0;
            for (i64 j = 0; j < 9; ++j) s += y.values()[static_cast<size_t>(r * 9 + j)];
            worst = std::max(worst, std::abs(s - 1.0));
        }
        results.push_back(bound_check("softmax-rows-sum-to-one", worst, 1e-6));
    }
    {
        bool ok = true;
        for (i64 shift : {0, 4}) {
            WindowLayout layout(8, shift, 16, 24);
            Tensor<float> x = Tensor<float>::randn({2, 16, 24, 3}, rng);
            ok = ok && window_reverse(window_partition(x, layout), layout).values() == x.values();
        }
        results.push_back({"window-partition-roundtrip-bitexact", ok, ok ? "shift 0 and W_s/2" : "mismatch"});
    }
    {
        bool ok = true;
        auto plan = DctPlan<float>::make(2);
        Tensor<float> x = Tensor<float>::randn({2, 4, 4, 3}, rng);
        for (bool use_dct : {true, false})
            for (bool use_mlp : {true, false}) {
                auto params = DctstlParams<float>::make_zero(3, 2, 1, use_mlp);
                for (i64 shift : {0, 1}) {
                    WindowLayout layout(2, shift, 4, 4);
                    ok = ok && dctstl_forward(x, params, layout, plan, use_dct).values() == x.values();
                }
                std::vector<DctstlParams<float>> two(2, DctstlParams<float>::make_zero(3, 2, 1, use_mlp));
                ok = ok && dctswin_block_forward(x, two, 2, plan, use_dct).values() == x.values();
            }
        results.push_back({"zero-weight-identity-bitexact", ok, ok ? "layer and block, all variants" : "mismatch"});
    }
    return results;
}

// Finite-difference gradient verification of every registered kernel,
// including the transformer layer end to end and the subband loss.
inline std::vector<CheckResult> run_gradient_checks(const SelfCheckOptions& opt) {
    using namespace selfcheck_detail;
    std::vector<CheckResult> results;

    struct Item {
        const char* name;
        std::function<double(Rng&)> run; // returns max rel err for one seed
    };

    auto wsum = [](const Tensor<double>& x, Rng& rng) {
        Rng local = rng.fork("w");
        return Tensor<double>::randn(x.shape(), local);
    };

    std::vector<Item> items;
    auto add1 = [&](const char* name, auto make_inputs, auto apply) {
        items.push_back({name, [make_inputs, apply](Rng& rng) {
                             auto inputs = make_inputs(rng);
                             return gradcheck_max_rel_err(
                                 [&](const std::vector<Tensor<double>>& in) { return apply(in, rng); }, inputs);
                         }});
    };

    // elementwise / reductions
    add1("grad-add", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r), Tensor<double>::randn({2, 3, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(add(in[0], in[1]), wsum(in[0], rng)); });
    add1("grad-sub", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r), Tensor<double>::randn({2, 3, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(sub(in[0], in[1]), wsum(in[0], rng)); });
    add1("grad-mul", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r), Tensor<double>::randn({2, 3, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(mul(in[0], in[1]), wsum(in[0], rng)); });
    add1("grad-scale-add-scalar", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({3, 5}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(add_scalar(scale(in[0], -1.3), 0.4), wsum(in[0], rng)); });
    add1("grad-add-bias", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r), Tensor<double>::randn({4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(add_bias(in[0], in[1]), wsum(in[0], rng)); });
    add1("grad-relu", [](Rng& r) { return std::vector<Tensor<double>>{offkink({2, 3, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(relu(in[0]), wsum(in[0], rng)); });
    add1("grad-gelu", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(gelu(in[0]), wsum(in[0], rng)); });
    add1("grad-sigmoid", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(sigmoid(in[0]), wsum(in[0], rng)); });
    add1("grad-softmax", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({3, 6}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(softmax_lastdim(in[0]), wsum(in[0], rng)); });
    add1("grad-sum-mean", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({4, 5}, r)}; },
         [](const std::vector<Tensor<double>>& in, Rng&) { return add(sum_all(in[0]), mean_all(in[0])); });
    add1("grad-l1-mean", [](Rng& r) { return std::vector<Tensor<double>>{offkink({3, 4}, r), offkink({3, 4}, r)}; },
         [](const std::vector<Tensor<double>>& in, Rng&) { return l1_mean(in[0], in[1]); });
    add1("grad-matmul", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r), Tensor<double>::randn({4, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(matmul(in[0], in[1]), wsum(matmul(in[0], in[1]), rng)); });
    add1("grad-matmul-batched", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 4}, r), Tensor<double>::randn({2, 4, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) { return weighted_sum(matmul(in[0], in[1]), wsum(matmul(in[0], in[1]), rng)); });
    add1("grad-concat-slice-reshape-transpose",
         [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 3, 2}, r), Tensor<double>::randn({2, 3, 3}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> cat = concat_lastdim<double>({in[0], in[1]});
             Tensor<double> sl = slice_lastdim(cat, 1, 4);
             Tensor<double> tr = transpose_axes(reshape(sl, {2, 9}), {1, 0});
             return weighted_sum(tr, wsum(tr, rng));
         });
    add1("grad-conv2d-same", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 4, 4, 2}, r), Tensor<double>::randn({3, 3, 2, 3}, r, 0, 0.5), Tensor<double>::randn({3}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> y = conv2d(in[0], in[1], in[2], Padding::Same);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-conv2d-valid", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 5, 5, 2}, r), Tensor<double>::randn({3, 3, 2, 2}, r, 0, 0.5), Tensor<double>::randn({2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> y = conv2d(in[0], in[1], in[2], Padding::Valid);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-pixel-shuffle-pair", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 4, 4, 4}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> y = pixel_unshuffle(pixel_shuffle(in[0], 2), 2);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-layer-norm", [](Rng& r) { return std::vector<Tensor<double>>{randn_row_spread({2, 4, 4, 3}, r), Tensor<double>::randn({3}, r), Tensor<double>::randn({3}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> y = layer_norm(in[0], in[1], in[2], 1e-5);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-spatial-mean-gate", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 3, 3, 2}, r), Tensor<double>::randn({1, 1, 1, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> y = mul_channel_gate(in[0], add(spatial_mean(in[0]), in[1]));
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-pad-crop", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 4, 4, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             Tensor<double> y = crop_hw(pad_symmetric_hw(in[0], 1, 2, 2, 1), 0, 1, 5, 5);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-dct2d-idct2d", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({2, 4, 4, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             auto plan = DctPlan<double>::make(4);
             Tensor<double> y = idct2d(mul(dct2d(in[0], plan), in[0]), plan);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-dwt-idwt", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 8, 8, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             SubbandPyramid<double> p = dwt2d(in[0], 2);
             Tensor<double> y = idwt2d(p);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-window-partition-reverse", [](Rng& r) { return std::vector<Tensor<double>>{Tensor<double>::randn({1, 4, 4, 2}, r)}; },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             WindowLayout layout(2, 1, 4, 4);
             Tensor<double> y = window_reverse(mul(window_partition(in[0], layout), window_partition(in[0], layout)), layout);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-w-msa", [](Rng& r) {
             auto p = DctstlParams<double>::make(2, 2, 1, r, true, 0.4);
             return std::vector<Tensor<double>>{Tensor<double>::randn({2, 4, 2}, r), p.qkv_w, p.qkv_b, p.proj_w, p.proj_b, p.rel_bias};
         },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             DctstlParams<double> p;
             p.channels = 2; p.window = 2; p.heads = 1; p.use_mlp = false;
             p.qkv_w = in[1]; p.qkv_b = in[2]; p.proj_w = in[3]; p.proj_b = in[4]; p.rel_bias = in[5];
             WindowLayout layout(2, 1, 4, 2);
             AttentionMask<double> mask = AttentionMask<double>::make(layout);
             Tensor<double> y = w_msa(in[0], p, mask);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-dctstl-end-to-end", [](Rng& r) {
             auto p = DctstlParams<double>::make(2, 2, 1, r, true, 0.4);
             std::vector<Tensor<double>> v{randn_row_spread({1, 4, 4, 2}, r)};
             for (auto& t : p.tensors()) v.push_back(t);
             return v;
         },
         [wsum](const std::vector<Tensor<double>>& in, Rng& rng) {
             DctstlParams<double> p;
             p.channels = 2; p.window = 2; p.heads = 1; p.use_mlp = true;
             p.ln1_gamma = in[1]; p.ln1_beta = in[2]; p.qkv_w = in[3]; p.qkv_b = in[4];
             p.proj_w = in[5]; p.proj_b = in[6]; p.rel_bias = in[7]; p.ln2_gamma = in[8]; p.ln2_beta = in[9];
             p.mlp_w1 = in[10]; p.mlp_b1 = in[11]; p.mlp_w2 = in[12]; p.mlp_b2 = in[13];
             auto plan = DctPlan<double>::make(2);
             WindowLayout layout(2, 1, 4, 4);
             Tensor<double> y = dctstl_forward(in[0], p, layout, plan);
             return weighted_sum(y, wsum(y, rng));
         });
    add1("grad-loss-dis", [](Rng& r) { return std::vector<Tensor<double>>{offkink({1, 4, 4, 2}, r), offkink({1, 4, 4, 2}, r)}; },
         [](const std::vector<Tensor<double>>& in, Rng&) { return loss_dis(in[0], in[1], 1).total; });
    add1("grad-loss-dis-detail", [](Rng& r) { return std::vector<Tensor<double>>{offkink({1, 4, 4, 2}, r), offkink({1, 4, 4, 2}, r)}; },
         [](const std::vector<Tensor<double>>& in, Rng&) { return loss_dis_detail_only(in[0], in[1], 1).total; });
    add1("grad-loss-total", [](Rng& r) { return std::vector<Tensor<double>>{offkink({1, 4, 4, 2}, r), offkink({1, 4, 4, 2}, r), offkink({1, 4, 4, 2}, r)}; },
         [](const std::vector<Tensor<double>>& in, Rng&) { return loss_total(in[0], in[1], in[2], 0.1, 1).total; });
    add1("grad-loss-dct-domain", [](Rng& r) { return std::vector<Tensor<double>>{offkink({1, 4, 4, 2}, r), offkink({1, 4, 4, 2}, r)}; },
         [](const std::vector<Tensor<double>>& in, Rng&) {
             auto plan = DctPlan<double>::make(2);
             return loss_dct_domain(in[0], in[1], plan);
         });

    for (const auto& item : items) {
        double worst = 0.0;
        for (int seed = 0; seed < opt.grad_seeds; ++seed) {
            Rng rng(90000 + 37 * seed);
            worst = std::max(worst, item.run(rng));
        }
        results.push_back(selfcheck_detail::bound_check(item.name, worst, 1e-4));
    }
    return results;
}

inline std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& opt) {
    std::vector<CheckResult> all = run_transform_checks(opt);
    auto grads = run_gradient_checks(opt);
    all.insert(all.end(), grads.begin(), grads.end());
    return all;
}

} // namespace mtkd
