// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mtkd/adam.hpp"
#include "mtkd/gradcheck.hpp"
#include "mtkd/nn.hpp"
#include "mtkd/tensor.hpp"

using namespace mtkd;

namespace {

// Random values kept away from the kinks of relu/abs.
Tensor<double> randn_offkink(Shape s, Rng& rng) {
    Tensor<double> t(s);
    for (auto& v : t.values()) {
        double sign = rng.coin() ? 1.0 : -1.0;
        v = sign * (0.1 + 0.9 * rng.uniform());
    }
    return t;
}

constexpr double kGradTol = 1e-4;
constexpr int kGradSeeds = 20;

} // namespace

TEST_CASE("conv2d identity kernel reproduces the input") {
    Tensor<float> x = Tensor<float>::full({1, 4, 4, 1}, 1.0f);
    Tensor<float> w = Tensor<float>::zeros({3, 3, 1, 1});
    w.values()[4] = 1.0f; // center tap
    Tensor<float> b = Tensor<float>::zeros({1});
    Tensor<float> y = conv2d(x, w, b, Padding::Same);
    REQUIRE(y.shape() == x.shape());
    for (i64 i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(1.0f));
}

TEST_CASE("conv2d all-ones kernel counts the same-padded neighborhood") {
    Tensor<float> x = Tensor<float>::full({1, 3, 3, 1}, 1.0f);
    Tensor<float> w = Tensor<float>::full({3, 3, 1, 1}, 1.0f);
    Tensor<float> b = Tensor<float>::zeros({1});
    Tensor<float> y = conv2d(x, w, b, Padding::Same);
    CHECK(y.values()[4] == doctest::Approx(9.0f)); // center
    CHECK(y.values()[0] == doctest::Approx(4.0f)); // corners
    CHECK(y.values()[2] == doctest::Approx(4.0f));
    CHECK(y.values()[6] == doctest::Approx(4.0f));
    CHECK(y.values()[8] == doctest::Approx(4.0f));
    CHECK(y.values()[1] == doctest::Approx(6.0f)); // edges
}

TEST_CASE("conv2d channel mismatch raises a dimension error") {
    Tensor<float> x = Tensor<float>::zeros({1, 4, 4, 2});
    Tensor<float> w = Tensor<float>::zeros({3, 3, 3, 4});
    Tensor<float> b = Tensor<float>::zeros({4});
    CHECK_THROWS_AS(conv2d(x, w, b, Padding::Same), ShapeError);
}

TEST_CASE("pixel_unshuffle places sub-pixels in row-major order") {
    Tensor<float> x = Tensor<float>::from_values({1, 2, 2, 1}, {1.0f, 2.0f, 3.0f, 4.0f});
    Tensor<float> y = pixel_unshuffle(x, 2);
    REQUIRE(y.shape() == Shape{1, 1, 1, 4});
    CHECK(y.values() == std::vector<float>{1.0f, 2.0f, 3.0f, 4.0f});

    Tensor<float> back = pixel_shuffle(y, 2);
    CHECK(back.values() == x.values());
}

TEST_CASE("pixel_shuffle of (a,b,c,d) forms the 2x2 block") {
    Tensor<float> x = Tensor<float>::from_values({1, 1, 1, 4}, {9.0f, 8.0f, 7.0f, 6.0f});
    Tensor<float> y = pixel_shuffle(x, 2);
    REQUIRE(y.shape() == Shape{1, 2, 2, 1});
    CHECK(y.values() == std::vector<float>{9.0f, 8.0f, 7.0f, 6.0f});
}

TEST_CASE("pixel shuffle/unshuffle are bit-exact inverses for s in 1..4") {
    Rng rng(7);
    for (i64 s : {1, 2, 3, 4}) {
        Tensor<float> x = Tensor<float>::randn({2, 8 * s, 4 * s, 3}, rng);
        Tensor<float> rt = pixel_shuffle(pixel_unshuffle(x, s), s);
        CHECK(rt.values() == x.values());
        Tensor<float> x2 = Tensor<float>::randn({2, 4, 4, 3 * s * s}, rng);
        Tensor<float> rt2 = pixel_unshuffle(pixel_shuffle(x2, s), s);
        CHECK(rt2.values() == x2.values());
    }
    CHECK(pixel_unshuffle(Tensor<float>::zeros({1, 4, 4, 1}), 1).values() ==
          Tensor<float>::zeros({1, 4, 4, 1}).values());
}

TEST_CASE("pixel ops reject non-divisible shapes") {
    CHECK_THROWS_AS(pixel_unshuffle(Tensor<float>::zeros({1, 5, 4, 1}), 2), ShapeError);
    CHECK_THROWS_AS(pixel_shuffle(Tensor<float>::zeros({1, 4, 4, 6}), 2), ShapeError);
}

TEST_CASE("layer_norm hand examples") {
    Tensor<double> gamma = Tensor<double>::full({4}, 1.0);
    Tensor<double> beta = Tensor<double>::zeros({4});

    Tensor<double> constant = Tensor<double>::full({2, 4}, 3.25);
    Tensor<double> y = layer_norm(constant, gamma, beta, 1e-5);
    for (double v : y.values()) CHECK(v == doctest::Approx(0.0));

    Tensor<double> g2 = Tensor<double>::full({2}, 1.0);
    Tensor<double> b2 = Tensor<double>::zeros({2});
    Tensor<double> x = Tensor<double>::from_values({1, 2}, {1.0, 3.0});
    Tensor<double> z = layer_norm(x, g2, b2, 1e-12);
    CHECK(z.values()[0] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(z.values()[1] == doctest::Approx(1.0).epsilon(1e-6));

    Tensor<double> g0 = Tensor<double>::zeros({2});
    Tensor<double> b5 = Tensor<double>::full({2}, 5.0);
    Tensor<double> fives = layer_norm(x, g0, b5, 1e-5);
    for (double v : fives.values()) CHECK(v == doctest::Approx(5.0));

    CHECK_THROWS_AS(layer_norm(x, g2, b2, 0.0), NumericError);
    CHECK_THROWS_AS(layer_norm(x, g2, b2, -1.0), NumericError);
}

TEST_CASE("backward of sum gives all-ones gradient") {
    TapeScope<float> scope;
    Rng rng(1);
    Tensor<float> x = Tensor<float>::randn({3, 5}, rng);
    x.set_requires_grad(true);
    Tensor<float> loss = sum_all(x);
    backward(loss);
    for (float g : x.grad()) CHECK(g == doctest::Approx(1.0f));
}

TEST_CASE("backward of mean L1 is sign/numel with sign(0)=0") {
    TapeScope<double> scope;
    Tensor<double> x = Tensor<double>::from_values({4}, {1.0, -2.0, 0.5, 0.7});
    Tensor<double> y = Tensor<double>::from_values({4}, {0.0, 1.0, 0.9, 0.7});
    x.set_requires_grad(true);
    Tensor<double> loss = l1_mean(x, y);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(0.25));
    CHECK(x.grad()[1] == doctest::Approx(-0.25));
    CHECK(x.grad()[2] == doctest::Approx(-0.25));
    CHECK(x.grad()[3] == doctest::Approx(0.0)); // tied values
}

TEST_CASE("backward requires a scalar loss and accumulates across calls") {
    TapeScope<double> scope;
    Tensor<double> x = Tensor<double>::full({3}, 2.0);
    x.set_requires_grad(true);
    Tensor<double> vec = scale(x, 2.0);
    CHECK_THROWS_AS(backward(vec), ShapeError);

    Tensor<double> loss = sum_all(vec);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(4.0)); // second pass accumulates
}

TEST_CASE("tensors without requires_grad never accumulate gradient") {
    TapeScope<double> scope;
    Tensor<double> x = Tensor<double>::full({3}, 2.0);
    Tensor<double> y = Tensor<double>::full({3}, 1.0);
    x.set_requires_grad(true);
    Tensor<double> loss = sum_all(mul(x, y));
    backward(loss);
    CHECK(!y.requires_grad());
    CHECK_THROWS_AS((void)y.grad(), InternalError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Tensor<float> p = Tensor<float>::full({4}, 1.5f);
    p.set_requires_grad(true);
    AdamOptimizer<float> opt({p}, 0.1);
    opt.step();
    for (float v : p.values()) CHECK(v == doctest::Approx(1.5f));
}

TEST_CASE("adam: first bias-corrected step moves by about lr") {
    Tensor<double> p = Tensor<double>::zeros({1});
    p.set_requires_grad(true);
    AdamOptimizer<double> opt({p}, 0.1);
    p.grad()[0] = 1.0;
    opt.step();
    CHECK(p.values()[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("adam rejects parameters without a gradient slot") {
    Tensor<float> p = Tensor<float>::full({4}, 1.0f);
    CHECK_THROWS_AS(AdamOptimizer<float>({p}, 0.1), InternalError);
}

TEST_CASE("adam: identical runs are bit-identical after 100 steps") {
    auto run = [] {
        Rng rng(42);
        Tensor<float> p = Tensor<float>::randn({16}, rng);
        p.set_requires_grad(true);
        AdamOptimizer<float> opt({p}, 1e-3);
        for (int t = 0; t < 100; ++t) {
            for (size_t i = 0; i < p.grad().size(); ++i)
                p.grad()[i] = static_cast<float>(std::sin(0.1 * t + static_cast<double>(i)));
            opt.step();
            p.zero_grad();
        }
        return p.values();
    };
    CHECK(run() == run());
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(3);
    Tensor<float> x = Tensor<float>::randn({7, 9}, rng, 0.0, 4.0);
    Tensor<float> y = softmax_lastdim(x);
    for (i64 r = 0; r < 7; ++r) {
        float s = 0;
        for (i64 j = 0; j < 9; ++j) s += y.values()[static_cast<size_t>(r * 9 + j)];
        CHECK(std::abs(s - 1.0f) < 1e-6f);
    }
}

TEST_CASE("transpose_axes matches a hand example") {
    Tensor<float> x = Tensor<float>::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<float> y = transpose_axes(x, {1, 0});
    REQUIRE(y.shape() == Shape{3, 2});
    CHECK(y.values() == std::vector<float>{1, 4, 2, 5, 3, 6});
}

TEST_CASE("forward and gradients replay bit-identically for a fixed seed") {
    auto run = [] {
        Rng rng(11);
        TapeScope<float> scope;
        Tensor<float> x = Tensor<float>::randn({2, 6, 6, 3}, rng);
        Tensor<float> w = Tensor<float>::randn({3, 3, 3, 4}, rng, 0.0, 0.3);
        Tensor<float> b = Tensor<float>::randn({4}, rng);
        x.set_requires_grad(true);
        w.set_requires_grad(true);
        b.set_requires_grad(true);
        Tensor<float> y = relu(conv2d(x, w, b, Padding::Same));
        Tensor<float> loss = mean_all(y);
        backward(loss);
        std::vector<float> all = y.values();
        all.insert(all.end(), x.grad().begin(), x.grad().end());
        all.insert(all.end(), w.grad().begin(), w.grad().end());
        return all;
    };
    CHECK(run() == run());
}

// --------------------------------------------------------------------------
// Finite-difference checks, 64-bit, for every registered kernel.

TEST_CASE("gradcheck: elementwise and reduction ops") {
    for (int seed = 0; seed < kGradSeeds; ++seed) {
        Rng rng(1000 + seed);
        Tensor<double> a = randn_offkink({2, 3, 4}, rng);
        Tensor<double> b = randn_offkink({2, 3, 4}, rng);
        Tensor<double> wts = Tensor<double>::randn({2, 3, 4}, rng);
        Tensor<double> wts1 = Tensor<double>::randn({1}, rng);

        auto check2 = [&](const char* name, auto op) {
            double err = gradcheck_max_rel_err(
                [&](const std::vector<Tensor<double>>& in) { return weighted_sum(op(in[0], in[1]), wts); }, {a, b});
            INFO(name);
            CHECK(err < kGradTol);
        };
        check2("add", [](auto x, auto y) { return add(x, y); });
        check2("sub", [](auto x, auto y) { return sub(x, y); });
        check2("mul", [](auto x, auto y) { return mul(x, y); });

        auto check1 = [&](const char* name, auto op) {
            double err = gradcheck_max_rel_err(
                [&](const std::vector<Tensor<double>>& in) { return weighted_sum(op(in[0]), wts); }, {a});
            INFO(name);
            CHECK(err < kGradTol);
        };
        check1("scale", [](auto x) { return scale(x, -1.7); });
        check1("add_scalar", [](auto x) { return add_scalar(x, 0.4); });
        check1("relu", [](auto x) { return relu(x); });
        check1("gelu", [](auto x) { return gelu(x); });
        check1("sigmoid", [](auto x) { return sigmoid(x); });
        check1("softmax", [](auto x) { return softmax_lastdim(x); });

        double err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return l1_mean(in[0], in[1]); }, {a, b});
        CHECK(err < kGradTol);
        err = gradcheck_max_rel_err([&](const std::vector<Tensor<double>>& in) { return sum_all(in[0]); }, {a});
        CHECK(err < kGradTol);
        err = gradcheck_max_rel_err([&](const std::vector<Tensor<double>>& in) { return mean_all(in[0]); }, {a});
        CHECK(err < kGradTol);
        (void)wts1;
    }
}

TEST_CASE("gradcheck: bias, concat, slice, reshape, transpose, gather") {
    for (int seed = 0; seed < kGradSeeds; ++seed) {
        Rng rng(2000 + seed);
        Tensor<double> x = Tensor<double>::randn({2, 3, 4}, rng);
        Tensor<double> bias = Tensor<double>::randn({4}, rng);
        Tensor<double> w1 = Tensor<double>::randn({2, 3, 4}, rng);
        double err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(add_bias(in[0], in[1]), w1); },
            {x, bias});
        CHECK(err < kGradTol);

        Tensor<double> y = Tensor<double>::randn({2, 3, 2}, rng);
        Tensor<double> w2 = Tensor<double>::randn({2, 3, 6}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) {
                return weighted_sum(concat_lastdim<double>({in[0], in[1]}), w2);
            },
            {x, y});
        CHECK(err < kGradTol);

        Tensor<double> w3 = Tensor<double>::randn({2, 3, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(slice_lastdim(in[0], 1, 3), w3); }, {x});
        CHECK(err < kGradTol);

        Tensor<double> w4 = Tensor<double>::randn({24}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(reshape(in[0], {24}), w4); }, {x});
        CHECK(err < kGradTol);

        Tensor<double> w5 = Tensor<double>::randn({4, 2, 3}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(transpose_axes(in[0], {2, 0, 1}), w5); },
            {x});
        CHECK(err < kGradTol);
    }
}

TEST_CASE("gradcheck: matmul plain, batched and broadcast") {
    for (int seed = 0; seed < kGradSeeds; ++seed) {
        Rng rng(3000 + seed);
        Tensor<double> a = Tensor<double>::randn({3, 4}, rng);
        Tensor<double> b = Tensor<double>::randn({4, 2}, rng);
        Tensor<double> w = Tensor<double>::randn({3, 2}, rng);
        double err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(matmul(in[0], in[1]), w); }, {a, b});
        CHECK(err < kGradTol);

        Tensor<double> ab = Tensor<double>::randn({2, 3, 4}, rng);
        Tensor<double> bb = Tensor<double>::randn({2, 4, 2}, rng);
        Tensor<double> wb = Tensor<double>::randn({2, 3, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(matmul(in[0], in[1]), wb); }, {ab, bb});
        CHECK(err < kGradTol);

        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(matmul(in[0], in[1]), wb); }, {ab, b});
        CHECK(err < kGradTol);
    }
}

TEST_CASE("gradcheck: conv2d, pixel ops, layer_norm, spatial ops, padding") {
    for (int seed = 0; seed < kGradSeeds; ++seed) {
        Rng rng(4000 + seed);
        Tensor<double> x = Tensor<double>::randn({1, 4, 4, 2}, rng);
        Tensor<double> w = Tensor<double>::randn({3, 3, 2, 3}, rng, 0.0, 0.5);
        Tensor<double> b = Tensor<double>::randn({3}, rng);

        Tensor<double> wsame = Tensor<double>::randn({1, 4, 4, 3}, rng);
        double err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) {
                return weighted_sum(conv2d(in[0], in[1], in[2], Padding::Same), wsame);
            },
            {x, w, b});
        CHECK(err < kGradTol);

        Tensor<double> wvalid = Tensor<double>::randn({1, 2, 2, 3}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) {
                return weighted_sum(conv2d(in[0], in[1], in[2], Padding::Valid), wvalid);
            },
            {x, w, b});
        CHECK(err < kGradTol);

        Tensor<double> wu = Tensor<double>::randn({1, 2, 2, 8}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(pixel_unshuffle(in[0], 2), wu); }, {x});
        CHECK(err < kGradTol);

        Tensor<double> xc = Tensor<double>::randn({1, 2, 2, 8}, rng);
        Tensor<double> ws = Tensor<double>::randn({1, 4, 4, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(pixel_shuffle(in[0], 2), ws); }, {xc});
        CHECK(err < kGradTol);

        Tensor<double> gamma = Tensor<double>::randn({2}, rng);
        Tensor<double> beta = Tensor<double>::randn({2}, rng);
        Tensor<double> wln = Tensor<double>::randn({1, 4, 4, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) {
                return weighted_sum(layer_norm(in[0], in[1], in[2], 1e-5), wln);
            },
            {x, gamma, beta});
        CHECK(err < kGradTol);

        Tensor<double> wsm = Tensor<double>::randn({1, 1, 1, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(spatial_mean(in[0]), wsm); }, {x});
        CHECK(err < kGradTol);

        Tensor<double> gate = Tensor<double>::randn({1, 1, 1, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(mul_channel_gate(in[0], in[1]), wln); },
            {x, gate});
        CHECK(err < kGradTol);

        Tensor<double> wpad = Tensor<double>::randn({1, 7, 6, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) {
                return weighted_sum(pad_symmetric_hw(in[0], 1, 2, 1, 1), wpad);
            },
            {x});
        CHECK(err < kGradTol);

        Tensor<double> wcrop = Tensor<double>::randn({1, 2, 3, 2}, rng);
        err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return weighted_sum(crop_hw(in[0], 1, 0, 2, 3), wcrop); },
            {x});
        CHECK(err < kGradTol);
    }
}
