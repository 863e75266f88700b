// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mtkd/gradcheck.hpp"
#include "mtkd/losses.hpp"
#include "mtkd/metrics.hpp"
#include "oracles.hpp"

using namespace mtkd;

TEST_CASE("loss_ka and loss_stu: trivial values and the naive reference") {
    Rng rng(1);
    Tensor<float> x = Tensor<float>::rand_uniform({1, 4, 4, 3}, rng);
    CHECK(loss_ka(x, x).item() == 0.0f);
    CHECK(loss_stu(x, x).item() == 0.0f);

    Tensor<float> zeros = Tensor<float>::zeros({1, 4, 4, 3});
    Tensor<float> ones = Tensor<float>::full({1, 4, 4, 3}, 1.0f);
    CHECK(loss_ka(zeros, ones).item() == doctest::Approx(1.0f));

    Tensor<float> a = Tensor<float>::rand_uniform({2, 6, 6, 3}, rng);
    Tensor<float> b = Tensor<float>::rand_uniform({2, 6, 6, 3}, rng);
    CHECK(std::abs(static_cast<double>(loss_ka(a, b).item()) - oracles::naive_l1_mean(a, b)) < 1e-7);
    CHECK(std::abs(static_cast<double>(loss_stu(a, b).item()) - oracles::naive_l1_mean(a, b)) < 1e-7);

    CHECK_THROWS_AS(loss_ka(zeros, Tensor<float>::zeros({1, 4, 4, 1})), ShapeError);
}

TEST_CASE("loss_dis evaluates exactly 3K+1 zero terms on identical inputs") {
    Rng rng(2);
    for (int k : {1, 2, 3}) {
        Tensor<double> x = Tensor<double>::rand_uniform({1, 16, 16, 3}, rng);
        SubbandLoss<double> l = loss_dis(x, x, k);
        CHECK(static_cast<int>(l.subbands.size()) == 3 * k + 1);
        CHECK(l.total.item() == 0.0);
        for (const auto& [name, v] : l.subbands) CHECK(v == 0.0);
    }
}

TEST_CASE("loss_dis matches the hand-computed 2x2 Haar example exactly") {
    Tensor<double> ones = Tensor<double>::full({1, 2, 2, 1}, 1.0);
    Tensor<double> zeros = Tensor<double>::zeros({1, 2, 2, 1});
    SubbandLoss<double> l = loss_dis(ones, zeros, 1);
    CHECK(l.total.item() == 0.5); // LL term |2-0| = 2, three zero detail terms, /4
    int nonzero = 0;
    for (const auto& [name, v] : l.subbands) {
        if (v != 0.0) {
            ++nonzero;
            CHECK(name == "LL1");
            CHECK(v == 2.0);
        }
    }
    CHECK(nonzero == 1);
}

TEST_CASE("loss_dis is symmetric and sees a constant offset as delta/2 at K=1") {
    Rng rng(3);
    Tensor<double> a = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    Tensor<double> b = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    CHECK(loss_dis(a, b, 2).total.item() == doctest::Approx(loss_dis(b, a, 2).total.item()).epsilon(1e-12));

    double delta = 0.3;
    Tensor<double> shifted = add_scalar(a, delta);
    CHECK(loss_dis(a, shifted, 1).total.item() == doctest::Approx(delta / 2.0).epsilon(1e-9));
}

TEST_CASE("loss_dis requires 2^K divisibility") {
    Tensor<float> x = Tensor<float>::zeros({1, 6, 6, 1});
    CHECK_THROWS_AS(loss_dis(x, x, 2), ShapeError);
}

TEST_CASE("loss_dis gradient matches finite differences") {
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(100 + seed);
        Tensor<double> target = Tensor<double>::randn({1, 4, 4, 2}, rng);
        double err = gradcheck_max_rel_err(
            [&](const std::vector<Tensor<double>>& in) { return loss_dis(in[0], target, 1).total; },
            {Tensor<double>::randn({1, 4, 4, 2}, rng)});
        CHECK(err < 1e-4);
    }
}

TEST_CASE("loss_dis_detail_only ignores constant offsets") {
    Rng rng(4);
    Tensor<double> a = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    Tensor<double> shifted = add_scalar(a, 0.25);
    SubbandLoss<double> l = loss_dis_detail_only(a, shifted, 1);
    CHECK(l.total.item() == doctest::Approx(0.0));
    CHECK(static_cast<int>(l.subbands.size()) == 3);
}

TEST_CASE("loss_dct_domain is zero on identical inputs and positive otherwise") {
    Rng rng(5);
    auto plan = DctPlan<double>::make(4);
    Tensor<double> a = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    Tensor<double> b = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    CHECK(loss_dct_domain(a, a, plan).item() == doctest::Approx(0.0));
    CHECK(loss_dct_domain(a, b, plan).item() > 0.0);
    CHECK_THROWS_AS(loss_dct_domain(Tensor<double>::zeros({1, 6, 6, 3}),
                                    Tensor<double>::zeros({1, 6, 6, 3}), plan),
                    ShapeError);
}

TEST_CASE("loss_total composes alpha * L_stu + L_dis with a faithful report") {
    Rng rng(6);
    Tensor<double> stu = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    Tensor<double> gt = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    Tensor<double> mt = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);

    TotalLoss<double> zero = loss_total(stu, stu, stu, 0.1, 1);
    CHECK(zero.total.item() == doctest::Approx(0.0));

    TotalLoss<double> nostu = loss_total(stu, gt, mt, 0.0, 1);
    CHECK(nostu.total.item() == doctest::Approx(loss_dis(stu, mt, 1).total.item()).epsilon(1e-12));
    CHECK(nostu.report.components.at("L_stu") > 0.0); // still reported

    TotalLoss<double> t = loss_total(stu, gt, mt, 0.1, 1);
    double recomposed = 0.1 * t.report.components.at("L_stu") + t.report.components.at("L_dis");
    CHECK(std::abs(t.report.total - recomposed) < 1e-6);
    for (const auto& [name, v] : t.report.components) {
        INFO(name);
        CHECK(v >= 0.0);
    }
    CHECK_THROWS_AS(loss_total(stu, gt, mt, -0.5, 1), ConfigError);
}

TEST_CASE("psnr: identity, one-level error, full-range error") {
    std::vector<double> ref(64 * 64), test(64 * 64);
    for (size_t i = 0; i < ref.size(); ++i) ref[i] = static_cast<double>((i * 7) % 256);
    CHECK(std::isinf(psnr_planes({ref}, {ref}, 64, 64, 0)));

    for (size_t i = 0; i < ref.size(); ++i) test[i] = ref[i] + 1.0; // MSE exactly 1
    CHECK(psnr_planes({ref}, {test}, 64, 64, 0) == doctest::Approx(48.1308).epsilon(1e-3 / 48.0));

    std::vector<double> black(64 * 64, 0.0), white(64 * 64, 255.0);
    CHECK(psnr_planes({black}, {white}, 64, 64, 0) == doctest::Approx(0.0));
}

TEST_CASE("psnr decreases strictly along a noise ladder") {
    Rng rng(7);
    std::vector<double> ref(32 * 32);
    for (auto& v : ref) v = 255.0 * rng.uniform();
    double prev = std::numeric_limits<double>::infinity();
    for (double amp : {2.0, 4.0, 8.0, 16.0, 32.0}) {
        std::vector<double> noisy(ref.size());
        Rng noise(8);
        for (size_t i = 0; i < ref.size(); ++i) noisy[i] = ref[i] + amp * (2.0 * noise.uniform() - 1.0);
        double p = psnr_planes({ref}, {noisy}, 32, 32, 0);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("psnr matches the naive reference and respects the crop") {
    Rng rng(8);
    std::vector<double> a(40 * 40), b(40 * 40);
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = 255.0 * rng.uniform();
        b[i] = 255.0 * rng.uniform();
    }
    CHECK(psnr_planes({a}, {b}, 40, 40, 0) == doctest::Approx(oracles::naive_psnr(a, b)).epsilon(1e-9));
    CHECK_THROWS_AS(psnr_planes({a}, {std::vector<double>(100)}, 40, 40, 0), ShapeError);
}

TEST_CASE("ssim: self-similarity is exactly one") {
    Rng rng(9);
    std::vector<double> x(32 * 32);
    for (auto& v : x) v = 255.0 * rng.uniform();
    CHECK(std::abs(ssim_planes({x}, {x}, 32, 32, 0) - 1.0) < 1e-9);
}

TEST_CASE("ssim of two constants reduces to the luminance term") {
    double mu_x = 70.0, mu_y = 130.0;
    std::vector<double> x(24 * 24, mu_x), y(24 * 24, mu_y);
    double c1 = 6.5025;
    double expect = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1);
    CHECK(ssim_planes({x}, {y}, 24, 24, 0) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("ssim matches the naive sliding-window reference on 20 random pairs") {
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(500 + seed);
        i64 h = 20, w = 24;
        std::vector<double> a(static_cast<size_t>(h * w)), b(a.size());
        for (size_t i = 0; i < a.size(); ++i) {
            a[i] = 255.0 * rng.uniform();
            b[i] = std::min(255.0, std::max(0.0, a[i] + 40.0 * (rng.uniform() - 0.5)));
        }
        CHECK(std::abs(ssim_planes({a}, {b}, h, w, 0) - oracles::naive_ssim(a, b, h, w)) < 1e-6);
    }
}

TEST_CASE("ssim rejects images smaller than its window") {
    std::vector<double> tiny(8 * 8, 1.0);
    CHECK_THROWS_AS(ssim_planes({tiny}, {tiny}, 8, 8, 0), ShapeError);
}

TEST_CASE("compute_metrics handles tensors, modes and the +inf sentinel") {
    Rng rng(10);
    Tensor<float> img = Tensor<float>::rand_uniform({1, 16, 16, 3}, rng);
    MetricResult self = compute_metrics(img, img, 0, ChannelMode::Luma, 2);
    CHECK(std::isinf(self.psnr));
    CHECK(self.ssim == doctest::Approx(1.0));
    CHECK(format_metric(self.psnr) == "inf");

    Tensor<float> other = Tensor<float>::rand_uniform({1, 16, 16, 3}, rng);
    MetricResult rgb = compute_metrics(img, other, 0, ChannelMode::Rgb, 0);
    CHECK(rgb.psnr > 0.0);
    CHECK(rgb.ssim < 1.0);
}

TEST_CASE("luma conversion follows BT.601") {
    Tensor<float> img = Tensor<float>::zeros({1, 12, 12, 3});
    for (i64 i = 0; i < 144; ++i) {
        img.values()[static_cast<size_t>(i * 3 + 0)] = 1.0f;  // pure red
    }
    auto planes = metric_planes(img, 0, ChannelMode::Luma);
    CHECK(planes[0][0] == doctest::Approx(16.0 + 65.481).epsilon(1e-9));
}
