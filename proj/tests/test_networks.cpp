// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mtkd/losses.hpp"
#include "mtkd/networks.hpp"

using namespace mtkd;

TEST_CASE("every model kind maps [N,H,W,3] to [N,sH,sW,3]") {
    Rng rng(1);
    for (ModelKind kind : {ModelKind::TeacherCnnA, ModelKind::TeacherCnnB, ModelKind::TeacherWindowed,
                           ModelKind::Student}) {
        for (i64 s : {2, 3, 4}) {
            auto model = make_model<float>(kind, s, {}, 99);
            Tensor<float> lr = Tensor<float>::rand_uniform({2, 12, 8, 3}, rng);
            Tensor<float> hr = model->forward(lr);
            INFO(model_kind_name(kind), " s=", s);
            CHECK(hr.shape() == Shape{2, 12 * s, 8 * s, 3});
        }
    }
}

TEST_CASE("aggregator output shape equals the teacher output shape") {
    Rng rng(2);
    for (i64 n : {1, 2, 3}) {
        for (i64 s : {2, 3, 4}) {
            AggregatorConfig cfg;
            cfg.teachers = n;
            cfg.scale = s;
            cfg.channels = 8;
            cfg.blocks = 1;
            cfg.layers = 2;
            cfg.window = 4;
            Aggregator<float> agg(cfg, rng);
            std::vector<Tensor<float>> outs;
            for (i64 i = 0; i < n; ++i) outs.push_back(Tensor<float>::rand_uniform({1, s * 10, s * 6, 3}, rng));
            Tensor<float> fused = agg.aggregate(outs);
            INFO("n=", n, " s=", s);
            CHECK(fused.shape() == Shape{1, s * 10, s * 6, 3});
        }
    }
}

TEST_CASE("aggregator consumes 3*N*s^2 channels after pixel unshuffle") {
    Rng rng(3);
    for (i64 n : {1, 2, 3}) {
        AggregatorConfig cfg;
        cfg.teachers = n;
        cfg.scale = 2;
        cfg.channels = 8;
        cfg.blocks = 1;
        cfg.layers = 1;
        cfg.window = 4;
        Aggregator<float> agg(cfg, rng);
        CHECK(agg.params().get("shallow.w").dim(2) == 3 * n * 4);
    }
}

TEST_CASE("aggregator rejects mismatched teacher shapes and lists them") {
    Rng rng(4);
    AggregatorConfig cfg;
    cfg.teachers = 2;
    cfg.scale = 2;
    cfg.channels = 8;
    cfg.blocks = 1;
    cfg.layers = 1;
    cfg.window = 4;
    Aggregator<float> agg(cfg, rng);
    try {
        agg.aggregate({Tensor<float>::zeros({1, 16, 16, 3}), Tensor<float>::zeros({1, 16, 8, 3})});
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[1,16,16,3]") != std::string::npos);
        CHECK(msg.find("[1,16,8,3]") != std::string::npos);
    }
}

TEST_CASE("gradient reaches every aggregator parameter") {
    Rng rng(5);
    AggregatorConfig cfg;
    cfg.teachers = 2;
    cfg.scale = 2;
    cfg.channels = 8;
    cfg.blocks = 1;
    cfg.layers = 2;
    cfg.window = 2;
    Aggregator<double> agg(cfg, rng);

    TapeScope<double> scope;
    std::vector<Tensor<double>> outs{Tensor<double>::rand_uniform({1, 8, 8, 3}, rng),
                                     Tensor<double>::rand_uniform({1, 8, 8, 3}, rng)};
    Tensor<double> target = Tensor<double>::rand_uniform({1, 8, 8, 3}, rng);
    Tensor<double> fused = agg.aggregate(outs);
    Tensor<double> loss = loss_ka(fused, target);
    backward(loss);
    for (const auto& [name, t] : agg.params().items()) {
        double mx = 0.0;
        for (double g : t.grad()) mx = std::max(mx, std::abs(g));
        INFO(name);
        CHECK(mx > 0.0);
    }
}

TEST_CASE("permuting identical teacher outputs changes nothing") {
    Rng rng(6);
    AggregatorConfig cfg;
    cfg.teachers = 2;
    cfg.scale = 2;
    cfg.channels = 8;
    cfg.blocks = 1;
    cfg.layers = 1;
    cfg.window = 4;
    Aggregator<float> agg(cfg, rng);
    Tensor<float> same = Tensor<float>::rand_uniform({1, 16, 16, 3}, rng);
    Tensor<float> a = agg.aggregate({same, same});
    Tensor<float> b = agg.aggregate({same, same});
    CHECK(a.values() == b.values());
}

TEST_CASE("student parameter count is stable") {
    auto student = make_model<float>(ModelKind::Student, 2, {}, 7);
    CHECK(student->params().total_elements() == 20748);
}

TEST_CASE("student with zero residual branches keeps the shape contract") {
    auto student = make_model<float>(ModelKind::Student, 2, {}, 8);
    for (const auto& [name, t] : student->params().items())
        if (name.rfind("block", 0) == 0) {
            Tensor<float> h = t;
            std::fill(h.values().begin(), h.values().end(), 0.0f);
        }
    Rng rng(9);
    Tensor<float> lr = Tensor<float>::rand_uniform({1, 6, 6, 3}, rng);
    CHECK(student->forward(lr).shape() == Shape{1, 12, 12, 3});
}

TEST_CASE("same seed rebuilds the same network, forward is deterministic") {
    Rng rng(10);
    Tensor<float> lr = Tensor<float>::rand_uniform({1, 8, 8, 3}, rng);
    auto m1 = make_model<float>(ModelKind::TeacherCnnB, 2, {}, 1234);
    auto m2 = make_model<float>(ModelKind::TeacherCnnB, 2, {}, 1234);
    CHECK(m1->forward(lr).values() == m2->forward(lr).values());
    CHECK(m1->forward(lr).values() == m1->forward(lr).values());
}

TEST_CASE("distinct teacher families produce distinct outputs") {
    Rng rng(11);
    Tensor<float> lr = Tensor<float>::rand_uniform({1, 8, 8, 3}, rng);
    auto a = make_model<float>(ModelKind::TeacherCnnA, 2, {}, 5);
    auto b = make_model<float>(ModelKind::TeacherCnnB, 2, {}, 5);
    auto c = make_model<float>(ModelKind::TeacherWindowed, 2, {}, 5);
    auto diff = [](const Tensor<float>& x, const Tensor<float>& y) {
        double acc = 0;
        for (i64 i = 0; i < x.numel(); ++i) acc += std::abs(double(x.data()[i]) - double(y.data()[i]));
        return acc / double(x.numel());
    };
    Tensor<float> oa = a->forward(lr), ob = b->forward(lr), oc = c->forward(lr);
    CHECK(diff(oa, ob) > 0.0);
    CHECK(diff(oa, oc) > 0.0);
    CHECK(diff(ob, oc) > 0.0);
}

TEST_CASE("frozen models refuse optimization and record nothing on the tape") {
    auto teacher = make_model<float>(ModelKind::TeacherCnnA, 2, {}, 3);
    teacher->freeze();
    CHECK_THROWS_AS((void)teacher->trainable_params(), InternalError);

    TapeScope<float> scope;
    Rng rng(12);
    Tensor<float> lr = Tensor<float>::rand_uniform({1, 8, 8, 3}, rng);
    (void)teacher->forward(lr);
    CHECK(scope.tape.size() == 0);
}

TEST_CASE("windowed teacher pads non-multiple inputs and crops back") {
    auto c = make_model<float>(ModelKind::TeacherWindowed, 3, {}, 21);
    Rng rng(13);
    Tensor<float> lr = Tensor<float>::rand_uniform({1, 11, 13, 3}, rng);
    CHECK(c->forward(lr).shape() == Shape{1, 33, 39, 3});
}
