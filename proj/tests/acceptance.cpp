// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: nine gate criteria, one PASS/FAIL line each, covering
// transform identities, the gradient oracle, the attention oracle, the
// subband-loss structure, zero-weight identities, the end-to-end desk-scale
// distillation run with its directional claims, bit-exact determinism,
// metric oracles, and the ablation harness.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mtkd/runtime.hpp"
#include "mtkd/selfcheck.hpp"
#include "mtkd/train.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace mtkd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion-%d %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// --------------------------------------------------------------------------
// criteria 1, 2, 5: invariant suite at full strength

void criterion_transforms() {
    auto t0 = Clock::now();
    SelfCheckOptions opt;
    opt.dct_windows = 1000;
    auto results = run_transform_checks(opt);
    double secs = seconds_since(t0);
    bool pass = secs < 10.0;
    std::string worst;
    for (const auto& r : results) {
        bool relevant = r.name.rfind("dct-", 0) == 0 || r.name.rfind("dwt-", 0) == 0;
        if (relevant && !r.pass) {
            pass = false;
            worst += r.name + " ";
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "1000 windows, %.1f s%s%s", secs, worst.empty() ? "" : ", failed: ",
                  worst.c_str());
    report(1, "transform-identities", pass, buf);
}

void criterion_gradients() {
    auto t0 = Clock::now();
    SelfCheckOptions opt;
    opt.grad_seeds = 20;
    auto results = run_gradient_checks(opt);
    double secs = seconds_since(t0);
    bool pass = secs < 120.0;
    std::string failed;
    for (const auto& r : results)
        if (!r.pass) {
            pass = false;
            failed += r.name + " ";
        }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu ops x 20 seeds, rel err < 1e-4, %.1f s%s%s", results.size(), secs,
                  failed.empty() ? "" : ", failed: ", failed.c_str());
    report(2, "gradient-suite", pass, buf);
}

void criterion_attention_oracle() {
    double worst = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
        Rng rng(7000 + seed);
        i64 C = 4;
        WindowLayout layout(2, 1, 4, 4);
        auto params = DctstlParams<double>::make(C, 2, 2, rng, true, 0.5);
        Tensor<double> x = Tensor<double>::randn({1, 4, 4, C}, rng);
        Tensor<double> tokens = reshape(window_partition(x, layout), {4, 4, C});
        auto mask = AttentionMask<double>::make(layout);
        Tensor<double> out = w_msa(tokens, params, mask);
        auto expect = oracles::brute_force_window_attention(tokens.values(), 4, 4, C, params,
                                                            oracles::shifted_neighborhood(layout));
        for (size_t i = 0; i < expect.size(); ++i)
            worst = std::max(worst, std::abs(out.values()[i] - expect[i]));
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "50 weight draws, 4x4 W_s=2, max_abs_err=%.3g", worst);
    report(3, "attention-oracle", worst < 1e-5, buf);
}

void criterion_subband_structure() {
    bool pass = true;
    std::string detail = "term counts {4,7,10}, zero on identity, 2x2 example";
    Rng rng(11);
    for (int k : {1, 2, 3}) {
        Tensor<double> x = Tensor<double>::rand_uniform({1, 16, 16, 3}, rng);
        SubbandLoss<double> l = loss_dis(x, x, k);
        if (static_cast<int>(l.subbands.size()) != 3 * k + 1 || l.total.item() != 0.0) pass = false;
    }
    Tensor<double> ones = Tensor<double>::full({1, 2, 2, 1}, 1.0);
    Tensor<double> zeros = Tensor<double>::zeros({1, 2, 2, 1});
    if (loss_dis(ones, zeros, 1).total.item() != 0.5) pass = false;
    report(4, "subband-loss-structure", pass, detail);
}

void criterion_zero_identity() {
    auto plan = DctPlan<float>::make(2);
    Rng rng(5);
    Tensor<float> x = Tensor<float>::randn({2, 4, 4, 3}, rng);
    bool pass = true;
    for (bool use_dct : {true, false})
        for (bool use_mlp : {true, false}) {
            auto params = DctstlParams<float>::make_zero(3, 2, 1, use_mlp);
            for (i64 shift : {0, 1}) {
                WindowLayout layout(2, shift, 4, 4);
                pass = pass && dctstl_forward(x, params, layout, plan, use_dct).values() == x.values();
            }
            std::vector<DctstlParams<float>> layers(2, DctstlParams<float>::make_zero(3, 2, 1, use_mlp));
            pass = pass && dctswin_block_forward(x, layers, 2, plan, use_dct).values() == x.values();
        }
    report(5, "zero-weight-identity", pass, "layers and blocks, bit-exact, all dct/mlp variants");
}

// --------------------------------------------------------------------------
// criterion 6/7: the desk-scale end-to-end run

struct PipelineArtifacts {
    std::string teacher_a, teacher_b, teacher_c;
    std::string aggregator, student, nokd;
    fs::path root;
};

KeyValueConfig base_kv(const std::string& train_dir, const std::string& val_dir) {
    KeyValueConfig kv;
    kv.set("run.scale", "2");
    kv.set("run.batch_size", "8");
    kv.set("run.patch_size", "24");
    kv.set("run.lr", "1e-3"); // desk-scale runs need a hotter start than the full-scale default
    kv.set("run.lr_decay_interval", "1000");
    kv.set("run.checkpoint_interval", "500");
    kv.set("data.train_dir", train_dir);
    kv.set("data.val_dir", val_dir);
    kv.set("aggregator.channels", "16");
    kv.set("aggregator.blocks", "2");
    kv.set("aggregator.layers", "2");
    kv.set("aggregator.window", "8");
    return kv;
}

// Trains 3 teachers (300 it), the aggregator (2000 it), the distilled
// student and the no-KD baseline (2000 it each) on the pinned dataset.
PipelineArtifacts run_pipeline(const fs::path& root, const std::string& train_dir, const std::string& val_dir) {
    PipelineArtifacts art;
    art.root = root;
    fs::create_directories(root);

    const char* archs[3] = {"teacher-cnn-a", "teacher-cnn-b", "teacher-windowed"};
    std::string* slots[3] = {&art.teacher_a, &art.teacher_b, &art.teacher_c};
    for (int i = 0; i < 3; ++i) {
        KeyValueConfig kv = base_kv(train_dir, val_dir);
        kv.set("run.stage", "teacher");
        kv.set("run.seed", std::to_string(1000 + i));
        kv.set("run.iterations", "300");
        kv.set("teacher.arch", archs[i]);
        *slots[i] = train_teacher<float>(TrainConfig::from_kv(kv), (root / ("teacher_" + std::to_string(i))).string());
    }
    std::string list = art.teacher_a + "," + art.teacher_b + "," + art.teacher_c;

    {
        KeyValueConfig kv = base_kv(train_dir, val_dir);
        kv.set("run.stage", "aggregate");
        kv.set("run.seed", "7");
        kv.set("run.iterations", "2000");
        kv.set("teachers.checkpoints", list);
        art.aggregator = train_stage1<float>(TrainConfig::from_kv(kv), (root / "stage1").string());
    }
    {
        KeyValueConfig kv = base_kv(train_dir, val_dir);
        kv.set("run.stage", "distill");
        kv.set("run.seed", "11");
        kv.set("run.iterations", "2000");
        kv.set("teachers.checkpoints", list);
        kv.set("distill.aggregator_checkpoint", art.aggregator);
        art.student = train_stage2<float>(TrainConfig::from_kv(kv), (root / "stage2").string());
    }
    {
        KeyValueConfig kv = base_kv(train_dir, val_dir);
        kv.set("run.stage", "no-kd-baseline");
        kv.set("run.seed", "11");
        kv.set("run.iterations", "2000");
        art.nokd = train_stage2<float>(TrainConfig::from_kv(kv), (root / "nokd").string());
    }
    return art;
}

double held_out_psnr(const std::string& ckpt, const std::string& val_dir, const std::string& label) {
    SrPipeline<float> pipe = load_pipeline<float>(ckpt);
    EvalTable t = evaluate_pipeline(pipe, val_dir, ChannelMode::Luma, 2, 1, label);
    return t.mean.psnr;
}

bool descends(const fs::path& log) {
    auto rows = read_train_log(log.string());
    if (rows.size() < 100) return false;
    auto mean = [&](size_t from, size_t n) {
        double acc = 0;
        for (size_t i = from; i < from + n; ++i) acc += rows[i].total;
        return acc / static_cast<double>(n);
    };
    return mean(rows.size() - 50, 50) < mean(0, 50);
}

PipelineArtifacts criterion_end_to_end(const std::string& train_dir, const std::string& val_dir,
                                       const fs::path& work) {
    auto t0 = Clock::now();
    PipelineArtifacts art = run_pipeline(work / "runA", train_dir, val_dir);
    double train_secs = seconds_since(t0);

    double pa = held_out_psnr(art.teacher_a, val_dir, "teacher-a");
    double pb = held_out_psnr(art.teacher_b, val_dir, "teacher-b");
    double pc = held_out_psnr(art.teacher_c, val_dir, "teacher-c");
    double best_teacher = std::max({pa, pb, pc});

    // trained teacher families must genuinely differ on held-out content
    double diversity = 0.0;
    {
        Dataset vd = ingest_dataset(val_dir, 2);
        ImageBatch<float> lr = batch_from_images<float>({vd.entries[0].lr});
        SrPipeline<float> p1 = load_pipeline<float>(art.teacher_a);
        SrPipeline<float> p2 = load_pipeline<float>(art.teacher_b);
        Tensor<float> o1 = p1.run(lr.data);
        Tensor<float> o2 = p2.run(lr.data);
        for (i64 i = 0; i < o1.numel(); ++i)
            diversity += std::abs(static_cast<double>(o1.data()[i]) - static_cast<double>(o2.data()[i]));
        diversity /= static_cast<double>(o1.numel());
    }
    double pm = held_out_psnr(art.aggregator, val_dir, "aggregated");
    double ps = held_out_psnr(art.student, val_dir, "student-distilled");
    double pn = held_out_psnr(art.nokd, val_dir, "student-no-kd");

    bool a_ok = pm >= best_teacher - 0.2;
    bool b_ok = ps >= pn - 0.05;
    bool c_ok = descends(work / "runA" / "stage1" / "train_log.csv") &&
                descends(work / "runA" / "stage2" / "train_log.csv");
    bool d_ok = diversity > 0.0;
    double secs = seconds_since(t0);
    bool time_ok = secs < 1200.0;

    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "teachers %.2f/%.2f/%.2f dB (MAD %.2g), aggregated %.2f dB (>= best-0.2: %s), student %.2f vs "
                  "no-KD %.2f dB (>= -0.05: %s), descent %s, %.0f s train+eval (< 1200)",
                  pa, pb, pc, diversity, pm, a_ok ? "yes" : "NO", ps, pn, b_ok ? "yes" : "NO", c_ok ? "yes" : "NO",
                  secs);
    report(6, "end-to-end-distillation", a_ok && b_ok && c_ok && d_ok && time_ok, buf);
    (void)train_secs;
    return art;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_determinism(const PipelineArtifacts& first, const std::string& train_dir,
                           const std::string& val_dir, const fs::path& work) {
    PipelineArtifacts second = run_pipeline(work / "runB", train_dir, val_dir);

    bool ckpt_ok = true;
    const char* names[6] = {"teacher_0", "teacher_1", "teacher_2", "stage1", "stage2", "nokd"};
    for (const char* n : names) {
        std::string a = (work / "runA" / n / "model.ckpt").string();
        std::string b = (work / "runB" / n / "model.ckpt").string();
        if (slurp(a) != slurp(b)) {
            ckpt_ok = false;
            std::printf("  determinism mismatch in %s\n", n);
        }
    }
    bool log_ok = true;
    for (const char* n : names) {
        auto va = train_log_deterministic_view((work / "runA" / n / "train_log.csv").string());
        auto vb = train_log_deterministic_view((work / "runB" / n / "train_log.csv").string());
        if (va != vb) {
            log_ok = false;
            std::printf("  log mismatch in %s\n", n);
        }
    }
    report(7, "same-seed-determinism", ckpt_ok && log_ok,
           ckpt_ok && log_ok ? "6 checkpoints byte-identical, 6 loss logs field-identical (wall time excluded)"
                             : "mismatch detected");
    (void)first;
}

// --------------------------------------------------------------------------
// criterion 8: metric oracles

void criterion_metric_oracles() {
    bool pass = true;
    std::string why;

    std::vector<double> ref(48 * 48), test(48 * 48);
    Rng rng(17);
    for (size_t i = 0; i < ref.size(); ++i) ref[i] = 255.0 * rng.uniform();
    for (size_t i = 0; i < ref.size(); ++i) test[i] = ref[i] + 1.0;
    double p = psnr_planes({ref}, {test}, 48, 48, 0);
    if (std::abs(p - 48.1308) > 1e-3) {
        pass = false;
        why += "psnr(MSE=1) ";
    }
    double s_self = ssim_planes({ref}, {ref}, 48, 48, 0);
    if (std::abs(s_self - 1.0) > 1e-9) {
        pass = false;
        why += "ssim(x,x) ";
    }
    double worst_p = 0, worst_s = 0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng r2(800 + seed);
        i64 h = 24, w = 28;
        std::vector<double> a(static_cast<size_t>(h * w)), b(a.size());
        for (size_t i = 0; i < a.size(); ++i) {
            a[i] = 255.0 * r2.uniform();
            b[i] = std::min(255.0, std::max(0.0, a[i] + 60.0 * (r2.uniform() - 0.5)));
        }
        worst_p = std::max(worst_p, std::abs(psnr_planes({a}, {b}, h, w, 0) - oracles::naive_psnr(a, b)));
        worst_s = std::max(worst_s, std::abs(ssim_planes({a}, {b}, h, w, 0) - oracles::naive_ssim(a, b, h, w)));
    }
    if (worst_p > 1e-6 || worst_s > 1e-6) {
        pass = false;
        why += "naive-reference ";
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "psnr(MSE=1)=%.4f dB, ssim self=%.12f, ref diffs %.2g/%.2g%s%s", p, s_self,
                  worst_p, worst_s, why.empty() ? "" : ", failed: ", why.c_str());
    report(8, "metric-oracles", pass, buf);
}

// --------------------------------------------------------------------------
// criterion 9: ablation harness at smoke scale

void criterion_ablations(const std::string& train_dir, const std::string& val_dir, const fs::path& work) {
    fs::path root = work / "ablate";
    fs::create_directories(root);

    // smoke-scale base artifacts
    KeyValueConfig kv = base_kv(train_dir, val_dir);
    kv.set("run.patch_size", "16");
    kv.set("aggregator.window", "4");
    kv.set("aggregator.channels", "8");
    kv.set("aggregator.blocks", "1");
    kv.set("run.batch_size", "4");

    const char* archs[3] = {"teacher-cnn-a", "teacher-cnn-b", "teacher-windowed"};
    std::vector<std::string> teachers;
    for (int i = 0; i < 3; ++i) {
        KeyValueConfig tkv = kv;
        tkv.set("run.stage", "teacher");
        tkv.set("run.seed", std::to_string(100 + i));
        tkv.set("run.iterations", "60");
        tkv.set("teacher.arch", archs[i]);
        tkv.set("teacher.width", "10");
        tkv.set("teacher.blocks", "2");
        tkv.set("teacher.channels", "8");
        tkv.set("teacher.layers", "1");
        tkv.set("teacher.window", "4");
        teachers.push_back(
            train_teacher<float>(TrainConfig::from_kv(tkv), (root / ("teacher_" + std::to_string(i))).string()));
    }
    std::string list = teachers[0] + "," + teachers[1] + "," + teachers[2];

    KeyValueConfig akv = kv;
    akv.set("run.stage", "aggregate");
    akv.set("run.seed", "1");
    akv.set("run.iterations", "120");
    akv.set("teachers.checkpoints", list);
    std::string base_agg = train_stage1<float>(TrainConfig::from_kv(akv), (root / "base_stage1").string());

    KeyValueConfig bkv = kv;
    bkv.set("run.stage", "distill");
    bkv.set("run.seed", "2");
    bkv.set("run.iterations", "120");
    bkv.set("teachers.checkpoints", list);
    bkv.set("distill.aggregator_checkpoint", base_agg);
    bkv.set("student.width", "8");
    bkv.set("student.blocks", "2");
    TrainConfig base = TrainConfig::from_kv(bkv);

    bool pass = true;
    std::string detail;
    for (const char* variant : {"v1", "v2", "v4", "v5", "v6", "v7"}) {
        try {
            AblationReport rep = run_ablation<float>(variant, base, (root / variant).string());
            bool ok = true;
            if (std::string(variant) == "v1") ok = rep.teacher_count == 2;
            if (std::string(variant) == "v2")
                ok = rep.teacher_count == 1 && rep.checks.at("input_channels_equal_3s2") == 1.0;
            if (std::string(variant) == "v4") ok = rep.checks.at("dct_disabled") == 1.0;
            if (std::string(variant) == "v5")
                ok = rep.loss_kind == "plain-l1" && rep.checks.at("plain_l1_equals_loss_ka") == 1.0;
            if (std::string(variant) == "v6") ok = rep.loss_kind == "dct";
            if (std::string(variant) == "v7")
                ok = rep.loss_kind == "wavelet-detail" && rep.checks.at("detail_loss_dc_insensitive") == 1.0;
            if (!fs::exists(root / variant / "report.txt")) ok = false;
            if (!ok) {
                pass = false;
                detail += std::string(variant) + ":structural-check-failed ";
            }
        } catch (const std::exception& e) {
            pass = false;
            detail += std::string(variant) + ":threw(" + e.what() + ") ";
        }
    }
    bool v3_ok = false;
    try {
        run_ablation<float>("v3", base, (root / "v3").string());
    } catch (const ConfigError& e) {
        v3_ok = std::string(e.what()).find("unimplemented") != std::string::npos;
    }
    if (!v3_ok) {
        pass = false;
        detail += "v3:no-unimplemented-error ";
    }
    report(9, "ablation-harness", pass,
           pass ? "v1 v2 v4 v5 v6 v7 ran with recorded structure, v3 errors as unimplemented" : detail);
}

} // namespace

int main() {
    tune_allocator();
    auto t0 = Clock::now();

    fs::path work = fs::absolute("acceptance_work");
    fs::remove_all(work);
    fs::create_directories(work);
    std::string train_dir = (work / "train50").string();
    std::string val_dir = (work / "val8").string();
    testsupport::make_synthetic_dataset(train_dir, 50, 80, 80, 20260806);
    testsupport::make_synthetic_dataset(val_dir, 8, 96, 96, 424242);

    try {
        criterion_transforms();
        criterion_gradients();
        criterion_attention_oracle();
        criterion_subband_structure();
        criterion_zero_identity();
        criterion_metric_oracles();
        criterion_ablations(train_dir, val_dir, work);
        PipelineArtifacts art = criterion_end_to_end(train_dir, val_dir, work);
        criterion_determinism(art, train_dir, val_dir, work);
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        ++g_failures;
    }

    std::printf("acceptance: %d/9 criteria passed, %.0f s total\n", 9 - g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
