// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: teacher pre-training, knowledge aggregation,
// student distillation and its baselines, evaluation, the ablation harness,
// the invariant self-test, and results-table aggregation.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mtkd/runtime.hpp"
#include "mtkd/selfcheck.hpp"
#include "mtkd/train.hpp"

namespace fs = std::filesystem;
using namespace mtkd;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::int64_t seed = -1;
    std::string precision = "f32";
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config = true) {
    auto* c = cmd->add_option("--config", o.config_path, "run configuration file (key=value lines)");
    if (needs_config) c->required();
    cmd->add_option("--set", o.overrides, "override a config key (key=value, repeatable)");
    cmd->add_option("--out", o.out_dir, "output directory")->required();
    cmd->add_option("--seed", o.seed, "override run.seed");
    cmd->add_option("--precision", o.precision, "f32 (default) or f64")->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--threads", o.threads, "evaluation fan-out threads");
}

KeyValueConfig effective_kv(const CommonOpts& o) {
    KeyValueConfig kv = o.config_path.empty() ? KeyValueConfig() : KeyValueConfig::from_file(o.config_path);
    for (const auto& ov : o.overrides) {
        size_t eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + ov + "'");
        kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    if (o.seed >= 0) kv.set("run.seed", std::to_string(o.seed));

    // Default data root for relative dataset paths.
    if (const char* root = std::getenv("MTKD_DATA_ROOT")) {
        for (const char* key : {"data.train_dir", "data.val_dir"}) {
            std::string v = kv.get(key);
            if (!v.empty() && !fs::path(v).is_absolute()) kv.set(key, (fs::path(root) / v).string());
        }
    }
    return kv;
}

// Effective config echo plus content hashes of the inputs, written before
// the run starts.
void write_run_manifest(const std::string& out_dir, const TrainConfig& cfg, int argc, char** argv) {
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / "run-manifest.txt", std::ios::trunc);
    os << "# mtkd-run-manifest-v1\n";
    os << "argv=";
    for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
    os << "\n";
    os << "config-hash=" << std::hex << fnv1a_hash(cfg.echo_text()) << std::dec << "\n";
    for (const auto& t : cfg.teacher_checkpoints)
        if (fs::exists(t)) os << "input-hash " << t << " " << std::hex << file_content_hash(t) << std::dec << "\n";
    if (!cfg.aggregator_checkpoint.empty() && fs::exists(cfg.aggregator_checkpoint))
        os << "input-hash " << cfg.aggregator_checkpoint << " " << std::hex
           << file_content_hash(cfg.aggregator_checkpoint) << std::dec << "\n";
    os << "--- effective config ---\n";
    os << cfg.echo_text();
}

template <class T>
int run_train(Stage want, const CommonOpts& o, int argc, char** argv) {
    TrainConfig cfg = TrainConfig::from_kv(effective_kv(o));
    bool student_stage = want == Stage::Distill &&
                         (cfg.stage == Stage::Distill || cfg.stage == Stage::NoKdBaseline ||
                          cfg.stage == Stage::L1DistillBaseline);
    if (cfg.stage != want && !student_stage)
        throw ConfigError(std::string("this subcommand runs stage '") + stage_name(want) + "', config says '" +
                          stage_name(cfg.stage) + "'");
    write_run_manifest(o.out_dir, cfg, argc, argv);
    std::string ckpt;
    switch (cfg.stage) {
        case Stage::Teacher: ckpt = train_teacher<T>(cfg, o.out_dir); break;
        case Stage::Aggregate: ckpt = train_stage1<T>(cfg, o.out_dir); break;
        default: ckpt = train_stage2<T>(cfg, o.out_dir); break;
    }
    std::cout << "checkpoint " << ckpt << "\n";

    if (!cfg.val_dir.empty()) {
        SrPipeline<T> pipe = load_pipeline<T>(ckpt);
        EvalTable t = evaluate_pipeline(pipe, cfg.val_dir, cfg.eval_mode, cfg.effective_eval_crop(), o.threads,
                                        stage_name(cfg.stage));
        std::string csv = (fs::path(o.out_dir) / "eval.csv").string();
        write_eval_csv(csv, t);
        std::cout << "eval " << csv << " mean " << format_metric(t.mean.psnr) << "/" << format_metric(t.mean.ssim)
                  << "\n";
    }
    return 0;
}

template <class T>
int run_evaluate(const CommonOpts& o, const std::string& checkpoint, bool against_self, const std::string& label,
                 int argc, char** argv) {
    TrainConfig cfg = TrainConfig::from_kv(effective_kv(o));
    if (cfg.val_dir.empty()) throw ConfigError("evaluate needs data.val_dir");
    write_run_manifest(o.out_dir, cfg, argc, argv);

    EvalTable t;
    if (against_self) {
        t = evaluate_against_self(cfg.val_dir, cfg.scale, cfg.eval_mode, cfg.effective_eval_crop());
    } else {
        if (checkpoint.empty()) throw ConfigError("evaluate needs --checkpoint (or --against-self)");
        SrPipeline<T> pipe = load_pipeline<T>(checkpoint);
        if (pipe.scale() != cfg.scale)
            throw ConfigError("checkpoint scale " + std::to_string(pipe.scale()) + " != run.scale " +
                              std::to_string(cfg.scale));
        t = evaluate_pipeline(pipe, cfg.val_dir, cfg.eval_mode, cfg.effective_eval_crop(), o.threads,
                              label.empty() ? fs::path(checkpoint).stem().string() : label);
    }
    std::string csv = (fs::path(o.out_dir) / "eval.csv").string();
    write_eval_csv(csv, t);
    std::ofstream(fs::path(o.out_dir) / "dataset-manifest.txt") << t.manifest_text;
    for (const auto& r : t.rows)
        std::cout << r.name << " " << format_metric(r.psnr) << " " << format_metric(r.ssim) << "\n";
    std::cout << "mean " << format_metric(t.mean.psnr) << " " << format_metric(t.mean.ssim) << "\n";
    return 0;
}

template <class T>
int run_ablate(const CommonOpts& o, const std::string& variant, int argc, char** argv) {
    TrainConfig cfg = TrainConfig::from_kv(effective_kv(o));
    write_run_manifest(o.out_dir, cfg, argc, argv);
    AblationReport rep = run_ablation<T>(variant, cfg, o.out_dir);
    std::cout << rep.to_text();
    return 0;
}

int run_selftest(bool quick) {
    SelfCheckOptions opt;
    if (quick) {
        opt.dct_windows = 50;
        opt.grad_seeds = 3;
    }
    auto results = run_selfcheck(opt);
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        all = all && r.pass;
    }
    std::cout << (all ? "selftest: all properties hold\n" : "selftest: FAILURES present\n");
    return all ? 0 : 4;
}

int run_report(const std::vector<std::string>& csvs, const std::string& out_file) {
    std::vector<EvalTable> tables;
    for (const auto& p : csvs) tables.push_back(read_eval_csv(p));
    std::string rendered = render_report(tables);
    if (!out_file.empty()) {
        std::ofstream os(out_file, std::ios::trunc);
        if (!os) throw DataError("cannot write report " + out_file);
        os << rendered;
    }
    std::cout << rendered;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"multi-teacher knowledge distillation for image super-resolution"};
    app.require_subcommand(1);

    CommonOpts o_teacher, o_agg, o_distill, o_eval, o_ablate;
    std::string eval_checkpoint, eval_label, ablate_variant, report_out;
    bool against_self = false, quick = false;
    std::vector<std::string> report_csvs;

    add_common(app.add_subcommand("train-teacher", "pre-train one teacher network"), o_teacher);
    add_common(app.add_subcommand("train-aggregator", "train the knowledge-aggregation network"), o_agg);
    add_common(app.add_subcommand("distill", "train the student (distillation or a baseline)"), o_distill);

    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
    add_common(eval_cmd, o_eval);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint to evaluate");
    eval_cmd->add_option("--label", eval_label, "method label used in reports");
    eval_cmd->add_flag("--against-self", against_self, "compare the ground truth against itself");

    auto* ablate_cmd = app.add_subcommand("ablate", "run one ablation variant");
    add_common(ablate_cmd, o_ablate);
    ablate_cmd->add_option("--variant", ablate_variant, "v1|v2|v3|v4|v5|v6|v7")->required();

    auto* selftest_cmd = app.add_subcommand("selftest", "run the transform/gradient invariant suite");
    selftest_cmd->add_flag("--quick", quick, "reduced counts for a fast pass");

    auto* report_cmd = app.add_subcommand("report", "aggregate evaluation CSVs into a results table");
    report_cmd->add_option("csv", report_csvs, "evaluation CSV files")->required();
    report_cmd->add_option("--out", report_out, "also write the table to a file");

    CLI11_PARSE(app, argc, argv);

    auto dispatch = [&](auto fn, const CommonOpts& o) {
        return o.precision == "f64" ? fn(double{}, o) : fn(float{}, o);
    };

    try {
        if (app.got_subcommand("train-teacher"))
            return dispatch([&](auto tag, const CommonOpts& o) {
                return run_train<decltype(tag)>(Stage::Teacher, o, argc, argv);
            }, o_teacher);
        if (app.got_subcommand("train-aggregator"))
            return dispatch([&](auto tag, const CommonOpts& o) {
                return run_train<decltype(tag)>(Stage::Aggregate, o, argc, argv);
            }, o_agg);
        if (app.got_subcommand("distill"))
            return dispatch([&](auto tag, const CommonOpts& o) {
                return run_train<decltype(tag)>(Stage::Distill, o, argc, argv);
            }, o_distill);
        if (app.got_subcommand("evaluate"))
            return dispatch([&](auto tag, const CommonOpts& o) {
                return run_evaluate<decltype(tag)>(o, eval_checkpoint, against_self, eval_label, argc, argv);
            }, o_eval);
        if (app.got_subcommand("ablate"))
            return dispatch([&](auto tag, const CommonOpts& o) {
                return run_ablate<decltype(tag)>(o, ablate_variant, argc, argv);
            }, o_ablate);
        if (app.got_subcommand("selftest")) return run_selftest(quick);
        if (app.got_subcommand("report")) return run_report(report_csvs, report_out);
        std::cerr << "MTKD-ERROR category=config no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "MTKD-ERROR category=config " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "MTKD-ERROR category=data " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "MTKD-ERROR category=numeric " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "MTKD-ERROR category=internal " << e.what() << "\n";
        return 4;
    }
}
