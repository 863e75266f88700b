// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtkd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mtkd {

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

KeyValueConfig KeyValueConfig::from_text(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> errors;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        cfg.values_[key] = value;
    }
    if (!errors.empty()) {
        std::string joined;
        for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
        throw ConfigError(joined);
    }
    return cfg;
}

std::string KeyValueConfig::to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
    return os.str();
}

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Teacher: return "teacher";
        case Stage::Aggregate: return "aggregate";
        case Stage::Distill: return "distill";
        case Stage::NoKdBaseline: return "no-kd-baseline";
        case Stage::L1DistillBaseline: return "l1-distill-baseline";
    }
    return "?";
}

Stage stage_from_name(const std::string& s) {
    if (s == "teacher") return Stage::Teacher;
    if (s == "aggregate") return Stage::Aggregate;
    if (s == "distill") return Stage::Distill;
    if (s == "no-kd-baseline") return Stage::NoKdBaseline;
    if (s == "l1-distill-baseline") return Stage::L1DistillBaseline;
    throw ConfigError("unknown stage '" + s + "'");
}

const char* distill_loss_name(DistillLossKind k) {
    switch (k) {
        case DistillLossKind::Wavelet: return "wavelet";
        case DistillLossKind::PlainL1: return "plain-l1";
        case DistillLossKind::Dct: return "dct";
        case DistillLossKind::WaveletDetail: return "wavelet-detail";
    }
    return "?";
}

DistillLossKind distill_loss_from_name(const std::string& s) {
    if (s == "wavelet") return DistillLossKind::Wavelet;
    if (s == "plain-l1") return DistillLossKind::PlainL1;
    if (s == "dct") return DistillLossKind::Dct;
    if (s == "wavelet-detail") return DistillLossKind::WaveletDetail;
    throw ConfigError("unknown distillation loss '" + s + "'");
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "run.stage",          "run.scale",          "run.seed",           "run.iterations",
        "run.batch_size",     "run.patch_size",     "run.lr",             "run.lr_decay_factor",
        "run.lr_decay_interval", "run.checkpoint_interval", "run.augment",
        "data.train_dir",     "data.val_dir",
        "distill.alpha",      "distill.dwt_levels", "distill.loss",       "distill.aggregator_checkpoint",
        "teacher.arch",       "teacher.width",      "teacher.blocks",     "teacher.channels",
        "teacher.layers",     "teacher.window",     "teachers.checkpoints",
        "student.width",      "student.blocks",
        "aggregator.channels", "aggregator.blocks", "aggregator.layers",  "aggregator.window",
        "aggregator.use_dct", "aggregator.use_mlp",
        "eval.mode",          "eval.crop",
    };
    return keys;
}

struct Collector {
    const KeyValueConfig& kv;
    std::vector<std::string> errors;

    i64 get_i64(const std::string& key, i64 fallback) {
        if (!kv.has(key)) return fallback;
        try {
            size_t pos = 0;
            i64 v = std::stoll(kv.get(key), &pos);
            if (pos != kv.get(key).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            errors.push_back(key + ": '" + kv.get(key) + "' is not an integer");
            return fallback;
        }
    }

    double get_f64(const std::string& key, double fallback) {
        if (!kv.has(key)) return fallback;
        try {
            size_t pos = 0;
            double v = std::stod(kv.get(key), &pos);
            if (pos != kv.get(key).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            errors.push_back(key + ": '" + kv.get(key) + "' is not a number");
            return fallback;
        }
    }

    bool get_bool(const std::string& key, bool fallback) {
        if (!kv.has(key)) return fallback;
        std::string v = kv.get(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        errors.push_back(key + ": '" + v + "' is not a boolean");
        return fallback;
    }

    void require(bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    }
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void collect_hyper(const KeyValueConfig& kv, const std::string& prefix, const std::vector<std::string>& names,
                   HyperMap& out) {
    for (const auto& n : names)
        if (kv.has(prefix + "." + n)) out[n] = kv.get(prefix + "." + n);
}

} // namespace

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv) {
    Collector c{kv, {}};
    TrainConfig t;

    for (const auto& [key, _] : kv.entries())
        if (!known_keys().count(key)) c.errors.push_back("unknown key '" + key + "'");

    if (!kv.has("run.stage")) {
        c.errors.push_back("run.stage is required");
    } else {
        try {
            t.stage = stage_from_name(kv.get("run.stage"));
        } catch (const ConfigError& e) {
            c.errors.push_back(e.what());
        }
    }

    t.scale = c.get_i64("run.scale", t.scale);
    t.seed = static_cast<std::uint64_t>(c.get_i64("run.seed", 0));
    t.iterations = c.get_i64("run.iterations", t.iterations);
    t.batch_size = c.get_i64("run.batch_size", t.batch_size);
    t.patch_size = c.get_i64("run.patch_size", t.patch_size);
    t.lr = c.get_f64("run.lr", t.lr);
    t.lr_decay_factor = c.get_f64("run.lr_decay_factor", t.lr_decay_factor);
    t.lr_decay_interval = c.get_i64("run.lr_decay_interval", t.lr_decay_interval);
    t.checkpoint_interval = c.get_i64("run.checkpoint_interval", t.checkpoint_interval);
    t.augment = c.get_bool("run.augment", t.augment);
    t.train_dir = kv.get("data.train_dir");
    t.val_dir = kv.get("data.val_dir");
    t.alpha = c.get_f64("distill.alpha", t.alpha);
    t.dwt_levels = static_cast<int>(c.get_i64("distill.dwt_levels", t.dwt_levels));
    if (kv.has("distill.loss")) {
        try {
            t.distill_loss = distill_loss_from_name(kv.get("distill.loss"));
        } catch (const ConfigError& e) {
            c.errors.push_back(e.what());
        }
    }
    t.teacher_arch = kv.get("teacher.arch");
    t.teacher_checkpoints = split_list(kv.get("teachers.checkpoints"));
    t.aggregator_checkpoint = kv.get("distill.aggregator_checkpoint");

    collect_hyper(kv, "teacher", {"width", "blocks", "channels", "layers", "window"}, t.teacher_hyper);
    collect_hyper(kv, "student", {"width", "blocks"}, t.student_hyper);
    collect_hyper(kv, "aggregator", {"channels", "blocks", "layers", "window", "use_dct", "use_mlp"},
                  t.aggregator_hyper);
    if (kv.has("aggregator.use_dct")) t.aggregator_hyper["use_dct"] = c.get_bool("aggregator.use_dct", true) ? "1" : "0";
    if (kv.has("aggregator.use_mlp")) t.aggregator_hyper["use_mlp"] = c.get_bool("aggregator.use_mlp", true) ? "1" : "0";

    std::string mode = kv.get("eval.mode", "Y");
    if (mode == "Y")
        t.eval_mode = ChannelMode::Luma;
    else if (mode == "RGB")
        t.eval_mode = ChannelMode::Rgb;
    else
        c.errors.push_back("eval.mode must be Y or RGB, got '" + mode + "'");
    t.eval_crop = c.get_i64("eval.crop", -1);

    // cross-field constraints
    c.require(t.scale >= 2 && t.scale <= 4, "run.scale must be in {2,3,4}");
    c.require(t.iterations > 0, "run.iterations must be positive");
    c.require(t.batch_size > 0, "run.batch_size must be positive");
    c.require(t.patch_size > 0, "run.patch_size must be positive");
    c.require(t.lr > 0.0, "run.lr must be positive");
    c.require(t.lr_decay_factor >= 1.0, "run.lr_decay_factor must be >= 1");
    c.require(t.lr_decay_interval > 0, "run.lr_decay_interval must be positive");
    c.require(t.checkpoint_interval > 0, "run.checkpoint_interval must be positive");
    c.require(t.alpha >= 0.0, "distill.alpha must be >= 0");
    c.require(t.dwt_levels >= 1, "distill.dwt_levels must be >= 1");
    c.require(!t.train_dir.empty(), "data.train_dir is required");

    i64 window = detail::hyper_get(t.aggregator_hyper, "window", 8);
    switch (t.stage) {
        case Stage::Teacher:
            if (t.teacher_arch.empty()) {
                c.errors.push_back("teacher.arch is required for the teacher stage");
            } else {
                try {
                    ModelKind k = model_kind_from_name(t.teacher_arch);
                    c.require(is_teacher_kind(k), "teacher.arch must name a teacher architecture");
                } catch (const DataError& e) {
                    c.errors.push_back(e.what());
                }
            }
            break;
        case Stage::Aggregate:
            c.require(!t.teacher_checkpoints.empty(), "teachers.checkpoints is required for the aggregate stage");
            c.require(t.patch_size % window == 0, "run.patch_size must be divisible by aggregator.window");
            break;
        case Stage::Distill:
        case Stage::L1DistillBaseline:
            c.require(!t.teacher_checkpoints.empty(), "teachers.checkpoints is required for distillation");
            c.require(!t.aggregator_checkpoint.empty(), "distill.aggregator_checkpoint is required for distillation");
            c.require(t.patch_size % window == 0, "run.patch_size must be divisible by aggregator.window");
            break;
        case Stage::NoKdBaseline:
            break;
    }
    if (t.stage == Stage::Distill) {
        i64 div = i64(1) << t.dwt_levels;
        c.require(t.patch_size % div == 0,
                  "run.patch_size must be divisible by 2^distill.dwt_levels = " + std::to_string(div));
    }

    if (!c.errors.empty()) {
        std::string joined = "config invalid: ";
        for (size_t i = 0; i < c.errors.size(); ++i) joined += (i ? "; " : "") + c.errors[i];
        throw ConfigError(joined);
    }
    return t;
}

std::string TrainConfig::echo_text() const {
    KeyValueConfig kv;
    kv.set("run.stage", stage_name(stage));
    kv.set("run.scale", std::to_string(scale));
    kv.set("run.seed", std::to_string(seed));
    kv.set("run.iterations", std::to_string(iterations));
    kv.set("run.batch_size", std::to_string(batch_size));
    kv.set("run.patch_size", std::to_string(patch_size));
    {
        std::ostringstream os;
        os << lr;
        kv.set("run.lr", os.str());
    }
    {
        std::ostringstream os;
        os << lr_decay_factor;
        kv.set("run.lr_decay_factor", os.str());
    }
    kv.set("run.lr_decay_interval", std::to_string(lr_decay_interval));
    kv.set("run.checkpoint_interval", std::to_string(checkpoint_interval));
    kv.set("run.augment", augment ? "true" : "false");
    kv.set("data.train_dir", train_dir);
    if (!val_dir.empty()) kv.set("data.val_dir", val_dir);
    {
        std::ostringstream os;
        os << alpha;
        kv.set("distill.alpha", os.str());
    }
    kv.set("distill.dwt_levels", std::to_string(dwt_levels));
    kv.set("distill.loss", distill_loss_name(distill_loss));
    if (!aggregator_checkpoint.empty()) kv.set("distill.aggregator_checkpoint", aggregator_checkpoint);
    if (!teacher_arch.empty()) kv.set("teacher.arch", teacher_arch);
    if (!teacher_checkpoints.empty()) {
        std::string joined;
        for (const auto& t : teacher_checkpoints) joined += (joined.empty() ? "" : ",") + t;
        kv.set("teachers.checkpoints", joined);
    }
    for (const auto& [k, v] : teacher_hyper) kv.set("teacher." + k, v);
    for (const auto& [k, v] : student_hyper) kv.set("student." + k, v);
    for (const auto& [k, v] : aggregator_hyper) kv.set("aggregator." + k, v);
    kv.set("eval.mode", channel_mode_name(eval_mode));
    kv.set("eval.crop", std::to_string(effective_eval_crop()));
    return kv.to_text();
}

} // namespace mtkd
