// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration with section-prefixed keys. Unknown keys
// are rejected and validation reports every violated constraint, not just
// the first.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "mtkd/image.hpp"
#include "mtkd/networks.hpp"

namespace mtkd {

class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_text(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

enum class Stage { Teacher, Aggregate, Distill, NoKdBaseline, L1DistillBaseline };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& s);

enum class DistillLossKind { Wavelet, PlainL1, Dct, WaveletDetail };

const char* distill_loss_name(DistillLossKind k);
DistillLossKind distill_loss_from_name(const std::string& s);

struct TrainConfig {
    Stage stage = Stage::Teacher;
    i64 scale = 2;
    std::uint64_t seed = 0;
    i64 iterations = 2000;
    i64 batch_size = 8;
    i64 patch_size = 32; // LR patch edge
    double lr = 1e-4;
    double lr_decay_factor = 10.0;
    i64 lr_decay_interval = 1000;
    i64 checkpoint_interval = 500;
    bool augment = true;

    std::string train_dir;
    std::string val_dir;

    double alpha = 0.1;
    int dwt_levels = 1;
    DistillLossKind distill_loss = DistillLossKind::Wavelet;

    std::string teacher_arch; // model kind name, teacher stage only
    std::vector<std::string> teacher_checkpoints;
    std::string aggregator_checkpoint;

    HyperMap teacher_hyper;
    HyperMap student_hyper;
    HyperMap aggregator_hyper;

    ChannelMode eval_mode = ChannelMode::Luma;
    i64 eval_crop = -1; // -1: use the scale factor

    // Throws ConfigError enumerating every violation.
    static TrainConfig from_kv(const KeyValueConfig& kv);

    // Canonical flat echo with defaults materialized.
    std::string echo_text() const;

    i64 effective_eval_crop() const { return eval_crop < 0 ? scale : eval_crop; }
};

} // namespace mtkd
