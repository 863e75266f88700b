// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0
//
// Append-only CSV logs with versioned schemas: per-iteration training rows
// and per-image evaluation tables.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtkd/image.hpp"
#include "mtkd/losses.hpp"

namespace mtkd {

inline constexpr const char* kTrainLogSchema = "mtkd-train-log-v1";
inline constexpr const char* kEvalSchema = "mtkd-eval-v1";

struct TrainLogRow {
    i64 iteration = 0;
    double lr = 0.0;
    double total = 0.0;
    std::optional<double> l_stu, l_dis, l_ka;
    double wall_ms = 0.0;
};

class TrainLogWriter {
public:
    TrainLogWriter(const std::string& path, bool append);
    ~TrainLogWriter();
    void write(const TrainLogRow& row);

private:
    void* file_;
};

std::vector<TrainLogRow> read_train_log(const std::string& path);

// Canonical rendering of every deterministic field (wall time excluded).
std::string train_log_deterministic_view(const std::string& path);

struct EvalRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct EvalTable {
    std::string model_label;
    std::string dataset_label;
    i64 scale = 0;
    std::string mode = "Y";
    i64 crop = 0;
    std::vector<EvalRow> rows;
    EvalRow mean;
    std::string manifest_text; // dataset manifest of the evaluated folder (not serialized)
};

void write_eval_csv(const std::string& path, const EvalTable& table);
EvalTable read_eval_csv(const std::string& path);

// method x dataset table of "PSNR/SSIM" cells, grouped by scale.
std::string render_report(const std::vector<EvalTable>& tables);

} // namespace mtkd
