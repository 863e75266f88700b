// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#include "mtkd/trainlog.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "mtkd/metrics.hpp"

namespace mtkd {

namespace {

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

TrainLogWriter::TrainLogWriter(const std::string& path, bool append) {
    bool fresh = true;
    if (append) {
        std::ifstream probe(path);
        fresh = !probe.good() || probe.peek() == std::ifstream::traits_type::eof();
    }
    std::FILE* f = std::fopen(path.c_str(), append ? "a" : "w");
    if (!f) throw DataError("cannot open training log " + path);
    file_ = f;
    if (fresh || !append) {
        std::fprintf(f, "# schema=%s\n", kTrainLogSchema);
        std::fprintf(f, "iteration,lr,loss_total,L_stu,L_dis,L_KA,wall_ms\n");
        std::fflush(f);
    }
}

TrainLogWriter::~TrainLogWriter() {
    if (file_) std::fclose(static_cast<std::FILE*>(file_));
}

void TrainLogWriter::write(const TrainLogRow& row) {
    std::FILE* f = static_cast<std::FILE*>(file_);
    auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    std::fprintf(f, "%lld,%s,%s,%s,%s,%s,%s\n", static_cast<long long>(row.iteration), fmt_double(row.lr).c_str(),
                 fmt_double(row.total).c_str(), opt(row.l_stu).c_str(), opt(row.l_dis).c_str(),
                 opt(row.l_ka).c_str(), fmt_double(row.wall_ms).c_str());
    std::fflush(f);
}

std::vector<TrainLogRow> read_train_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open training log " + path);
    std::string line;
    if (!std::getline(in, line) || line != std::string("# schema=") + kTrainLogSchema)
        throw DataError(path + ": missing or mismatched train-log schema header");
    std::getline(in, line); // column header
    std::vector<TrainLogRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 7) throw DataError(path + ": malformed row '" + line + "'");
        TrainLogRow r;
        r.iteration = std::stoll(f[0]);
        r.lr = parse_double(f[1]);
        r.total = parse_double(f[2]);
        if (!f[3].empty()) r.l_stu = parse_double(f[3]);
        if (!f[4].empty()) r.l_dis = parse_double(f[4]);
        if (!f[5].empty()) r.l_ka = parse_double(f[5]);
        r.wall_ms = parse_double(f[6]);
        rows.push_back(r);
    }
    return rows;
}

std::string train_log_deterministic_view(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open training log " + path);
    std::ostringstream os;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        if (++n <= 2 || line.empty()) {
            os << line << "\n";
            continue;
        }
        size_t last = line.rfind(',');
        os << line.substr(0, last) << "\n"; // strip wall_ms
    }
    return os.str();
}

void write_eval_csv(const std::string& path, const EvalTable& table) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write evaluation table " + path);
    os << "# schema=" << kEvalSchema << "\n";
    os << "# model=" << table.model_label << "\n";
    os << "# dataset=" << table.dataset_label << "\n";
    os << "# scale=" << table.scale << "\n";
    os << "# mode=" << table.mode << "\n";
    os << "# crop=" << table.crop << "\n";
    os << "name,psnr,ssim\n";
    for (const auto& r : table.rows) os << r.name << "," << format_metric(r.psnr) << "," << format_metric(r.ssim) << "\n";
    os << "mean," << format_metric(table.mean.psnr) << "," << format_metric(table.mean.ssim) << "\n";
}

EvalTable read_eval_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open evaluation table " + path);
    std::string line;
    if (!std::getline(in, line) || line != std::string("# schema=") + kEvalSchema)
        throw DataError(path + ": missing or mismatched eval schema header");
    EvalTable t;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            size_t eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string value = line.substr(eq + 1);
            if (key == "model") t.model_label = value;
            else if (key == "dataset") t.dataset_label = value;
            else if (key == "scale") t.scale = std::stoll(value);
            else if (key == "mode") t.mode = value;
            else if (key == "crop") t.crop = std::stoll(value);
            continue;
        }
        if (line == "name,psnr,ssim" || line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != 3) throw DataError(path + ": malformed row '" + line + "'");
        EvalRow r{f[0], parse_double(f[1]), parse_double(f[2])};
        if (r.name == "mean")
            t.mean = r;
        else
            t.rows.push_back(r);
    }
    return t;
}

std::string render_report(const std::vector<EvalTable>& tables) {
    // scale -> dataset set; rows keyed by (scale, model)
    std::map<i64, std::vector<std::string>> datasets_by_scale;
    std::map<std::pair<i64, std::string>, std::map<std::string, const EvalTable*>> cells;
    for (const auto& t : tables) {
        auto& ds = datasets_by_scale[t.scale];
        if (std::find(ds.begin(), ds.end(), t.dataset_label) == ds.end()) ds.push_back(t.dataset_label);
        cells[{t.scale, t.model_label}][t.dataset_label] = &t;
    }
    std::ostringstream os;
    for (const auto& [scale, datasets] : datasets_by_scale) {
        os << "== scale x" << scale << " ==\n";
        os << "method";
        for (const auto& d : datasets) os << "\t" << d;
        os << "\n";
        for (const auto& [key, row] : cells) {
            if (key.first != scale) continue;
            os << key.second;
            for (const auto& d : datasets) {
                auto it = row.find(d);
                if (it == row.end()) {
                    os << "\t-";
                } else {
                    char buf[64];
                    if (std::isinf(it->second->mean.psnr))
                        std::snprintf(buf, sizeof(buf), "inf/%.4f", it->second->mean.ssim);
                    else
                        std::snprintf(buf, sizeof(buf), "%.2f/%.4f", it->second->mean.psnr, it->second->mean.ssim);
                    os << "\t" << buf;
                }
            }
            os << "\n";
        }
        os << "\n";
    }
    return os.str();
}

} // namespace mtkd
