// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mcf::checkpoint {

namespace {

constexpr char kParamsMagic[8] = {'M', 'C', 'F', 'P', 'R', 'M', '0', '1'};
constexpr char kOptMagic[8] = {'M', 'C', 'F', 'O', 'P', 'T', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t take_u64(std::istream& in, const std::string& what) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw McfError("checkpoint: truncated file while reading " + what);
    return v;
}

void put_block(std::ostream& out, const double* data, std::uint64_t rows, std::uint64_t cols) {
    put_u64(out, rows);
    put_u64(out, cols);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(rows * cols * sizeof(double)));
}

void take_block(std::istream& in, double* data, std::uint64_t rows, std::uint64_t cols,
                const std::string& what) {
    const std::uint64_t r = take_u64(in, what + " rows");
    const std::uint64_t c = take_u64(in, what + " cols");
    if (r != rows || c != cols) {
        throw McfError("checkpoint: " + what + " has shape " + std::to_string(r) + "x" +
                       std::to_string(c) + ", model expects " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw McfError("checkpoint: truncated file while reading " + what);
}

void check_magic(std::istream& in, const char (&magic)[8], const std::string& path) {
    char got[8];
    in.read(got, 8);
    if (!in || std::memcmp(got, magic, 8) != 0) {
        throw McfError("checkpoint: " + path + " is not a recognized checkpoint file");
    }
}

void check_hash(std::uint64_t stored, std::uint64_t expected, const std::string& path) {
    if (stored != expected) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "config-hash mismatch: %s was written under %016llx, current "
                      "configuration hashes to %016llx",
                      path.c_str(), static_cast<unsigned long long>(stored),
                      static_cast<unsigned long long>(expected));
        throw McfError(std::string("checkpoint: ") + buf);
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_params(const std::string& path, std::uint64_t hash, atlas::Model& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw McfError("checkpoint: cannot write " + path);
    out.write(kParamsMagic, 8);
    put_u64(out, hash);
    const std::vector<Arr*> params = m.all_parameters();
    put_u64(out, 1 + params.size());
    put_block(out, m.centers.data(), static_cast<std::uint64_t>(m.centers.rows()),
              static_cast<std::uint64_t>(m.centers.cols()));
    for (const Arr* p : params) {
        put_block(out, p->data(), static_cast<std::uint64_t>(p->rows()),
                  static_cast<std::uint64_t>(p->cols()));
    }
    if (!out) throw McfError("checkpoint: write to " + path + " failed");
}

void read_params(const std::string& path, std::uint64_t hash, atlas::Model& m) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw McfError("checkpoint: cannot open " + path);
    check_magic(in, kParamsMagic, path);
    check_hash(take_u64(in, "config hash"), hash, path);
    const std::vector<Arr*> params = m.all_parameters();
    const std::uint64_t n = take_u64(in, "array count");
    if (n != 1 + params.size()) {
        throw McfError("checkpoint: " + path + " holds " + std::to_string(n) +
                       " arrays, model expects " + std::to_string(1 + params.size()));
    }
    take_block(in, m.centers.data(), static_cast<std::uint64_t>(m.centers.rows()),
               static_cast<std::uint64_t>(m.centers.cols()), "chart centers");
    int index = 0;
    for (Arr* p : params) {
        take_block(in, p->data(), static_cast<std::uint64_t>(p->rows()),
                   static_cast<std::uint64_t>(p->cols()),
                   "parameter array " + std::to_string(index++));
    }
}

void write_optimizer(const std::string& path, std::uint64_t hash,
                     const train::TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw McfError("checkpoint: cannot write " + path);
    out.write(kOptMagic, 8);
    put_u64(out, hash);
    auto put_bank = [&out](int steps, const std::vector<double>& bank) {
        put_u64(out, static_cast<std::uint64_t>(steps));
        put_u64(out, bank.size());
        out.write(reinterpret_cast<const char*>(bank.data()),
                  static_cast<std::streamsize>(bank.size() * sizeof(double)));
    };
    put_bank(state.recon_steps, state.recon_optimizer_state);
    put_bank(state.ml_steps, state.ml_optimizer_state);
    if (!out) throw McfError("checkpoint: write to " + path + " failed");
}

void write_rng(const std::string& path, const train::TrainState& state) {
    std::ofstream out(path);
    if (!out) throw McfError("checkpoint: cannot write " + path);
    out << "mcf-rng v1\n";
    out << "recon " << (state.recon_rng_state.empty() ? "-" : state.recon_rng_state) << "\n";
    out << "ml " << (state.ml_rng_state.empty() ? "-" : state.ml_rng_state) << "\n";
    if (!out) throw McfError("checkpoint: write to " + path + " failed");
}

void write_metrics(const std::string& path, const std::vector<train::MetricsRow>& history) {
    std::ofstream out(path);
    if (!out) throw McfError("checkpoint: cannot write " + path);
    out << "epoch,phase,train_loss,val_metric\n";
    for (const train::MetricsRow& row : history) {
        out << row.epoch << "," << row.phase << "," << format_double(row.train_loss) << ","
            << format_double(row.val_metric) << "\n";
    }
    if (!out) throw McfError("checkpoint: write to " + path + " failed");
}

std::vector<train::MetricsRow> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw McfError("checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "epoch,phase,train_loss,val_metric") {
        throw McfError("checkpoint: " + path + " is not a metrics file");
    }
    std::vector<train::MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string epoch, phase, loss, val;
        if (!std::getline(ss, epoch, ',') || !std::getline(ss, phase, ',') ||
            !std::getline(ss, loss, ',') || !std::getline(ss, val)) {
            throw McfError("checkpoint: malformed metrics row '" + line + "'");
        }
        train::MetricsRow row;
        row.epoch = std::stoi(epoch);
        row.phase = phase;
        row.train_loss = std::stod(loss);
        row.val_metric = std::stod(val);
        rows.push_back(row);
    }
    return rows;
}

void save(const std::string& dir, const config::ExperimentConfig& cfg, atlas::Model& m,
          const train::TrainState& state) {
    std::filesystem::create_directories(dir);
    const std::uint64_t hash = config::config_hash(cfg);
    config::save_config(cfg, dir + "/config.toml");
    write_params(dir + "/params.bin", hash, m);
    write_optimizer(dir + "/optimizer.bin", hash, state);
    write_rng(dir + "/rng.bin", state);
    write_metrics(dir + "/metrics.csv", state.history);
}

Loaded load(const std::string& dir) {
    config::ExperimentConfig cfg = config::load_config(dir + "/config.toml");
    atlas::Model model(cfg.model.to_spec(), cfg.train.seed);
    read_params(dir + "/params.bin", config::config_hash(cfg), model);
    return {std::move(cfg), std::move(model)};
}

}  // namespace mcf::checkpoint
