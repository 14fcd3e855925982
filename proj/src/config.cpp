// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcf/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "mcf/density.hpp"

namespace mcf::config {

namespace {

// ---------------------------------------------------------------------------
// TOML-subset scanner: [section] headers, key = value lines, # comments.
// Values: "string", number, true/false, or a homogeneous [array].
// ---------------------------------------------------------------------------

struct TomlValue {
    enum class Kind { string, number, boolean, num_array, str_array };
    Kind kind = Kind::string;
    std::string str;
    double num = 0.0;
    bool flag = false;
    bool is_integer = false;     // token was a plain unsigned integer
    std::uint64_t integer = 0;   // exact value when is_integer
    std::vector<double> nums;
    std::vector<std::string> strs;
    int line = 0;
    mutable bool used = false;
};

using Section = std::map<std::string, TomlValue>;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// Cuts an unquoted # comment.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& token, TomlValue& out) {
    if (token.empty()) return false;
    char* end = nullptr;
    out.num = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) return false;
    out.is_integer = !token.empty() &&
                     std::all_of(token.begin(), token.end(),
                                 [](unsigned char c) { return std::isdigit(c) != 0; });
    if (out.is_integer) out.integer = std::strtoull(token.c_str(), nullptr, 10);
    return true;
}

/// Splits an array body on top-level commas (commas inside quotes stay).
std::vector<std::string> split_elements(const std::string& body) {
    std::vector<std::string> out;
    std::string cur;
    bool in_string = false;
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty()) out.push_back(last);
    return out;
}

bool parse_value(const std::string& raw, TomlValue& v, std::string& error) {
    if (raw.empty()) {
        error = "missing value";
        return false;
    }
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') {
            error = "unterminated string";
            return false;
        }
        v.kind = TomlValue::Kind::string;
        v.str = raw.substr(1, raw.size() - 2);
        return true;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') {
            error = "unterminated array";
            return false;
        }
        const auto elems = split_elements(raw.substr(1, raw.size() - 2));
        bool any_string = false, any_number = false;
        for (const std::string& e : elems) {
            if (!e.empty() && e.front() == '"') {
                if (e.size() < 2 || e.back() != '"') {
                    error = "unterminated string in array";
                    return false;
                }
                v.strs.push_back(e.substr(1, e.size() - 2));
                any_string = true;
            } else {
                TomlValue elem;
                if (!parse_number(e, elem)) {
                    error = "unparsable array element '" + e + "'";
                    return false;
                }
                v.nums.push_back(elem.num);
                any_number = true;
            }
        }
        if (any_string && any_number) {
            error = "mixed string/number array";
            return false;
        }
        v.kind = any_string ? TomlValue::Kind::str_array : TomlValue::Kind::num_array;
        return true;
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlValue::Kind::boolean;
        v.flag = raw == "true";
        return true;
    }
    if (parse_number(raw, v)) {
        v.kind = TomlValue::Kind::number;
        return true;
    }
    error = "unparsable value '" + raw + "'";
    return false;
}

/// Typed access over the parsed tables; every complaint lands in `errors`
/// so a bad file reports all of its problems in one pass.
class Reader {
public:
    explicit Reader(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::string section;  // "" = root table
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = trim(strip_comment(line));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    fail(lineno, "unterminated section header");
                    continue;
                }
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) fail(lineno, "empty section name");
                sections_[section];
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                fail(lineno, "expected key = value, got '" + line + "'");
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) {
                fail(lineno, "empty key");
                continue;
            }
            TomlValue v;
            v.line = lineno;
            std::string error;
            if (!parse_value(trim(line.substr(eq + 1)), v, error)) {
                fail(lineno, key + ": " + error);
                continue;
            }
            auto [it, inserted] = sections_[section].emplace(key, std::move(v));
            if (!inserted) fail(lineno, "duplicate key '" + qualify(section, key) + "'");
        }
    }

    std::string get_string(const std::string& sec, const std::string& key, std::string fallback,
                           bool required) {
        const TomlValue* v = fetch(sec, key, required);
        if (!v) return fallback;
        if (v->kind != TomlValue::Kind::string) {
            fail(v->line, qualify(sec, key) + ": expected a string");
            return fallback;
        }
        return v->str;
    }

    double get_double(const std::string& sec, const std::string& key, double fallback,
                      bool required) {
        const TomlValue* v = fetch(sec, key, required);
        if (!v) return fallback;
        if (v->kind != TomlValue::Kind::number) {
            fail(v->line, qualify(sec, key) + ": expected a number");
            return fallback;
        }
        return v->num;
    }

    int get_int(const std::string& sec, const std::string& key, int fallback, bool required) {
        const TomlValue* v = fetch(sec, key, required);
        if (!v) return fallback;
        if (v->kind != TomlValue::Kind::number || v->num != std::floor(v->num) ||
            std::abs(v->num) > 2147483647.0) {
            fail(v ? v->line : 0, qualify(sec, key) + ": expected an integer");
            return fallback;
        }
        return static_cast<int>(v->num);
    }

    std::uint64_t get_u64(const std::string& sec, const std::string& key, std::uint64_t fallback,
                          bool required) {
        const TomlValue* v = fetch(sec, key, required);
        if (!v) return fallback;
        if (v->kind != TomlValue::Kind::number || !v->is_integer) {
            fail(v->line, qualify(sec, key) + ": expected an unsigned integer");
            return fallback;
        }
        return v->integer;
    }

    std::vector<double> get_num_array(const std::string& sec, const std::string& key,
                                      std::vector<double> fallback, bool required) {
        const TomlValue* v = fetch(sec, key, required);
        if (!v) return fallback;
        if (v->kind == TomlValue::Kind::num_array) return v->nums;
        if (v->kind == TomlValue::Kind::str_array && v->strs.empty()) return {};  // "[]"
        fail(v->line, qualify(sec, key) + ": expected an array of numbers");
        return fallback;
    }

    std::vector<std::string> get_str_array(const std::string& sec, const std::string& key,
                                           std::vector<std::string> fallback, bool required) {
        const TomlValue* v = fetch(sec, key, required);
        if (!v) return fallback;
        if (v->kind == TomlValue::Kind::str_array) return v->strs;
        if (v->kind == TomlValue::Kind::num_array && v->nums.empty()) return {};
        fail(v->line, qualify(sec, key) + ": expected an array of strings");
        return fallback;
    }

    /// Flags leftovers (typos, stale keys) once all expected keys were read.
    void finish(const std::vector<std::string>& known_sections) {
        for (const auto& [sec, table] : sections_) {
            const bool known = std::find(known_sections.begin(), known_sections.end(), sec) !=
                               known_sections.end();
            if (!known) {
                errors_.push_back("unknown section [" + sec + "]");
                continue;
            }
            for (const auto& [key, v] : table) {
                if (!v.used) fail(v.line, "unknown key '" + qualify(sec, key) + "'");
            }
        }
    }

    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string qualify(const std::string& sec, const std::string& key) {
        return sec.empty() ? key : sec + "." + key;
    }

    void fail(int line, const std::string& message) {
        errors_.push_back("line " + std::to_string(line) + ": " + message);
    }

    const TomlValue* fetch(const std::string& sec, const std::string& key, bool required) {
        auto s = sections_.find(sec);
        if (s != sections_.end()) {
            auto k = s->second.find(key);
            if (k != s->second.end()) {
                k->second.used = true;
                return &k->second;
            }
        }
        if (required) errors_.push_back("missing required key '" + qualify(sec, key) + "'");
        return nullptr;
    }

    std::map<std::string, Section> sections_;
    std::vector<std::string> errors_;
};

std::string format_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.007199254740992e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

const std::vector<std::string> kGeneratorNames = {
    "wrapped_normals_sphere", "checkerboard_sphere",     "five_gaussians_hyperbolic",
    "checkerboard_hyperbolic", "lorenz",                  "vmf_bimodal",
};

}  // namespace

atlas::ModelSpec ModelBlock::to_spec() const {
    atlas::ModelSpec spec;
    spec.ambient_dim = ambient_dim;
    spec.latent_dim = latent_dim;
    spec.n_charts = n_charts;
    spec.index_dim = index_dim;
    spec.chart_layers = chart_layers;
    spec.chart_bins = chart_bins;
    spec.chart_range = chart_range;
    spec.base_layers = base_layers;
    spec.base_bins = base_bins;
    spec.base_range = base_range;
    spec.linear = linear;
    flow::ConditionerSpec cond;
    cond.hidden_layers = hidden_layers;
    cond.hidden_units = hidden_units;
    cond.activation = activation;
    cond.residual_blocks = residual_blocks;
    spec.chart_conditioner = cond;
    spec.base_conditioner = cond;
    return spec;
}

eval::EvalOptions EvalBlock::to_options(std::uint64_t seed) const {
    eval::EvalOptions opts;
    opts.modes.clear();
    for (const std::string& name : modes) opts.modes.push_back(density::mode_from_string(name));
    opts.kde_bandwidth = kde_bandwidth;
    opts.n_model_samples = n_model_samples;
    opts.quadrature_lat = quadrature_lat;
    opts.quadrature_lon = quadrature_lon;
    opts.seed = seed;
    return opts;
}

std::vector<std::string> ExperimentConfig::problems() const {
    std::vector<std::string> out;
    auto complain = [&out](const std::string& message) { out.push_back(message); };

    if (name.empty()) complain("name: must not be empty");

    // Dataset block.
    if (dataset.name.empty()) complain("dataset.name: must not be empty");
    if (dataset.csv_path.empty() &&
        std::find(kGeneratorNames.begin(), kGeneratorNames.end(), dataset.name) ==
            kGeneratorNames.end()) {
        complain("dataset.name: '" + dataset.name +
                 "' is not a generator; set dataset.csv_path to load from CSV");
    }
    if (dataset.n_train < 1) complain("dataset.n_train: must be >= 1");
    if (dataset.n_val < 1) complain("dataset.n_val: must be >= 1");
    if (!dataset.csv_path.empty()) {
        if (dataset.lat_column.empty()) complain("dataset.lat_column: must not be empty");
        if (dataset.lon_column.empty()) complain("dataset.lon_column: must not be empty");
    }
    if (!(dataset.normalize_scale > 0.0) || !std::isfinite(dataset.normalize_scale)) {
        complain("dataset.normalize_scale: must be a positive finite number");
    }
    if (!dataset.normalize_center.empty() &&
        static_cast<int>(dataset.normalize_center.size()) != model.ambient_dim) {
        complain("dataset.normalize_center: length must equal model.ambient_dim");
    }

    // Model block: reuse the spec validator, which states its own reasons.
    try {
        model.to_spec().validate();
    } catch (const McfError& e) {
        complain(std::string("model: ") + e.what());
    }
    if (model.activation != "relu" && model.activation != "tanh") {
        complain("model.activation: must be relu or tanh");
    }
    if (model.hidden_layers < 1) complain("model.hidden_layers: must be >= 1");
    if (model.hidden_units < 1) complain("model.hidden_units: must be >= 1");
    if (model.residual_blocks < 0) complain("model.residual_blocks: must be >= 0");

    // Train block (field-by-field so every problem is listed).
    if (train.recon_epochs < 0) complain("train.recon_epochs: must be >= 0");
    if (train.ml_epochs < 0) complain("train.ml_epochs: must be >= 0");
    if (train.batch_size < 1) complain("train.batch_size: must be >= 1");
    if (!(train.learning_rate > 0.0)) complain("train.learning_rate: must be positive");
    if (train.optimizer != "adam" && train.optimizer != "adamw") {
        complain("train.optimizer: must be adam or adamw");
    }
    if (train.weight_decay < 0.0) complain("train.weight_decay: must be >= 0");
    if (train.recon_clip_norm < 0.0) complain("train.recon_clip_norm: must be >= 0");
    if (train.ml_clip_norm < 0.0) complain("train.ml_clip_norm: must be >= 0");
    if (train.reg_weight < 0.0) complain("train.reg_weight: must be >= 0");
    if (train.patience < 0) complain("train.patience: must be >= 0");
    const std::string& kind = train.lr_schedule.kind;
    if (kind != "constant" && kind != "cosine" && kind != "step") {
        complain("train.lr_schedule: must be constant, cosine, or step");
    } else if (kind == "step") {
        if (train.lr_schedule.decay_every < 1) complain("train.lr_decay_every: must be >= 1");
        if (!(train.lr_schedule.factor > 0.0)) complain("train.lr_factor: must be positive");
    }

    // Eval block.
    if (!(eval.kde_bandwidth > 0.0)) complain("eval.kde_bandwidth: must be positive");
    if (eval.modes.empty()) complain("eval.modes: must list at least one density mode");
    for (const std::string& mode : eval.modes) {
        try {
            density::mode_from_string(mode);
        } catch (const McfError&) {
            complain("eval.modes: unknown mode '" + mode + "'");
        }
    }
    const bool quad_off = eval.quadrature_lat == 0 && eval.quadrature_lon == 0;
    if (!quad_off && (eval.quadrature_lat < 2 || eval.quadrature_lon < 2)) {
        complain("eval.quadrature_lat/lon: both 0 (disabled) or both >= 2");
    }
    if (eval.n_model_samples < 0) complain("eval.n_model_samples: must be >= 0");
    return out;
}

void ExperimentConfig::validate() const {
    const std::vector<std::string> issues = problems();
    if (issues.empty()) return;
    std::string joined = "invalid configuration (" + std::to_string(issues.size()) + " problems):";
    for (const std::string& p : issues) joined += "\n  - " + p;
    throw McfError(joined);
}

ExperimentConfig parse_config(const std::string& text) {
    Reader r(text);
    ExperimentConfig c;

    c.name = r.get_string("", "name", c.name, true);

    c.dataset.name = r.get_string("dataset", "name", c.dataset.name, true);
    c.dataset.n_train = r.get_int("dataset", "n_train", c.dataset.n_train, true);
    c.dataset.n_val = r.get_int("dataset", "n_val", c.dataset.n_val, true);
    c.dataset.seed = r.get_u64("dataset", "seed", c.dataset.seed, true);
    c.dataset.csv_path = r.get_string("dataset", "csv_path", c.dataset.csv_path, false);
    c.dataset.lat_column = r.get_string("dataset", "lat_column", c.dataset.lat_column, false);
    c.dataset.lon_column = r.get_string("dataset", "lon_column", c.dataset.lon_column, false);
    c.dataset.normalize_center =
        r.get_num_array("dataset", "normalize_center", c.dataset.normalize_center, false);
    c.dataset.normalize_scale =
        r.get_double("dataset", "normalize_scale", c.dataset.normalize_scale, false);

    // Every model field is required: a config must read as one complete row
    // of an architecture table.
    c.model.ambient_dim = r.get_int("model", "ambient_dim", c.model.ambient_dim, true);
    c.model.latent_dim = r.get_int("model", "latent_dim", c.model.latent_dim, true);
    c.model.n_charts = r.get_int("model", "n_charts", c.model.n_charts, true);
    c.model.index_dim = r.get_int("model", "index_dim", c.model.index_dim, true);
    c.model.chart_layers = r.get_int("model", "chart_layers", c.model.chart_layers, true);
    c.model.chart_bins = r.get_int("model", "chart_bins", c.model.chart_bins, true);
    c.model.chart_range = r.get_double("model", "chart_range", c.model.chart_range, true);
    c.model.base_layers = r.get_int("model", "base_layers", c.model.base_layers, true);
    c.model.base_bins = r.get_int("model", "base_bins", c.model.base_bins, true);
    c.model.base_range = r.get_double("model", "base_range", c.model.base_range, true);
    c.model.linear = r.get_string("model", "linear", c.model.linear, true);
    c.model.hidden_layers = r.get_int("model", "hidden_layers", c.model.hidden_layers, true);
    c.model.hidden_units = r.get_int("model", "hidden_units", c.model.hidden_units, true);
    c.model.activation = r.get_string("model", "activation", c.model.activation, true);
    c.model.residual_blocks =
        r.get_int("model", "residual_blocks", c.model.residual_blocks, true);

    c.train.recon_epochs = r.get_int("train", "recon_epochs", c.train.recon_epochs, true);
    c.train.ml_epochs = r.get_int("train", "ml_epochs", c.train.ml_epochs, true);
    c.train.batch_size = r.get_int("train", "batch_size", c.train.batch_size, true);
    c.train.learning_rate = r.get_double("train", "learning_rate", c.train.learning_rate, true);
    c.train.optimizer = r.get_string("train", "optimizer", c.train.optimizer, true);
    c.train.weight_decay = r.get_double("train", "weight_decay", c.train.weight_decay, false);
    c.train.lr_schedule.kind =
        r.get_string("train", "lr_schedule", c.train.lr_schedule.kind, false);
    c.train.lr_schedule.decay_every =
        r.get_int("train", "lr_decay_every", c.train.lr_schedule.decay_every, false);
    c.train.lr_schedule.factor =
        r.get_double("train", "lr_factor", c.train.lr_schedule.factor, false);
    c.train.recon_clip_norm =
        r.get_double("train", "recon_clip_norm", c.train.recon_clip_norm, false);
    c.train.ml_clip_norm = r.get_double("train", "ml_clip_norm", c.train.ml_clip_norm, false);
    c.train.reg_weight = r.get_double("train", "reg_weight", c.train.reg_weight, true);
    c.train.patience = r.get_int("train", "patience", c.train.patience, false);
    c.train.seed = r.get_u64("train", "seed", c.train.seed, true);

    c.eval.kde_bandwidth = r.get_double("eval", "kde_bandwidth", c.eval.kde_bandwidth, true);
    c.eval.modes = r.get_str_array("eval", "modes", c.eval.modes, true);
    c.eval.quadrature_lat = r.get_int("eval", "quadrature_lat", c.eval.quadrature_lat, false);
    c.eval.quadrature_lon = r.get_int("eval", "quadrature_lon", c.eval.quadrature_lon, false);
    c.eval.n_model_samples =
        r.get_int("eval", "n_model_samples", c.eval.n_model_samples, false);

    r.finish({"", "dataset", "model", "train", "eval"});
    if (!r.errors().empty()) {
        std::string joined = "config parse failed (" + std::to_string(r.errors().size()) +
                             " problems):";
        for (const std::string& e : r.errors()) joined += "\n  - " + e;
        throw McfError(joined);
    }

    const std::vector<std::string> issues = c.problems();
    if (!issues.empty()) {
        std::string joined =
            "invalid configuration (" + std::to_string(issues.size()) + " problems):";
        for (const std::string& p : issues) joined += "\n  - " + p;
        throw McfError(joined);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw McfError("load_config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "name = " << quote(c.name) << "\n\n";

    out << "[dataset]\n";
    out << "name = " << quote(c.dataset.name) << "\n";
    out << "n_train = " << c.dataset.n_train << "\n";
    out << "n_val = " << c.dataset.n_val << "\n";
    out << "seed = " << c.dataset.seed << "\n";
    out << "csv_path = " << quote(c.dataset.csv_path) << "\n";
    out << "lat_column = " << quote(c.dataset.lat_column) << "\n";
    out << "lon_column = " << quote(c.dataset.lon_column) << "\n";
    out << "normalize_center = [";
    for (std::size_t i = 0; i < c.dataset.normalize_center.size(); ++i) {
        if (i) out << ", ";
        out << format_number(c.dataset.normalize_center[i]);
    }
    out << "]\n";
    out << "normalize_scale = " << format_number(c.dataset.normalize_scale) << "\n\n";

    out << "[model]\n";
    out << "ambient_dim = " << c.model.ambient_dim << "\n";
    out << "latent_dim = " << c.model.latent_dim << "\n";
    out << "n_charts = " << c.model.n_charts << "\n";
    out << "index_dim = " << c.model.index_dim << "\n";
    out << "chart_layers = " << c.model.chart_layers << "\n";
    out << "chart_bins = " << c.model.chart_bins << "\n";
    out << "chart_range = " << format_number(c.model.chart_range) << "\n";
    out << "base_layers = " << c.model.base_layers << "\n";
    out << "base_bins = " << c.model.base_bins << "\n";
    out << "base_range = " << format_number(c.model.base_range) << "\n";
    out << "linear = " << quote(c.model.linear) << "\n";
    out << "hidden_layers = " << c.model.hidden_layers << "\n";
    out << "hidden_units = " << c.model.hidden_units << "\n";
    out << "activation = " << quote(c.model.activation) << "\n";
    out << "residual_blocks = " << c.model.residual_blocks << "\n\n";

    out << "[train]\n";
    out << "recon_epochs = " << c.train.recon_epochs << "\n";
    out << "ml_epochs = " << c.train.ml_epochs << "\n";
    out << "batch_size = " << c.train.batch_size << "\n";
    out << "learning_rate = " << format_number(c.train.learning_rate) << "\n";
    out << "optimizer = " << quote(c.train.optimizer) << "\n";
    out << "weight_decay = " << format_number(c.train.weight_decay) << "\n";
    out << "lr_schedule = " << quote(c.train.lr_schedule.kind) << "\n";
    out << "lr_decay_every = " << c.train.lr_schedule.decay_every << "\n";
    out << "lr_factor = " << format_number(c.train.lr_schedule.factor) << "\n";
    out << "recon_clip_norm = " << format_number(c.train.recon_clip_norm) << "\n";
    out << "ml_clip_norm = " << format_number(c.train.ml_clip_norm) << "\n";
    out << "reg_weight = " << format_number(c.train.reg_weight) << "\n";
    out << "patience = " << c.train.patience << "\n";
    out << "seed = " << c.train.seed << "\n\n";

    out << "[eval]\n";
    out << "kde_bandwidth = " << format_number(c.eval.kde_bandwidth) << "\n";
    out << "modes = [";
    for (std::size_t i = 0; i < c.eval.modes.size(); ++i) {
        if (i) out << ", ";
        out << quote(c.eval.modes[i]);
    }
    out << "]\n";
    out << "quadrature_lat = " << c.eval.quadrature_lat << "\n";
    out << "quadrature_lon = " << c.eval.quadrature_lon << "\n";
    out << "n_model_samples = " << c.eval.n_model_samples << "\n";
    return out.str();
}

void save_config(const ExperimentConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw McfError("save_config: cannot write " + path);
    out << serialize_config(c);
    if (!out) throw McfError("save_config: write to " + path + " failed");
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string canon = serialize_config(c);
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64-bit
    for (unsigned char byte : canon) {
        h ^= byte;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace mcf::config
