#pragma once
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vab/data.hpp"
#include "vab/trainer.hpp"

// Flat key=value run configuration. Unknown keys are rejected so a typo'd
// setting cannot silently fall back to a default. Command-line flags are
// applied through the same setter, after the file, so flags win.

namespace vab {

struct RunConfig {
    TrainConfig train;
    std::string data_dir;      // empty means VAB_DATA_DIR or ./data
    std::string out_dir = "."; // reports and checkpoints land here
    std::size_t train_subset = 0; // use only the first N training rows; 0 = all
    BinarizeMode binarize = BinarizeMode::Threshold;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    // stoull tolerates signs and whitespace; digits only here
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("bad integer for " + key + ": '" + value + "'");
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": '" + value + "'");
    }
}

inline double parse_f64(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad real for " + key + ": '" + value + "'");
    }
    if (used != value.size()) throw ConfigError("bad real for " + key + ": '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw ConfigError("bad boolean for " + key + ": '" + value + "'");
}

inline std::vector<std::size_t> parse_size_list(const std::string& key,
                                                const std::string& value) {
    std::vector<std::size_t> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty element in " + key + ": '" + value + "'");
        out.push_back(parse_u64(key, item));
    }
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

} // namespace detail

/// Apply one key=value setting. Throws ConfigError on unknown keys or
/// malformed values.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    TrainConfig& t = cfg.train;
    if (key == "dim_z") t.dim_z = parse_u64(key, value);
    else if (key == "num_clusters") t.num_clusters = parse_u64(key, value);
    else if (key == "hidden") t.hidden = parse_size_list(key, value);
    else if (key == "epochs") t.epochs = parse_u64(key, value);
    else if (key == "batch_size") t.batch_size = parse_u64(key, value);
    else if (key == "num_draws") t.num_draws = parse_u64(key, value);
    else if (key == "lr0") t.lr0 = parse_f64(key, value);
    else if (key == "lr_decay") t.lr_decay = parse_f64(key, value);
    else if (key == "lr_every") t.lr_every = parse_u64(key, value);
    else if (key == "lr_min") t.lr_min = parse_f64(key, value);
    else if (key == "beta1") t.beta1 = parse_f64(key, value);
    else if (key == "beta2") t.beta2 = parse_f64(key, value);
    else if (key == "adam_eps") t.adam_eps = parse_f64(key, value);
    else if (key == "tau0") t.tau0 = parse_f64(key, value);
    else if (key == "tau_min") t.tau_min = parse_f64(key, value);
    else if (key == "tau_anneal") t.tau_anneal = parse_f64(key, value);
    else if (key == "seed") t.seed = parse_u64(key, value);
    else if (key == "pretrain_epochs") t.pretrain_epochs = parse_u64(key, value);
    else if (key == "pad") t.pad = parse_bool(key, value);
    else if (key == "binarize") {
        cfg.binarize = binarize_mode_from_string(value);
        t.stochastic_binarize = cfg.binarize == BinarizeMode::Stochastic;
    } else if (key == "binarize_threshold") t.binarize_threshold = parse_f64(key, value);
    else if (key == "pixels_per_image") t.pixels_per_image = parse_u64(key, value);
    else if (key == "eval_every") t.eval_every = parse_u64(key, value);
    else if (key == "data_dir") cfg.data_dir = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "train_subset") cfg.train_subset = parse_u64(key, value);
    else throw ConfigError("unknown config key: " + key);
}

/// Parse `key = value` lines; '#' starts a comment, blank lines skipped.
inline void parse_config_text(RunConfig& cfg, const std::string& text,
                              const std::string& origin = "config") {
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key=value, got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        apply_setting(cfg, key, value);
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    parse_config_text(cfg, ss.str(), path);
}

} // namespace vab
