#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "camera/synthgen.hpp"
#include "camera/training.hpp"

namespace camera {

/// Line-oriented key/value config: `key = value`, '#' comments, blank lines
/// ignored. Unknown keys are rejected by the typed parsers below.
struct KeyValueFile {
    std::map<std::string, std::string> values;

    static KeyValueFile parse(const std::filesystem::path& path);
    static KeyValueFile parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
};

TrainConfig parse_train_config(const KeyValueFile& kv);
SynthConfig parse_synth_config(const KeyValueFile& kv);

std::string train_config_to_string(const TrainConfig& c);
std::string synth_config_to_string(const SynthConfig& c);

/// Per-dataset presets (reddit, instagram, amazonvideo,
/// yelpchi): epochs, alpha, beta, learning rate. Throws ConfigError for an
/// unknown name.
TrainConfig preset_train_config(const std::string& name);
std::vector<std::string> preset_names();

/// Sweep grid: `alphas = 0.1, 1.0` / `betas = ...` plus any train-config keys
/// as the base configuration. Duplicate (alpha, beta) cells are dropped.
struct SweepGrid {
    std::vector<double> alphas;
    std::vector<double> betas;
    TrainConfig base;

    std::vector<std::pair<double, double>> cells() const;  // deduplicated, row-major
};

SweepGrid parse_sweep_grid(const KeyValueFile& kv);

}  // namespace camera
