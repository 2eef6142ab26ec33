#include "camera/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "camera/errors.hpp"

namespace camera {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

KeyValueFile parse_lines(std::istream& in, const std::string& origin) {
    KeyValueFile kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + " line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + " line " + std::to_string(lineno) + ": empty key");
        kv.values[key] = value;
    }
    return kv;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": cannot parse number from '" + v + "'");
    }
}

void reject_unknown(const KeyValueFile& kv, const std::set<std::string>& known,
                    const std::string& what) {
    for (const auto& [key, value] : kv.values)
        if (!known.count(key))
            throw ConfigError(what + " config: unknown key '" + key + "'");
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    return parse_lines(f, path.string());
}

KeyValueFile KeyValueFile::parse_string(const std::string& text, const std::string& origin) {
    std::istringstream ss(text);
    return parse_lines(ss, origin);
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : to_double(key, it->second);
}

std::size_t KeyValueFile::get_size(const std::string& key, std::size_t fallback) const {
    const double x = get_double(key, double(fallback));
    if (x < 0 || x != std::floor(x)) throw ConfigError("config key " + key + ": expected a count");
    return std::size_t(x);
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": cannot parse integer from '" + it->second + "'");
    }
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key " + key + ": expected true/false");
}

namespace {

const std::set<std::string> kTrainKeys = {
    "epochs",    "learning_rate", "alpha",       "beta",        "seed",
    "optimizer", "adam_beta1",    "adam_beta2",  "adam_eps",    "entropy_eps",
    "oc_block_gating", "num_layers", "hidden_dim"};

TrainConfig train_from(const KeyValueFile& kv, const TrainConfig& defaults) {
    TrainConfig c = defaults;
    c.epochs = kv.get_size("epochs", c.epochs);
    c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
    c.alpha = kv.get_double("alpha", c.alpha);
    c.beta = kv.get_double("beta", c.beta);
    c.seed = kv.get_u64("seed", c.seed);
    const std::string opt = kv.get_string("optimizer", c.optimizer == Optimizer::Adam ? "adam" : "sgd");
    if (opt == "adam")
        c.optimizer = Optimizer::Adam;
    else if (opt == "sgd")
        c.optimizer = Optimizer::Sgd;
    else
        throw ConfigError("config key optimizer: expected adam or sgd");
    c.adam_beta1 = kv.get_double("adam_beta1", c.adam_beta1);
    c.adam_beta2 = kv.get_double("adam_beta2", c.adam_beta2);
    c.adam_eps = kv.get_double("adam_eps", c.adam_eps);
    c.entropy_eps = kv.get_double("entropy_eps", c.entropy_eps);
    c.oc_block_gating = kv.get_bool("oc_block_gating", c.oc_block_gating);
    c.num_layers = kv.get_size("num_layers", c.num_layers);
    c.hidden_dim = kv.get_size("hidden_dim", c.hidden_dim);
    c.validate();
    return c;
}

}  // namespace

TrainConfig parse_train_config(const KeyValueFile& kv) {
    reject_unknown(kv, kTrainKeys, "train");
    return train_from(kv, TrainConfig{});
}

SynthConfig parse_synth_config(const KeyValueFile& kv) {
    static const std::set<std::string> known = {
        "num_nodes",   "num_communities", "fraud_rate",          "dim",
        "intra_edge_prob", "inter_edge_prob", "structural_camouflage", "semantic_camouflage",
        "noise_sigma", "offset_scale",    "seed"};
    reject_unknown(kv, known, "synth");
    SynthConfig c;
    c.num_nodes = kv.get_size("num_nodes", c.num_nodes);
    c.num_communities = kv.get_size("num_communities", c.num_communities);
    c.fraud_rate = kv.get_double("fraud_rate", c.fraud_rate);
    c.dim = kv.get_size("dim", c.dim);
    c.intra_edge_prob = kv.get_double("intra_edge_prob", c.intra_edge_prob);
    c.inter_edge_prob = kv.get_double("inter_edge_prob", c.inter_edge_prob);
    c.structural_camouflage = kv.get_double("structural_camouflage", c.structural_camouflage);
    c.semantic_camouflage = kv.get_double("semantic_camouflage", c.semantic_camouflage);
    c.noise_sigma = kv.get_double("noise_sigma", c.noise_sigma);
    c.offset_scale = kv.get_double("offset_scale", c.offset_scale);
    c.seed = kv.get_u64("seed", c.seed);
    c.validate();
    return c;
}

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::string train_config_to_string(const TrainConfig& c) {
    std::ostringstream os;
    os << "epochs = " << c.epochs << "\n"
       << "learning_rate = " << fmt(c.learning_rate) << "\n"
       << "alpha = " << fmt(c.alpha) << "\n"
       << "beta = " << fmt(c.beta) << "\n"
       << "seed = " << c.seed << "\n"
       << "optimizer = " << (c.optimizer == Optimizer::Adam ? "adam" : "sgd") << "\n"
       << "adam_beta1 = " << fmt(c.adam_beta1) << "\n"
       << "adam_beta2 = " << fmt(c.adam_beta2) << "\n"
       << "adam_eps = " << fmt(c.adam_eps) << "\n"
       << "entropy_eps = " << fmt(c.entropy_eps) << "\n"
       << "oc_block_gating = " << (c.oc_block_gating ? "true" : "false") << "\n"
       << "num_layers = " << c.num_layers << "\n"
       << "hidden_dim = " << c.hidden_dim << "\n";
    return os.str();
}

std::string synth_config_to_string(const SynthConfig& c) {
    std::ostringstream os;
    os << "num_nodes = " << c.num_nodes << "\n"
       << "num_communities = " << c.num_communities << "\n"
       << "fraud_rate = " << fmt(c.fraud_rate) << "\n"
       << "dim = " << c.dim << "\n"
       << "intra_edge_prob = " << fmt(c.intra_edge_prob) << "\n"
       << "inter_edge_prob = " << fmt(c.inter_edge_prob) << "\n"
       << "structural_camouflage = " << fmt(c.structural_camouflage) << "\n"
       << "semantic_camouflage = " << fmt(c.semantic_camouflage) << "\n"
       << "noise_sigma = " << fmt(c.noise_sigma) << "\n"
       << "offset_scale = " << fmt(c.offset_scale) << "\n"
       << "seed = " << c.seed << "\n";
    return os.str();
}

TrainConfig preset_train_config(const std::string& name) {
    TrainConfig c;
    if (name == "reddit") {
        c.epochs = 1200;
        c.alpha = 5.0;
        c.beta = 0.1;
        c.learning_rate = 1e-3;
    } else if (name == "instagram") {
        c.epochs = 15;
        c.alpha = 10.0;
        c.beta = 10.0;
        c.learning_rate = 5e-5;
    } else if (name == "amazonvideo") {
        c.epochs = 15;
        c.alpha = 0.1;
        c.beta = 1.0;
        c.learning_rate = 5e-5;
    } else if (name == "yelpchi") {
        c.epochs = 450;
        c.alpha = 0.1;
        c.beta = 10.0;
        c.learning_rate = 1e-3;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected reddit, instagram, amazonvideo, yelpchi)");
    }
    return c;
}

std::vector<std::string> preset_names() { return {"reddit", "instagram", "amazonvideo", "yelpchi"}; }

namespace {

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::istringstream ss(value);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        out.push_back(to_double(key, t));
    }
    if (out.empty()) throw ConfigError("sweep config: key " + key + " lists no values");
    return out;
}

}  // namespace

SweepGrid parse_sweep_grid(const KeyValueFile& kv) {
    std::set<std::string> known = kTrainKeys;
    known.insert("alphas");
    known.insert("betas");
    reject_unknown(kv, known, "sweep");
    if (!kv.has("alphas") || !kv.has("betas"))
        throw ConfigError("sweep config: both alphas and betas are required");

    SweepGrid grid;
    grid.alphas = parse_list("alphas", kv.values.at("alphas"));
    grid.betas = parse_list("betas", kv.values.at("betas"));
    KeyValueFile base = kv;
    base.values.erase("alphas");
    base.values.erase("betas");
    grid.base = train_from(base, TrainConfig{});
    return grid;
}

std::vector<std::pair<double, double>> SweepGrid::cells() const {
    std::vector<std::pair<double, double>> out;
    for (double a : alphas)
        for (double b : betas) {
            const std::pair<double, double> cell{a, b};
            if (std::find(out.begin(), out.end(), cell) == out.end()) out.push_back(cell);
        }
    return out;
}

}  // namespace camera
