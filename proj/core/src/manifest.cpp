#include "camera/manifest.hpp"

#include <ctime>
#include <fstream>

#include <json.hpp>

#include "camera/errors.hpp"

namespace camera {

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checksum: cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof buf);
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= std::uint8_t(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void RunManifest::add_input(const std::filesystem::path& base, const std::string& rel) {
    inputs[rel] = file_checksum(base / rel);
}

void RunManifest::add_output(const std::filesystem::path& base, const std::string& rel) {
    outputs[rel] = file_checksum(base / rel);
}

void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["command"] = m.command;
    j["created_utc"] = m.created_utc;
    j["seed"] = m.seed;
    j["config"] = m.config;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    std::ofstream f(path);
    if (!f) throw DataError("cannot write manifest: " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw DataError("manifest: I/O failure on " + path.string());
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    }
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.created_utc = j.value("created_utc", "");
        m.seed = j.value("seed", std::uint64_t(0));
        if (j.contains("config")) m.config = j["config"].get<std::map<std::string, std::string>>();
        if (j.contains("inputs")) m.inputs = j["inputs"].get<std::map<std::string, std::string>>();
        if (j.contains("outputs")) m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest " + path.string() + ": " + e.what());
    }
    return m;
}

bool verify_manifest_outputs(const std::filesystem::path& manifest_path) {
    if (!std::filesystem::exists(manifest_path)) return false;
    RunManifest m;
    try {
        m = load_manifest(manifest_path);
    } catch (const DataError&) {
        return false;
    }
    const std::filesystem::path base = manifest_path.parent_path();
    for (const auto& [rel, sum] : m.outputs) {
        const auto p = base / rel;
        if (!std::filesystem::exists(p)) return false;
        if (file_checksum(p) != sum) return false;
    }
    return true;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace camera
