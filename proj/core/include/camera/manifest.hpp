#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace camera {

/// FNV-1a 64 over the raw file bytes, as a 16-hex-digit string.
std::string file_checksum(const std::filesystem::path& path);

/// Run metadata written next to every command's artifacts. Checksums cover the
/// data artifacts; the manifest itself carries timestamps and is not part of
/// the byte-reproducibility contract.
struct RunManifest {
    std::string command;
    std::string created_utc;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;   // key/value snapshot
    std::map<std::string, std::string> inputs;   // path (relative to manifest) -> checksum
    std::map<std::string, std::string> outputs;  // path (relative to manifest) -> checksum

    void add_input(const std::filesystem::path& base, const std::string& rel);
    void add_output(const std::filesystem::path& base, const std::string& rel);
};

void save_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

/// True iff every recorded output exists under the manifest's directory and
/// its checksum still matches.
bool verify_manifest_outputs(const std::filesystem::path& manifest_path);

std::string utc_timestamp();

}  // namespace camera
