#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "camera/graph.hpp"

namespace camera {

// ---------------------------------------------------------------------------
// Binary embedding container
//
// magic "CAMEMB00" (8 bytes) | u32 version=1 | u64 num_rows | u64 dim |
// u8 dtype=0 (f32) | payload little-endian f32 row-major
// ---------------------------------------------------------------------------

inline constexpr char kEmbeddingMagic[8] = {'C', 'A', 'M', 'E', 'M', 'B', '0', '0'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Throws DataError on magic/version mismatch, truncated payload (error names
/// the first incomplete row) or non-finite values (error names the row).
FeatureMatrix read_embeddings(const std::filesystem::path& path);

/// Bit-exact round trip with read_embeddings.
void write_embeddings(const FeatureMatrix& m, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

/// Edge list: one edge per line, two whitespace-separated 0-based node ids,
/// '#' lines ignored.
EdgeList read_edge_list(const std::filesystem::path& path);
void write_edge_list(const EdgeList& edges, const std::filesystem::path& path);

/// Label file: one 0/1 per line, line i = node i.
LabelVector read_labels(const std::filesystem::path& path);
void write_labels(const LabelVector& labels, const std::filesystem::path& path);

/// Scores file: one float per line, line i = node i.
std::vector<double> read_scores(const std::filesystem::path& path);
void write_scores(const std::vector<double>& scores, const std::filesystem::path& path);

struct TextRecord {
    std::uint64_t node_id = 0;
    std::string text;
};

/// JSONL corpus: each line {"node_id": int, "text": str}. Blank lines are
/// skipped; malformed lines raise DataError with the line number. node_id
/// must be unique within the file.
std::vector<TextRecord> read_jsonl_texts(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Remote embedding service (optional tooling; embeddings are normally
// consumed pre-computed)
// ---------------------------------------------------------------------------

struct EmbeddingServiceConfig {
    std::string endpoint_url;  // e.g. http://host:port/v1/embeddings
    std::string model_name = "text-embedding-3-small";
    std::size_t batch_size = 16;
    std::chrono::seconds timeout{30};
    std::string auth_token_env;  // env var holding the bearer token; empty = no auth
    int max_attempts = 3;        // per-batch attempts before giving up
};

/// POST {"model": name, "input": [texts]} per batch; expects
/// {"data": [{"embedding": [floats]}, ...]} in input order. Batches are issued
/// sequentially and rows are returned in input order. Throws DataError on
/// exhausted retries, dimension mismatches or a missing auth token.
FeatureMatrix fetch_embeddings(const std::vector<TextRecord>& records,
                               const EmbeddingServiceConfig& config);

// ---------------------------------------------------------------------------
// Dataset directory convention: edges.txt, embeddings.bin, labels.txt
// (optional)
// ---------------------------------------------------------------------------

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

}  // namespace camera
