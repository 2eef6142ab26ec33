#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace camera {

using NodeId = std::uint32_t;
using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

/// Undirected graph in canonical CSR form: no self-loops, no duplicate edges,
/// each undirected edge stored in both directions, neighbor lists strictly
/// increasing. Immutable after construction; safe for concurrent reads.
struct Graph {
    std::size_t num_nodes = 0;
    std::size_t num_edges = 0;  // unique undirected edges
    std::vector<std::size_t> row_offsets;
    std::vector<NodeId> col_indices;
    std::vector<NodeId> degrees;

    std::span<const NodeId> neighbors(NodeId i) const;
    NodeId degree(NodeId i) const;

    bool operator==(const Graph& o) const = default;
};

/// Canonicalizes an arbitrary edge dump: validates indices, drops self-loops,
/// deduplicates, symmetrizes. Throws DataError on out-of-range indices or an
/// empty node set.
Graph build_graph(const EdgeList& edges, std::size_t num_nodes);

/// Unique undirected edges with u < v, sorted. build_graph(edge_dump(g), n) == g.
EdgeList edge_dump(const Graph& g);

/// Dense row-major n x d feature matrix, f32 storage to match the on-disk
/// embedding format.
struct FeatureMatrix {
    std::size_t num_rows = 0;
    std::size_t dim = 0;
    std::vector<float> values;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t n, std::size_t d) : num_rows(n), dim(d), values(n * d, 0.0f) {}

    float* row(std::size_t i) { return values.data() + i * dim; }
    const float* row(std::size_t i) const { return values.data() + i * dim; }
    float& at(std::size_t i, std::size_t j) { return values[i * dim + j]; }
    float at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }

    bool operator==(const FeatureMatrix& o) const = default;
};

/// Ground-truth labels, evaluation-only (never seen by training).
struct LabelVector {
    std::vector<std::uint8_t> labels;  // 0 benign, 1 fraud
    bool present = false;

    std::size_t size() const { return labels.size(); }
    std::size_t fraud_count() const;

    bool operator==(const LabelVector& o) const = default;
};

struct Dataset {
    Graph graph;
    FeatureMatrix features;
    LabelVector labels;                 // optional: labels.present
    std::vector<std::string> node_ids;  // optional external identifiers

    /// Throws DataError if shapes disagree or features are non-finite.
    void validate() const;
};

}  // namespace camera
