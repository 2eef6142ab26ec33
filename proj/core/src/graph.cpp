#include "camera/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "camera/errors.hpp"

namespace camera {

std::span<const NodeId> Graph::neighbors(NodeId i) const {
    if (i >= num_nodes)
        throw DataError("neighbors: node index " + std::to_string(i) + " out of range (n=" +
                        std::to_string(num_nodes) + ")");
    return {col_indices.data() + row_offsets[i], col_indices.data() + row_offsets[i + 1]};
}

NodeId Graph::degree(NodeId i) const {
    if (i >= num_nodes) throw DataError("degree: node index out of range");
    return degrees[i];
}

Graph build_graph(const EdgeList& edges, std::size_t num_nodes) {
    if (num_nodes == 0) throw DataError("build_graph: empty node set");

    EdgeList canon;
    canon.reserve(edges.size());
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes)
            throw DataError("build_graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") out of range (n=" + std::to_string(num_nodes) + ")");
        if (u == v) continue;  // self-loops dropped; the GCN re-adds them
        canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

    Graph g;
    g.num_nodes = num_nodes;
    g.num_edges = canon.size();
    g.degrees.assign(num_nodes, 0);
    for (const auto& [u, v] : canon) {
        ++g.degrees[u];
        ++g.degrees[v];
    }

    g.row_offsets.assign(num_nodes + 1, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) g.row_offsets[i + 1] = g.row_offsets[i] + g.degrees[i];

    g.col_indices.assign(2 * g.num_edges, 0);
    std::vector<std::size_t> cursor(g.row_offsets.begin(), g.row_offsets.end() - 1);
    // canon is sorted by (u, v), so forward arcs land in increasing order; the
    // reverse arcs also arrive in increasing source order per destination row.
    for (const auto& [u, v] : canon) g.col_indices[cursor[u]++] = v;
    for (const auto& [u, v] : canon) g.col_indices[cursor[v]++] = u;
    for (std::size_t i = 0; i < num_nodes; ++i)
        std::sort(g.col_indices.begin() + g.row_offsets[i], g.col_indices.begin() + g.row_offsets[i + 1]);
    return g;
}

EdgeList edge_dump(const Graph& g) {
    EdgeList out;
    out.reserve(g.num_edges);
    for (NodeId i = 0; i < g.num_nodes; ++i)
        for (NodeId j : g.neighbors(i))
            if (i < j) out.emplace_back(i, j);
    return out;
}

std::size_t LabelVector::fraud_count() const {
    std::size_t c = 0;
    for (auto y : labels) c += (y != 0);
    return c;
}

void Dataset::validate() const {
    if (features.num_rows != graph.num_nodes)
        throw DataError("dataset: features rows (" + std::to_string(features.num_rows) +
                        ") != graph nodes (" + std::to_string(graph.num_nodes) + ")");
    if (features.values.size() != features.num_rows * features.dim)
        throw DataError("dataset: feature buffer length mismatch");
    for (float x : features.values)
        if (!std::isfinite(x)) throw DataError("dataset: non-finite feature value");
    if (labels.present && labels.size() != graph.num_nodes)
        throw DataError("dataset: label length != node count");
    for (auto y : labels.labels)
        if (y > 1) throw DataError("dataset: labels must be 0 or 1");
    if (!node_ids.empty() && node_ids.size() != graph.num_nodes)
        throw DataError("dataset: node_ids length != node count");
}

}  // namespace camera
