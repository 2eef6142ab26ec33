#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "camera/errors.hpp"
#include "camera/graph.hpp"
#include "camera/rng.hpp"

using namespace camera;

TEST_CASE("build_graph dedups and drops self loops") {
    const Graph g = build_graph({{0, 1}, {1, 0}, {1, 1}}, 2);
    CHECK(g.num_edges == 1);
    CHECK(g.degrees == std::vector<NodeId>{1, 1});
}

TEST_CASE("build_graph empty edge list") {
    const Graph g = build_graph({}, 3);
    CHECK(g.num_edges == 0);
    CHECK(g.degrees == std::vector<NodeId>{0, 0, 0});
    CHECK(g.row_offsets == std::vector<std::size_t>{0, 0, 0, 0});
}

TEST_CASE("build_graph triangle CSR layout") {
    const Graph g = build_graph({{0, 1}, {1, 2}, {0, 2}}, 3);
    CHECK(g.row_offsets == std::vector<std::size_t>{0, 2, 4, 6});
    CHECK(g.col_indices == std::vector<NodeId>{1, 2, 0, 2, 0, 1});
}

TEST_CASE("build_graph rejects bad input") {
    CHECK_THROWS_AS(build_graph({{0, 5}}, 3), DataError);
    CHECK_THROWS_AS(build_graph({}, 0), DataError);
}

TEST_CASE("neighbors") {
    const Graph tri = build_graph({{0, 1}, {1, 2}, {0, 2}}, 3);
    const auto n0 = tri.neighbors(0);
    CHECK(std::vector<NodeId>(n0.begin(), n0.end()) == std::vector<NodeId>{1, 2});

    const Graph path = build_graph({{0, 1}, {1, 2}}, 3);
    const auto n1 = path.neighbors(1);
    CHECK(std::vector<NodeId>(n1.begin(), n1.end()) == std::vector<NodeId>{0, 2});

    const Graph iso = build_graph({{0, 1}}, 3);
    CHECK(iso.neighbors(2).empty());
    CHECK_THROWS_AS(iso.neighbors(3), DataError);
}

TEST_CASE("random graphs satisfy canonical invariants") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(30);
        EdgeList edges;
        const std::size_t m = rng.uniform_index(120);
        for (std::size_t e = 0; e < m; ++e)
            edges.emplace_back(NodeId(rng.uniform_index(n)), NodeId(rng.uniform_index(n)));
        const Graph g = build_graph(edges, n);

        CHECK(g.row_offsets.size() == n + 1);
        CHECK(g.row_offsets[n] == 2 * g.num_edges);
        std::size_t degree_sum = 0;
        for (NodeId i = 0; i < n; ++i) {
            CHECK(g.degrees[i] == g.row_offsets[i + 1] - g.row_offsets[i]);
            degree_sum += g.degrees[i];
            const auto nbrs = g.neighbors(i);
            for (std::size_t t = 0; t + 1 < nbrs.size(); ++t) CHECK(nbrs[t] < nbrs[t + 1]);
            for (NodeId j : nbrs) {
                CHECK(j != i);
                const auto back = g.neighbors(j);
                CHECK(std::binary_search(back.begin(), back.end(), i));  // symmetry
            }
        }
        CHECK(degree_sum == 2 * g.num_edges);

        // canonical round trip
        CHECK(build_graph(edge_dump(g), n) == g);
    }
}

TEST_CASE("dataset validation") {
    Dataset ds;
    ds.graph = build_graph({{0, 1}}, 2);
    ds.features = FeatureMatrix(2, 3);
    ds.validate();

    ds.features = FeatureMatrix(3, 3);
    CHECK_THROWS_AS(ds.validate(), DataError);

    ds.features = FeatureMatrix(2, 3);
    ds.features.at(1, 2) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(ds.validate(), DataError);

    ds.features.at(1, 2) = 0.0f;
    ds.labels.present = true;
    ds.labels.labels = {0};
    CHECK_THROWS_AS(ds.validate(), DataError);
    ds.labels.labels = {0, 1};
    ds.validate();
}
