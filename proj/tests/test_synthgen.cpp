#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "camera/errors.hpp"
#include "camera/scoring.hpp"
#include "camera/synthgen.hpp"

using namespace camera;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.num_nodes = 400;
    c.num_communities = 3;
    c.fraud_rate = 0.05;
    c.dim = 8;
    c.intra_edge_prob = 0.08;
    c.inter_edge_prob = 0.01;
    c.noise_sigma = 0.3;
    c.offset_scale = 1.0;
    c.seed = 11;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    SynthConfig c = small_config();
    c.fraud_rate = 0.6;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.fraud_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.intra_edge_prob = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.structural_camouflage = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("generation is deterministic per seed") {
    const SynthConfig c = small_config();
    const Dataset a = generate(c);
    const Dataset b = generate(c);
    CHECK(a.graph == b.graph);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);

    SynthConfig c2 = c;
    c2.seed = 12;
    const Dataset other = generate(c2);
    CHECK(a.features.values != other.features.values);
}

TEST_CASE("fraud count is exact and rare") {
    for (std::size_t n : {101, 400, 999}) {
        SynthConfig c = small_config();
        c.num_nodes = n;
        const Dataset ds = generate(c);
        CHECK(ds.labels.fraud_count() == std::size_t(std::llround(0.05 * double(n))));
        CHECK(ds.labels.fraud_count() < n - ds.labels.fraud_count());
    }
}

TEST_CASE("generated graphs are canonical") {
    const Dataset ds = generate(small_config());
    const Graph& g = ds.graph;
    CHECK(g.row_offsets[g.num_nodes] == 2 * g.num_edges);
    std::size_t degree_sum = 0;
    for (NodeId i = 0; i < g.num_nodes; ++i) {
        degree_sum += g.degrees[i];
        const auto nbrs = g.neighbors(i);
        for (std::size_t t = 0; t + 1 < nbrs.size(); ++t) CHECK(nbrs[t] < nbrs[t + 1]);
        for (NodeId j : nbrs) CHECK(j != i);
    }
    CHECK(degree_sum == 2 * g.num_edges);
    CHECK(build_graph(edge_dump(g), g.num_nodes) == g);
}

TEST_CASE("uncamouflaged fraudsters depress local affinity") {
    SynthConfig c = small_config();
    c.structural_camouflage = 0.0;
    c.semantic_camouflage = 0.0;
    const Dataset ds = generate(c);
    const auto [benign_mean, fraud_mean] = affinity_gap(ds);
    CHECK(fraud_mean < benign_mean);
}

TEST_CASE("full semantic camouflage matches the benign feature distribution") {
    // two-sample mean distance below noise_sigma, averaged over seeds; needs
    // enough fraudsters that their random home-community mix averages out
    double mean_dist = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SynthConfig c = small_config();
        c.num_nodes = 1500;
        c.semantic_camouflage = 1.0;
        c.structural_camouflage = 1.0;
        c.seed = seed;
        const Dataset ds = generate(c);

        // compare fraud rows against benign rows of the same neighborhood-free
        // global statistics: overall mean distance
        std::vector<double> mb(c.dim, 0), mf(c.dim, 0);
        std::size_t nb = 0, nf = 0;
        for (std::size_t i = 0; i < ds.graph.num_nodes; ++i) {
            auto& m = ds.labels.labels[i] ? mf : mb;
            auto& n = ds.labels.labels[i] ? nf : nb;
            for (std::size_t j = 0; j < c.dim; ++j) m[j] += ds.features.at(i, j);
            ++n;
        }
        double dist = 0;
        for (std::size_t j = 0; j < c.dim; ++j) {
            const double diff = mb[j] / double(nb) - mf[j] / double(nf);
            dist += diff * diff;
        }
        mean_dist += std::sqrt(dist) / 5.0;
    }
    CHECK(mean_dist < small_config().noise_sigma);
}

TEST_CASE("affinity gap shrinks as semantic camouflage rises") {
    // The coherent malicious direction makes fraud-fraud edges more similar at
    // low sc, so the monotone gap needs the benign-edge share to dominate:
    // structural_camouflage 0.7 with modest feature noise.
    auto gap_at = [](double sc) {
        double gap = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            SynthConfig c;
            c.num_nodes = 800;
            c.num_communities = 3;
            c.dim = 8;
            c.intra_edge_prob = 0.04;
            c.inter_edge_prob = 0.004;
            c.noise_sigma = 0.15;
            c.offset_scale = 1.0;
            c.structural_camouflage = 0.7;
            c.semantic_camouflage = sc;
            c.seed = seed;
            const auto [benign_mean, fraud_mean] = affinity_gap(generate(c));
            gap += (benign_mean - fraud_mean) / 5.0;
        }
        return gap;
    };
    const double g0 = gap_at(0.0);
    const double g05 = gap_at(0.5);
    const double g09 = gap_at(0.9);
    CHECK(g0 > g09);
    CHECK(g0 + 1e-9 >= g05);
    CHECK(g05 + 0.005 >= g09);  // averaged trend, small slack between adjacent knobs
}

TEST_CASE("affinity_gap error paths") {
    SUBCASE("labels required") {
        Dataset ds = generate(small_config());
        ds.labels.present = false;
        CHECK_THROWS_AS(affinity_gap(ds), DataError);
    }
    SUBCASE("all-benign dataset has no fraud mean") {
        Dataset ds = generate(small_config());
        for (auto& y : ds.labels.labels) y = 0;
        CHECK_THROWS_AS(affinity_gap(ds), DataError);
    }
    SUBCASE("identical features give zero gap") {
        Dataset ds = generate(small_config());
        for (auto& x : ds.features.values) x = 1.0f;
        const auto [benign_mean, fraud_mean] = affinity_gap(ds);
        CHECK(benign_mean - fraud_mean == doctest::Approx(0.0));
    }
}

TEST_CASE("infeasible config is rejected") {
    SynthConfig c;
    c.num_nodes = 4;
    c.num_communities = 1;
    c.fraud_rate = 0.05;  // rounds to zero fraud nodes at n = 4
    c.dim = 2;
    c.intra_edge_prob = 0.0;
    c.inter_edge_prob = 0.0;
    CHECK_THROWS_AS(generate(c), ConfigError);  // expected edges < 1

    c.intra_edge_prob = 0.9;
    CHECK_NOTHROW(generate(c));
}
