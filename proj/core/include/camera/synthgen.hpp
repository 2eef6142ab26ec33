#pragma once

#include <cstdint>
#include <utility>

#include "camera/graph.hpp"

namespace camera {

/// Planted-partition benchmark with camouflaged fraudsters. Benign nodes form
/// community-structured graphs with Gaussian features around per-community
/// means; fraudsters are rare, carry a shared malicious offset direction
/// scaled by (1 - semantic_camouflage), and wire a structural_camouflage
/// fraction of their edges to benign nodes of a home community (the rest go
/// to other fraudsters).
struct SynthConfig {
    std::size_t num_nodes = 2000;
    std::size_t num_communities = 4;
    double fraud_rate = 0.05;  // must stay < 0.5 (rarity assumption)
    std::size_t dim = 16;
    double intra_edge_prob = 0.017;
    double inter_edge_prob = 0.0018;
    double structural_camouflage = 0.7;  // in [0,1]
    double semantic_camouflage = 0.7;    // in [0,1]
    double noise_sigma = 0.05;
    double offset_scale = 1.5;  // magnitude of the malicious direction at sc=0
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

/// Deterministic per seed; labels attached. Throws ConfigError on invalid or
/// infeasible configs (expected edge count < 1).
Dataset generate(const SynthConfig& config);

/// Group means of local_affinity (isolated nodes excluded). Throws DataError
/// if labels are missing or either group has no scored member.
std::pair<double, double> affinity_gap(const Dataset& dataset);  // (benign, fraud)

}  // namespace camera
