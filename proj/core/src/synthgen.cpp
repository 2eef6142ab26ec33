#include "camera/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camera/errors.hpp"
#include "camera/rng.hpp"
#include "camera/scoring.hpp"

namespace camera {

void SynthConfig::validate() const {
    if (num_nodes < 2) throw ConfigError("synth: num_nodes must be >= 2");
    if (num_communities < 1) throw ConfigError("synth: num_communities must be >= 1");
    if (!(fraud_rate > 0.0) || !(fraud_rate < 0.5))
        throw ConfigError("synth: fraud_rate must lie in (0, 0.5)");
    if (dim < 1) throw ConfigError("synth: dim must be >= 1");
    for (double p : {intra_edge_prob, inter_edge_prob, structural_camouflage, semantic_camouflage})
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synth: probabilities must lie in [0, 1]");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
    if (!(offset_scale >= 0.0)) throw ConfigError("synth: offset_scale must be >= 0");
}

namespace {

// Emits each index j in [first, count) with probability p, via geometric
// skipping - O(successes) instead of O(candidates).
template <typename Emit>
void sample_row(Rng& rng, double p, std::size_t first, std::size_t count, Emit&& emit) {
    if (p <= 0.0 || first >= count) return;
    if (p >= 1.0) {
        for (std::size_t j = first; j < count; ++j) emit(j);
        return;
    }
    const double log_q = std::log1p(-p);
    long long cursor = static_cast<long long>(first) - 1;
    while (true) {
        const double u = rng.uniform();
        const double skip = std::floor(std::log1p(-u) / log_q);
        if (!(skip < 9e15)) break;
        cursor += static_cast<long long>(skip) + 1;
        if (cursor >= static_cast<long long>(count)) break;
        emit(std::size_t(cursor));
    }
}

std::vector<double> unit_gaussian(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0;
    do {
        norm = 0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace

Dataset generate(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);

    const std::size_t n = config.num_nodes;
    const std::size_t num_fraud = std::size_t(std::llround(config.fraud_rate * double(n)));
    const std::size_t num_benign = n - num_fraud;
    const std::size_t k = config.num_communities;

    // fraud ids: partial Fisher-Yates sample of the node set
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < num_fraud; ++i)
        std::swap(perm[i], perm[i + rng.uniform_index(n - i)]);
    std::vector<NodeId> fraud_ids(perm.begin(), perm.begin() + num_fraud);
    std::sort(fraud_ids.begin(), fraud_ids.end());

    LabelVector labels;
    labels.present = true;
    labels.labels.assign(n, 0);
    for (NodeId f : fraud_ids) labels.labels[f] = 1;

    // benign community assignment (round robin over benign order), fraud homes
    std::vector<std::uint32_t> community(n, 0);
    std::vector<std::vector<NodeId>> members(k);
    std::size_t benign_seen = 0;
    for (NodeId i = 0; i < n; ++i) {
        if (labels.labels[i]) continue;
        const std::uint32_t c = std::uint32_t(benign_seen % k);
        community[i] = c;
        members[c].push_back(i);
        ++benign_seen;
    }
    for (NodeId f : fraud_ids) community[f] = std::uint32_t(rng.uniform_index(k));

    // community means: random unit vectors
    std::vector<std::vector<double>> means(k);
    for (auto& m : means) m = unit_gaussian(rng, config.dim);

    // malicious direction, orthogonalized against the span of the means
    std::vector<double> direction = unit_gaussian(rng, config.dim);
    {
        std::vector<std::vector<double>> basis;
        for (const auto& m : means) {
            std::vector<double> b = m;
            for (const auto& q : basis) {
                double dot = 0;
                for (std::size_t c = 0; c < config.dim; ++c) dot += b[c] * q[c];
                for (std::size_t c = 0; c < config.dim; ++c) b[c] -= dot * q[c];
            }
            double norm = 0;
            for (double x : b) norm += x * x;
            if (norm > 1e-12) {
                norm = std::sqrt(norm);
                for (double& x : b) x /= norm;
                basis.push_back(std::move(b));
            }
        }
        for (const auto& q : basis) {
            double dot = 0;
            for (std::size_t c = 0; c < config.dim; ++c) dot += direction[c] * q[c];
            for (std::size_t c = 0; c < config.dim; ++c) direction[c] -= dot * q[c];
        }
        double norm = 0;
        for (double x : direction) norm += x * x;
        if (norm > 1e-12) {
            norm = std::sqrt(norm);
            for (double& x : direction) x /= norm;
        } else {
            direction = unit_gaussian(rng, config.dim);  // means span the space
        }
    }

    // features, unit-normalized like typical embedding-service output (keeps
    // the raw norm from leaking the offset; the signal is directional)
    FeatureMatrix features(n, config.dim);
    const double offset = (1.0 - config.semantic_camouflage) * config.offset_scale;
    std::vector<double> row(config.dim);
    for (NodeId i = 0; i < n; ++i) {
        const auto& mean = means[community[i]];
        const bool fraud = labels.labels[i] != 0;
        double norm = 0;
        for (std::size_t c = 0; c < config.dim; ++c) {
            double x = mean[c] + config.noise_sigma * rng.normal();
            if (fraud) x += offset * direction[c];
            row[c] = x;
            norm += x * x;
        }
        norm = norm > 0 ? std::sqrt(norm) : 1.0;
        for (std::size_t c = 0; c < config.dim; ++c) features.at(i, c) = float(row[c] / norm);
    }

    // benign-benign edges: planted partition
    EdgeList edges;
    double expected_edges = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double sz = double(members[c].size());
        expected_edges += 0.5 * sz * (sz - 1.0) * config.intra_edge_prob;
    }
    for (std::size_t c1 = 0; c1 < k; ++c1)
        for (std::size_t c2 = c1 + 1; c2 < k; ++c2)
            expected_edges += double(members[c1].size()) * double(members[c2].size()) *
                              config.inter_edge_prob;

    for (std::size_t c = 0; c < k; ++c) {
        const auto& ids = members[c];
        for (std::size_t i = 0; i < ids.size(); ++i)
            sample_row(rng, config.intra_edge_prob, i + 1, ids.size(),
                       [&](std::size_t j) { edges.emplace_back(ids[i], ids[j]); });
    }
    for (std::size_t c1 = 0; c1 < k; ++c1)
        for (std::size_t c2 = c1 + 1; c2 < k; ++c2) {
            const auto& a = members[c1];
            const auto& b = members[c2];
            for (NodeId u : a)
                sample_row(rng, config.inter_edge_prob, 0, b.size(),
                           [&](std::size_t j) { edges.emplace_back(u, b[j]); });
        }

    // fraudster wiring: target degree matches the expected benign degree
    const double avg_benign_degree =
        num_benign > 0 ? 2.0 * expected_edges / double(num_benign) : 0.0;
    const std::size_t fraud_degree = std::size_t(std::max(1.0, std::round(avg_benign_degree)));
    expected_edges += double(num_fraud) * double(fraud_degree);
    if (expected_edges < 1.0) throw ConfigError("synth: config infeasible, expected edges < 1");

    for (NodeId f : fraud_ids) {
        const auto& home = members[community[f]];
        for (std::size_t e = 0; e < fraud_degree; ++e) {
            const bool to_benign =
                rng.bernoulli(config.structural_camouflage) || num_fraud < 2;
            if (to_benign) {
                if (home.empty()) continue;
                edges.emplace_back(f, home[rng.uniform_index(home.size())]);
            } else if (rng.bernoulli(0.5)) {
                // fraud-fraud edges count for both endpoints, so draw at half
                // rate to keep the realized benign share at structural_camouflage
                NodeId other = f;
                while (other == f) other = fraud_ids[rng.uniform_index(num_fraud)];
                edges.emplace_back(f, other);
            }
        }
    }

    Dataset ds;
    ds.graph = build_graph(edges, n);
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

std::pair<double, double> affinity_gap(const Dataset& dataset) {
    if (!dataset.labels.present) throw DataError("affinity_gap: labels required");
    const AffinityResult aff = local_affinity(dataset.graph, dataset.features);
    double sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < aff.values.size(); ++i) {
        if (std::isnan(aff.values[i])) continue;  // isolated
        const int y = dataset.labels.labels[i];
        sum[y] += aff.values[i];
        ++count[y];
    }
    if (count[0] == 0) throw DataError("affinity_gap: benign mean undefined (no scored benign node)");
    if (count[1] == 0) throw DataError("affinity_gap: fraud mean undefined (no scored fraud node)");
    return {sum[0] / double(count[0]), sum[1] / double(count[1])};
}

}  // namespace camera
