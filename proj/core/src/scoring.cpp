#include "camera/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "camera/errors.hpp"

namespace camera {

template <typename Real>
ScoredDataset score_nodes(const ForwardTrace<Real>& trace) {
    ScoredDataset out;
    const Mat<Real>& h = trace.output;
    out.scores.resize(h.rows);
    for (std::size_t i = 0; i < h.rows; ++i) {
        double sq = 0;
        const Real* r = h.row(i);
        for (std::size_t c = 0; c < h.cols; ++c) sq += double(r[c]) * double(r[c]);
        const double norm = std::sqrt(sq);
        out.scores[i] = 1.0 / (1.0 + std::exp(-norm));
    }
    return out;
}

template ScoredDataset score_nodes<float>(const ForwardTrace<float>&);
template ScoredDataset score_nodes<double>(const ForwardTrace<double>&);

namespace {

void check_aligned(const std::vector<double>& scores, const LabelVector& labels) {
    if (!labels.present) throw DataError("metrics: labels are required");
    if (scores.size() != labels.size()) throw DataError("metrics: scores/labels length mismatch");
    for (double s : scores)
        if (!std::isfinite(s)) throw DataError("metrics: non-finite score");
}

}  // namespace

double auroc(const std::vector<double>& scores, const LabelVector& labels) {
    check_aligned(scores, labels);
    const std::size_t pos = labels.fraud_count();
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw DataError("auroc: undefined for single-class labels (positives=" + std::to_string(pos) +
                        ")");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks within tie groups, then the Mann-Whitney U statistic
    double pos_rank_sum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * double(i + 1 + j);  // 1-based ranks i+1 .. j
        for (std::size_t t = i; t < j; ++t)
            if (labels.labels[order[t]]) pos_rank_sum += avg_rank;
        i = j;
    }
    const double u = pos_rank_sum - 0.5 * double(pos) * double(pos + 1);
    return u / (double(pos) * double(neg));
}

double auprc(const std::vector<double>& scores, const LabelVector& labels) {
    check_aligned(scores, labels);
    const std::size_t pos = labels.fraud_count();
    if (pos == 0) throw DataError("auprc: undefined without positive labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    // descending score; at equal scores negatives come first (pessimistic)
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (labels.labels[a] != labels.labels[b]) return labels.labels[a] < labels.labels[b];
        return a < b;
    });

    double ap = 0;
    std::size_t tp = 0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
        if (labels.labels[order[rank - 1]]) {
            ++tp;
            ap += double(tp) / double(rank);
        }
    }
    return ap / double(pos);
}

MetricResult evaluate(const std::vector<double>& scores, const LabelVector& labels) {
    MetricResult r;
    r.positives = labels.fraud_count();
    r.negatives = labels.size() - r.positives;
    r.auroc = auroc(scores, labels);
    r.auprc = auprc(scores, labels);
    return r;
}

AffinityResult local_affinity(const Graph& graph, const FeatureMatrix& features) {
    if (features.num_rows != graph.num_nodes)
        throw DataError("local_affinity: feature rows != node count");
    const std::size_t d = features.dim;

    std::vector<double> norms(graph.num_nodes);
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        double sq = 0;
        const float* r = features.row(i);
        for (std::size_t c = 0; c < d; ++c) sq += double(r[c]) * double(r[c]);
        norms[i] = std::sqrt(sq);
    }

    AffinityResult result;
    result.values.assign(graph.num_nodes, std::numeric_limits<double>::quiet_NaN());
    double sum = 0;
    std::size_t counted = 0;
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        const auto nbrs = graph.neighbors(i);
        if (nbrs.empty()) continue;  // isolated: excluded from the mean
        double acc = 0;
        for (NodeId j : nbrs) {
            if (norms[i] == 0.0 || norms[j] == 0.0) {
                ++result.zero_norm_pairs;
                continue;  // pair contributes 0
            }
            double dot = 0;
            const float* xi = features.row(i);
            const float* xj = features.row(j);
            for (std::size_t c = 0; c < d; ++c) dot += double(xi[c]) * double(xj[c]);
            acc += dot / (norms[i] * norms[j]);
        }
        result.values[i] = acc / double(nbrs.size());
        sum += result.values[i];
        ++counted;
    }
    result.mean = counted ? sum / double(counted) : 0.0;
    return result;
}

}  // namespace camera
