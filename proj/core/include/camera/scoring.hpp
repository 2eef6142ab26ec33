#pragma once

#include <cstddef>
#include <vector>

#include "camera/graph.hpp"
#include "camera/model.hpp"

namespace camera {

/// Per-node fraud scores s_i = sigmoid(||h_i^final||_2), so s_i in [0.5, 1).
struct ScoredDataset {
    std::vector<double> scores;
    LabelVector labels;  // optional
};

template <typename Real>
ScoredDataset score_nodes(const ForwardTrace<Real>& trace);

struct MetricResult {
    double auroc = 0;
    double auprc = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// Mann-Whitney statistic P(score_pos > score_neg) + 0.5 P(tie), exact via
/// sorted tie groups. Throws DataError when only one class is present.
double auroc(const std::vector<double>& scores, const LabelVector& labels);

/// Average precision (step-wise); ties resolved pessimistically, negatives
/// ranked before positives at equal scores. Throws DataError when no positive
/// is present.
double auprc(const std::vector<double>& scores, const LabelVector& labels);

MetricResult evaluate(const std::vector<double>& scores, const LabelVector& labels);

/// Mean neighbor cosine similarity on the raw ingested embeddings (the local
/// affinity diagnostic). Isolated nodes get NaN and are excluded from the
/// mean; a zero-norm endpoint makes that pair contribute 0 and is counted.
struct AffinityResult {
    std::vector<double> values;
    double mean = 0;
    std::size_t zero_norm_pairs = 0;
};

AffinityResult local_affinity(const Graph& graph, const FeatureMatrix& features);

}  // namespace camera
