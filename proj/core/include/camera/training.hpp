#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "camera/graph.hpp"
#include "camera/model.hpp"

namespace camera {

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// sum_l sum_{k enabled} (1/N) sum_i ||e_k^[l](h_i)||^2; masked experts
/// contribute zero.
template <typename Real>
double loss_expert(const ForwardTrace<Real>& trace);

/// sum_l sum_k -(1/N) sum_i g_{i,k} log(g_{i,k} + eps).
template <typename Real>
double loss_gating(const ForwardTrace<Real>& trace, double eps = 1e-8);

/// (1/N) sum_i BCE(s_i, 0) = -(1/N) sum_i log(1 - s_i), for sigmoid scores.
double loss_oc(const std::vector<double>& scores);

/// Same value computed from the final-embedding norms via softplus; this is
/// the path the trainer uses (stable for large norms).
template <typename Real>
double loss_oc_from_trace(const ForwardTrace<Real>& trace);

struct LossBreakdown {
    double l_expert = 0;
    double l_gating = 0;
    double l_oc = 0;
    double l_total = 0;
    double alpha = 0;
    double beta = 0;
};

template <typename Real>
LossBreakdown compute_losses(const ForwardTrace<Real>& trace, double alpha, double beta,
                             double entropy_eps = 1e-8);

// ---------------------------------------------------------------------------
// Gradients under the loss-routing rules
// ---------------------------------------------------------------------------

template <typename Real>
struct LayerGrads {
    Mat<Real> graph_weight;
    Mat<Real> encoder_weight;
    std::vector<Real> encoder_bias;
    Mat<Real> decoder_weight;
    std::vector<Real> decoder_bias;
    Mat<Real> global_weight;
    std::vector<Real> global_bias;
    Mat<Real> gating_weight;
    std::vector<Real> gating_bias;
};

template <typename Real>
struct ModelGrads {
    std::vector<LayerGrads<Real>> layers;

    static ModelGrads zeros_like(const MoeModel<Real>& model);
    void add_scaled(const ModelGrads& other, Real scale);
    std::vector<TensorView<Real>> views();  // same order/names as model tensor_views
};

/// The three routed gradient contributions of the total objective
///   L = L_expert + alpha * L_gating + beta * L_OC:
/// - expert: each expert-loss term reaches only that expert's own tensors at
///   its own layer (layer inputs are treated as constants),
/// - gating: the entropy term reaches only the gating tensors of its layer,
/// - oc: flows end-to-end through every layer, expert and gate.
template <typename Real>
struct BackwardResult {
    ModelGrads<Real> expert;
    ModelGrads<Real> gating;
    ModelGrads<Real> oc;

    /// grad(L_total) = expert + alpha * gating + beta * oc.
    ModelGrads<Real> total(Real alpha, Real beta) const;
};

struct BackwardOptions {
    double entropy_eps = 1e-8;
    // Experiment knob: also treat the gates as constants inside the OC term
    // (by default only the expert and gating losses carry blocks).
    bool oc_block_gating = false;
};

/// Throws NumericError naming the tensor if any gradient is non-finite.
template <typename Real>
BackwardResult<Real> backward(const MoeModel<Real>& model, const Graph& g,
                              const ForwardTrace<Real>& trace, const BackwardOptions& opts = {});

// Per-term gradients, used by the routing-isolation checks. backward() equals
// the sum of these over layers/experts.
template <typename Real>
ModelGrads<Real> expert_term_gradient(const MoeModel<Real>& model, const Graph& g,
                                      const ForwardTrace<Real>& trace, std::size_t layer, int expert);
template <typename Real>
ModelGrads<Real> gating_term_gradient(const MoeModel<Real>& model, const ForwardTrace<Real>& trace,
                                      std::size_t layer, double entropy_eps = 1e-8);
template <typename Real>
ModelGrads<Real> oc_gradient(const MoeModel<Real>& model, const Graph& g,
                             const ForwardTrace<Real>& trace, const BackwardOptions& opts = {});

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

enum class Optimizer : std::uint8_t { Adam = 0, Sgd = 1 };

template <typename Real>
struct AdamState {
    std::vector<Real> m;
    std::vector<Real> v;
    std::uint64_t step = 0;

    static AdamState sized_for(const MoeModel<Real>& model);
};

/// Standard Adam with bias correction over the flat parameter order of
/// tensor_views(). Zero gradient leaves parameters unchanged only when the
/// moments are zero; moments always decay.
template <typename Real>
void adam_step(MoeModel<Real>& model, ModelGrads<Real>& grads, AdamState<Real>& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

template <typename Real>
void sgd_step(MoeModel<Real>& model, ModelGrads<Real>& grads, double lr);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    double alpha = 1.0;
    double beta = 10.0;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double entropy_eps = 1e-8;
    bool oc_block_gating = false;

    // model shape (used when the CLI builds the model from scratch)
    std::size_t num_layers = 2;
    std::size_t hidden_dim = 0;  // 0 = d/4

    void validate() const;  // throws ConfigError
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    LossBreakdown loss;
    double seconds = 0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::uint64_t final_model_checksum = 0;
};

/// Full-batch training loop: forward, losses, routed backward,
/// optimizer step, once per epoch. Deterministic for a fixed seed. Throws
/// NumericError with the epoch index if the loss turns non-finite.
template <typename Real>
TrainReport train(const Dataset& dataset, MoeModel<Real>& model, const TrainConfig& config);

/// One epoch line each: epoch l_expert l_gating l_oc l_total seconds.
void write_train_report(const TrainReport& report, const std::filesystem::path& path);
TrainReport read_train_report(const std::filesystem::path& path);

/// FNV-1a over the little-endian parameter bytes in tensor_views order.
template <typename Real>
std::uint64_t model_checksum(const MoeModel<Real>& model);

}  // namespace camera
