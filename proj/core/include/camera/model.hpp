#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "camera/graph.hpp"
#include "camera/mat.hpp"

namespace camera {

enum class MoeMode : std::uint8_t {
    EgoDecoupled = 0,  // H_out = H + sum_k g_k (.) e_k(H)
    StandardMoe = 1,   // H_out = sum_k g_k (.) e_k(H), ablation variant
};

enum class GatingMode : std::uint8_t {
    ContextInformed = 0,  // softmax(Linear([h || c]))
    EgoOnly = 1,          // context replaced by zeros
    Uniform = 2,          // 1/k over enabled experts, no learned gate
};

inline constexpr int kNumExperts = 3;
inline constexpr int kExpertGraph = 0;
inline constexpr int kExpertSemantic = 1;
inline constexpr int kExpertGlobal = 2;

inline const char* expert_name(int k) {
    switch (k) {
        case kExpertGraph: return "graph";
        case kExpertSemantic: return "semantic";
        case kExpertGlobal: return "global";
        default: return "?";
    }
}

// One GCN layer, parameter-free symmetric normalization + linear map.
template <typename Real>
struct GcnExpertParams {
    Mat<Real> weight;  // d x d
};

// Under-complete linear autoencoder with an elementwise rectifier between
// encoder and decoder.
template <typename Real>
struct SemanticExpertParams {
    Mat<Real> encoder_weight;        // d x h
    std::vector<Real> encoder_bias;  // h
    Mat<Real> decoder_weight;        // h x d
    std::vector<Real> decoder_bias;  // d
};

// Single affine map applied to the whole-graph mean embedding.
template <typename Real>
struct GlobalExpertParams {
    Mat<Real> weight;        // d x d
    std::vector<Real> bias;  // d
};

template <typename Real>
struct GatingParams {
    Mat<Real> weight;        // 2d x 3
    std::vector<Real> bias;  // 3
};

template <typename Real>
struct MoeLayerParams {
    GcnExpertParams<Real> graph;
    SemanticExpertParams<Real> semantic;
    GlobalExpertParams<Real> global;
    GatingParams<Real> gating;
};

struct ModelOptions {
    MoeMode mode = MoeMode::EgoDecoupled;
    GatingMode gating_mode = GatingMode::ContextInformed;
    std::array<bool, kNumExperts> expert_mask{true, true, true};
    // Permits h >= d in the semantic autoencoder (over-parameterization study).
    bool allow_overcomplete = false;

    int enabled_expert_count() const {
        int c = 0;
        for (bool b : expert_mask) c += b;
        return c;
    }
    bool operator==(const ModelOptions&) const = default;
};

template <typename Real>
struct MoeModel {
    std::size_t dim = 0;     // d
    std::size_t hidden = 0;  // h
    ModelOptions options;
    std::vector<MoeLayerParams<Real>> layers;

    std::size_t num_layers() const { return layers.size(); }
    std::size_t parameter_count() const;

    /// Throws ConfigError on structural violations (no enabled expert, L < 1,
    /// h >= d without the over-complete flag, shape mismatches).
    void validate() const;
};

/// All weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
/// drawn from a seeded mt19937_64 in a fixed tensor order.
template <typename Real>
MoeModel<Real> init_model(std::size_t dim, std::size_t hidden, std::size_t num_layers,
                          std::uint64_t seed, const ModelOptions& options = {});

// ---------------------------------------------------------------------------
// Forward computation
// ---------------------------------------------------------------------------

/// Y = A_hat * X with A_hat = D~^{-1/2} (A + I) D~^{-1/2}, self-loops added.
template <typename Real>
Mat<Real> sym_norm_propagate(const Graph& g, const Mat<Real>& x);

/// Mean of neighbor rows; zero row for isolated nodes.
template <typename Real>
Mat<Real> neighbor_mean(const Graph& g, const Mat<Real>& x);

/// Transpose of the neighbor-mean operator: out[j] = sum_{i in N(j)} x[i]/deg(i).
template <typename Real>
Mat<Real> neighbor_mean_transpose(const Graph& g, const Mat<Real>& x);

/// A_hat * H * W.
template <typename Real>
Mat<Real> gcn_propagate(const Graph& g, const Mat<Real>& h, const Mat<Real>& w);

template <typename Real>
Mat<Real> expert_graph(const MoeLayerParams<Real>& layer, const Graph& g, const Mat<Real>& h);

template <typename Real>
Mat<Real> expert_semantic(const MoeLayerParams<Real>& layer, const Mat<Real>& h);

template <typename Real>
Mat<Real> expert_global(const MoeLayerParams<Real>& layer, const Mat<Real>& h);

template <typename Real>
Mat<Real> compute_context(const Graph& g, const Mat<Real>& h);

/// n x 3 simplex rows; disabled experts are removed from the softmax support
/// (their columns are exactly zero).
template <typename Real>
Mat<Real> gating_forward(const MoeLayerParams<Real>& layer, const ModelOptions& options,
                         const Mat<Real>& h, const Mat<Real>& context);

template <typename Real>
struct LayerTrace {
    Mat<Real> input;    // H^[l-1], n x d
    Mat<Real> context;  // c^[l-1], n x d
    std::array<Mat<Real>, kNumExperts> residual;  // e_k^[l], empty if masked
    Mat<Real> gating;   // g^[l], n x 3
};

template <typename Real>
struct ForwardTrace {
    std::vector<LayerTrace<Real>> layers;
    Mat<Real> output;  // H^[L]

    std::size_t num_nodes() const { return output.rows; }
};

template <typename Real>
std::pair<Mat<Real>, LayerTrace<Real>> moe_layer_forward(const MoeLayerParams<Real>& layer,
                                                         const Graph& g, const Mat<Real>& h,
                                                         const ModelOptions& options);

template <typename Real>
ForwardTrace<Real> model_forward(const MoeModel<Real>& model, const Graph& g, const Mat<Real>& h0);

template <typename Real>
ForwardTrace<Real> model_forward(const MoeModel<Real>& model, const Graph& g,
                                 const FeatureMatrix& features);

template <typename Real>
Mat<Real> to_mat(const FeatureMatrix& f);

// ---------------------------------------------------------------------------
// Flat parameter access (optimizer, serialization, gradient checks)
// ---------------------------------------------------------------------------

template <typename Real>
struct TensorView {
    std::string name;  // e.g. "layer0.semantic.encoder_weight"
    Real* data;
    std::size_t size;
};

template <typename Real>
std::vector<TensorView<Real>> tensor_views(MoeModel<Real>& model);

// ---------------------------------------------------------------------------
// Checkpoint container: magic | version | dtype | mode flags | d h L | tensors
// with shape headers. Bit-exact round trip.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'C', 'A', 'M', 'C', 'K', 'P', 'T', '0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Real>
void save_checkpoint(const MoeModel<Real>& model, const std::filesystem::path& path);

using AnyModel = std::variant<MoeModel<float>, MoeModel<double>>;

/// Loads whichever precision the file declares.
AnyModel load_checkpoint(const std::filesystem::path& path);

template <typename Real>
MoeModel<Real> load_checkpoint_as(const std::filesystem::path& path);

}  // namespace camera
