#include "camera/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "camera/errors.hpp"
#include "camera/rng.hpp"

namespace camera {

template <typename Real>
std::size_t MoeModel<Real>::parameter_count() const {
    const std::size_t d = dim, h = hidden;
    const std::size_t per_layer = d * d                  // graph weight
                                  + d * h + h            // encoder
                                  + h * d + d            // decoder
                                  + d * d + d            // global affine
                                  + 2 * d * 3 + 3;       // gating
    return layers.size() * per_layer;
}

template <typename Real>
void MoeModel<Real>::validate() const {
    if (layers.empty()) throw ConfigError("model: needs at least one MoE layer");
    if (dim == 0) throw ConfigError("model: dim must be positive");
    if (options.enabled_expert_count() == 0) throw ConfigError("model: at least one expert must be enabled");
    if (hidden >= dim && !options.allow_overcomplete)
        throw ConfigError("model: semantic hidden dim " + std::to_string(hidden) +
                          " must be < dim " + std::to_string(dim) +
                          " (set allow_overcomplete for the width study)");
    if (hidden == 0) throw ConfigError("model: semantic hidden dim must be positive");
    for (const auto& l : layers) {
        if (l.graph.weight.rows != dim || l.graph.weight.cols != dim ||
            l.semantic.encoder_weight.rows != dim || l.semantic.encoder_weight.cols != hidden ||
            l.semantic.encoder_bias.size() != hidden ||
            l.semantic.decoder_weight.rows != hidden || l.semantic.decoder_weight.cols != dim ||
            l.semantic.decoder_bias.size() != dim ||
            l.global.weight.rows != dim || l.global.weight.cols != dim ||
            l.global.bias.size() != dim ||
            l.gating.weight.rows != 2 * dim || l.gating.weight.cols != kNumExperts ||
            l.gating.bias.size() != kNumExperts)
            throw ConfigError("model: parameter tensor shape mismatch");
    }
}

namespace {

template <typename Real>
void fill_uniform(Rng& rng, std::size_t fan_in, Mat<Real>& m) {
    const double bound = 1.0 / std::sqrt(double(fan_in));
    for (Real& x : m.v) x = Real(rng.uniform(-bound, bound));
}

}  // namespace

template <typename Real>
MoeModel<Real> init_model(std::size_t dim, std::size_t hidden, std::size_t num_layers,
                          std::uint64_t seed, const ModelOptions& options) {
    MoeModel<Real> model;
    model.dim = dim;
    model.hidden = hidden == 0 ? std::max<std::size_t>(1, dim / 4) : hidden;
    model.options = options;
    model.layers.resize(num_layers);

    Rng rng(seed);
    for (auto& l : model.layers) {
        l.graph.weight = Mat<Real>(dim, dim);
        fill_uniform(rng, dim, l.graph.weight);

        l.semantic.encoder_weight = Mat<Real>(dim, model.hidden);
        fill_uniform(rng, dim, l.semantic.encoder_weight);
        l.semantic.encoder_bias.assign(model.hidden, Real(0));
        l.semantic.decoder_weight = Mat<Real>(model.hidden, dim);
        fill_uniform(rng, model.hidden, l.semantic.decoder_weight);
        l.semantic.decoder_bias.assign(dim, Real(0));

        l.global.weight = Mat<Real>(dim, dim);
        fill_uniform(rng, dim, l.global.weight);
        l.global.bias.assign(dim, Real(0));

        l.gating.weight = Mat<Real>(2 * dim, kNumExperts);
        fill_uniform(rng, 2 * dim, l.gating.weight);
        l.gating.bias.assign(kNumExperts, Real(0));
    }
    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Sparse propagation kernels
// ---------------------------------------------------------------------------

template <typename Real>
Mat<Real> sym_norm_propagate(const Graph& g, const Mat<Real>& x) {
    if (x.rows != g.num_nodes) throw DataError("sym_norm_propagate: row count != node count");
    const std::size_t d = x.cols;
    Mat<Real> out(x.rows, d);
    for (NodeId i = 0; i < g.num_nodes; ++i) {
        const double di = double(g.degrees[i]) + 1.0;
        const Real* xi = x.row(i);
        Real* oi = out.row(i);
        const Real self = Real(1.0 / di);
        for (std::size_t c = 0; c < d; ++c) oi[c] = self * xi[c];
        for (NodeId j : g.neighbors(i)) {
            const Real w = Real(1.0 / std::sqrt(di * (double(g.degrees[j]) + 1.0)));
            const Real* xj = x.row(j);
            for (std::size_t c = 0; c < d; ++c) oi[c] += w * xj[c];
        }
    }
    return out;
}

template <typename Real>
Mat<Real> neighbor_mean(const Graph& g, const Mat<Real>& x) {
    if (x.rows != g.num_nodes) throw DataError("neighbor_mean: row count != node count");
    const std::size_t d = x.cols;
    Mat<Real> out(x.rows, d);
    for (NodeId i = 0; i < g.num_nodes; ++i) {
        const auto nbrs = g.neighbors(i);
        if (nbrs.empty()) continue;  // degree 0: context stays the zero vector
        Real* oi = out.row(i);
        for (NodeId j : nbrs) {
            const Real* xj = x.row(j);
            for (std::size_t c = 0; c < d; ++c) oi[c] += xj[c];
        }
        const Real inv = Real(1.0 / double(nbrs.size()));
        for (std::size_t c = 0; c < d; ++c) oi[c] *= inv;
    }
    return out;
}

template <typename Real>
Mat<Real> neighbor_mean_transpose(const Graph& g, const Mat<Real>& x) {
    if (x.rows != g.num_nodes) throw DataError("neighbor_mean_transpose: row count != node count");
    const std::size_t d = x.cols;
    Mat<Real> out(x.rows, d);
    for (NodeId j = 0; j < g.num_nodes; ++j) {
        Real* oj = out.row(j);
        for (NodeId i : g.neighbors(j)) {
            const Real inv = Real(1.0 / double(g.degrees[i]));
            const Real* xi = x.row(i);
            for (std::size_t c = 0; c < d; ++c) oj[c] += inv * xi[c];
        }
    }
    return out;
}

template <typename Real>
Mat<Real> gcn_propagate(const Graph& g, const Mat<Real>& h, const Mat<Real>& w) {
    if (h.cols != w.rows) throw DataError("gcn_propagate: dimension mismatch");
    Mat<Real> p = sym_norm_propagate(g, h);
    Mat<Real> out;
    matmul(p, w, out);
    return out;
}

// ---------------------------------------------------------------------------
// Experts
// ---------------------------------------------------------------------------

template <typename Real>
Mat<Real> expert_graph(const MoeLayerParams<Real>& layer, const Graph& g, const Mat<Real>& h) {
    Mat<Real> rec = gcn_propagate(g, h, layer.graph.weight);
    Mat<Real> out = h;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= rec.v[i];
    return out;
}

template <typename Real>
Mat<Real> expert_semantic(const MoeLayerParams<Real>& layer, const Mat<Real>& h) {
    Mat<Real> u;
    matmul(h, layer.semantic.encoder_weight, u);
    add_row_vector(u, layer.semantic.encoder_bias);
    for (Real& x : u.v) x = x > Real(0) ? x : Real(0);  // rectifier
    Mat<Real> rec;
    matmul(u, layer.semantic.decoder_weight, rec);
    add_row_vector(rec, layer.semantic.decoder_bias);
    Mat<Real> out = h;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= rec.v[i];
    return out;
}

template <typename Real>
Mat<Real> expert_global(const MoeLayerParams<Real>& layer, const Mat<Real>& h) {
    const std::vector<Real> mu = column_mean(h);
    const std::size_t d = h.cols;
    // a = mu * W + b, subtracted from every row
    std::vector<Real> a(layer.global.bias);
    for (std::size_t p = 0; p < d; ++p) {
        const Real mp = mu[p];
        if (mp == Real(0)) continue;
        const Real* wp = layer.global.weight.row(p);
        for (std::size_t j = 0; j < d; ++j) a[j] += mp * wp[j];
    }
    Mat<Real> out = h;
    for (std::size_t i = 0; i < out.rows; ++i) {
        Real* oi = out.row(i);
        for (std::size_t j = 0; j < d; ++j) oi[j] -= a[j];
    }
    return out;
}

template <typename Real>
Mat<Real> compute_context(const Graph& g, const Mat<Real>& h) {
    return neighbor_mean(g, h);
}

template <typename Real>
Mat<Real> gating_forward(const MoeLayerParams<Real>& layer, const ModelOptions& options,
                         const Mat<Real>& h, const Mat<Real>& context) {
    const std::size_t n = h.rows;
    const std::size_t d = h.cols;
    Mat<Real> gates(n, kNumExperts);

    if (options.gating_mode == GatingMode::Uniform) {
        const Real w = Real(1.0 / double(options.enabled_expert_count()));
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < kNumExperts; ++k)
                if (options.expert_mask[k]) gates.at(i, k) = w;
        return gates;
    }

    const bool use_context = options.gating_mode == GatingMode::ContextInformed;
    const Mat<Real>& wg = layer.gating.weight;  // 2d x 3
    for (std::size_t i = 0; i < n; ++i) {
        Real z[kNumExperts];
        for (int k = 0; k < kNumExperts; ++k) z[k] = layer.gating.bias[k];
        const Real* hi = h.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const Real hp = hi[p];
            if (hp == Real(0)) continue;
            const Real* wp = wg.row(p);
            for (int k = 0; k < kNumExperts; ++k) z[k] += hp * wp[k];
        }
        if (use_context) {
            const Real* ci = context.row(i);
            for (std::size_t p = 0; p < d; ++p) {
                const Real cp = ci[p];
                if (cp == Real(0)) continue;
                const Real* wp = wg.row(d + p);
                for (int k = 0; k < kNumExperts; ++k) z[k] += cp * wp[k];
            }
        }
        // softmax over the enabled support only
        Real zmax = -std::numeric_limits<Real>::infinity();
        for (int k = 0; k < kNumExperts; ++k)
            if (options.expert_mask[k]) zmax = std::max(zmax, z[k]);
        Real sum = 0;
        Real e[kNumExperts] = {0, 0, 0};
        for (int k = 0; k < kNumExperts; ++k)
            if (options.expert_mask[k]) {
                e[k] = std::exp(z[k] - zmax);
                sum += e[k];
            }
        for (int k = 0; k < kNumExperts; ++k) gates.at(i, k) = options.expert_mask[k] ? e[k] / sum : Real(0);
    }
    return gates;
}

template <typename Real>
std::pair<Mat<Real>, LayerTrace<Real>> moe_layer_forward(const MoeLayerParams<Real>& layer,
                                                         const Graph& g, const Mat<Real>& h,
                                                         const ModelOptions& options) {
    LayerTrace<Real> trace;
    trace.context = compute_context(g, h);
    if (options.expert_mask[kExpertGraph]) trace.residual[kExpertGraph] = expert_graph(layer, g, h);
    if (options.expert_mask[kExpertSemantic]) trace.residual[kExpertSemantic] = expert_semantic(layer, h);
    if (options.expert_mask[kExpertGlobal]) trace.residual[kExpertGlobal] = expert_global(layer, h);
    trace.gating = gating_forward(layer, options, h, trace.context);

    Mat<Real> out(h.rows, h.cols);
    if (options.mode == MoeMode::EgoDecoupled) out.v = h.v;
    for (int k = 0; k < kNumExperts; ++k) {
        if (!options.expert_mask[k]) continue;
        const Mat<Real>& e = trace.residual[k];
        for (std::size_t i = 0; i < h.rows; ++i) {
            const Real gi = trace.gating.at(i, k);
            const Real* ei = e.row(i);
            Real* oi = out.row(i);
            for (std::size_t c = 0; c < h.cols; ++c) oi[c] += gi * ei[c];
        }
    }
    trace.input = h;
    return {std::move(out), std::move(trace)};
}

template <typename Real>
ForwardTrace<Real> model_forward(const MoeModel<Real>& model, const Graph& g, const Mat<Real>& h0) {
    model.validate();
    if (h0.rows != g.num_nodes) throw DataError("model_forward: feature rows != node count");
    if (h0.cols != model.dim)
        throw DataError("model_forward: feature dim " + std::to_string(h0.cols) +
                        " != model dim " + std::to_string(model.dim));

    ForwardTrace<Real> trace;
    trace.layers.reserve(model.num_layers());
    Mat<Real> h = h0;
    for (const auto& layer : model.layers) {
        auto [out, lt] = moe_layer_forward(layer, g, h, model.options);
        trace.layers.push_back(std::move(lt));
        h = std::move(out);
    }
    trace.output = std::move(h);
    return trace;
}

template <typename Real>
Mat<Real> to_mat(const FeatureMatrix& f) {
    Mat<Real> m(f.num_rows, f.dim);
    for (std::size_t i = 0; i < f.values.size(); ++i) m.v[i] = Real(f.values[i]);
    return m;
}

template <typename Real>
ForwardTrace<Real> model_forward(const MoeModel<Real>& model, const Graph& g,
                                 const FeatureMatrix& features) {
    return model_forward(model, g, to_mat<Real>(features));
}

// ---------------------------------------------------------------------------
// Flat tensor access
// ---------------------------------------------------------------------------

template <typename Real>
std::vector<TensorView<Real>> tensor_views(MoeModel<Real>& model) {
    std::vector<TensorView<Real>> views;
    views.reserve(model.layers.size() * 9);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        views.push_back({p + "graph.weight", layer.graph.weight.v.data(), layer.graph.weight.size()});
        views.push_back({p + "semantic.encoder_weight", layer.semantic.encoder_weight.v.data(),
                         layer.semantic.encoder_weight.size()});
        views.push_back({p + "semantic.encoder_bias", layer.semantic.encoder_bias.data(),
                         layer.semantic.encoder_bias.size()});
        views.push_back({p + "semantic.decoder_weight", layer.semantic.decoder_weight.v.data(),
                         layer.semantic.decoder_weight.size()});
        views.push_back({p + "semantic.decoder_bias", layer.semantic.decoder_bias.data(),
                         layer.semantic.decoder_bias.size()});
        views.push_back({p + "global.weight", layer.global.weight.v.data(), layer.global.weight.size()});
        views.push_back({p + "global.bias", layer.global.bias.data(), layer.global.bias.size()});
        views.push_back({p + "gating.weight", layer.gating.weight.v.data(), layer.gating.weight.size()});
        views.push_back({p + "gating.bias", layer.gating.bias.data(), layer.gating.bias.size()});
    }
    return views;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void ck_put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (x >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 4);
}

void ck_put_u64(std::ostream& os, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (x >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t ck_get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint: truncated");
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(b[i]) << (8 * i);
    return x;
}

std::uint64_t ck_get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: truncated");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t(b[i]) << (8 * i);
    return x;
}

std::uint8_t ck_get_u8(std::istream& is) {
    char c;
    if (!is.read(&c, 1)) throw DataError("checkpoint: truncated");
    return std::uint8_t(c);
}

template <typename Real>
void ck_put_tensor(std::ostream& os, const Real* data, std::uint64_t rows, std::uint64_t cols) {
    ck_put_u64(os, rows);
    ck_put_u64(os, cols);
    for (std::uint64_t i = 0; i < rows * cols; ++i) {
        if constexpr (sizeof(Real) == 4) {
            std::uint32_t u;
            std::memcpy(&u, &data[i], 4);
            ck_put_u32(os, u);
        } else {
            std::uint64_t u;
            std::memcpy(&u, &data[i], 8);
            ck_put_u64(os, u);
        }
    }
}

template <typename Real>
void ck_get_tensor(std::istream& is, Real* data, std::uint64_t rows, std::uint64_t cols) {
    const std::uint64_t r = ck_get_u64(is);
    const std::uint64_t c = ck_get_u64(is);
    if (r != rows || c != cols)
        throw DataError("checkpoint: tensor shape " + std::to_string(r) + "x" + std::to_string(c) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    for (std::uint64_t i = 0; i < rows * cols; ++i) {
        if constexpr (sizeof(Real) == 4) {
            std::uint32_t u = ck_get_u32(is);
            std::memcpy(&data[i], &u, 4);
        } else {
            std::uint64_t u = ck_get_u64(is);
            std::memcpy(&data[i], &u, 8);
        }
    }
}

template <typename Real>
constexpr std::uint8_t dtype_code() {
    return sizeof(Real) == 4 ? 0 : 1;
}

}  // namespace

template <typename Real>
void save_checkpoint(const MoeModel<Real>& model, const std::filesystem::path& path) {
    model.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint for writing: " + path.string());
    f.write(kCheckpointMagic, 8);
    ck_put_u32(f, kCheckpointVersion);
    f.put(char(dtype_code<Real>()));
    f.put(char(model.options.mode));
    f.put(char(model.options.gating_mode));
    std::uint8_t mask = 0;
    for (int k = 0; k < kNumExperts; ++k)
        if (model.options.expert_mask[k]) mask |= (1u << k);
    f.put(char(mask));
    f.put(char(model.options.allow_overcomplete ? 1 : 0));
    ck_put_u64(f, model.dim);
    ck_put_u64(f, model.hidden);
    ck_put_u64(f, model.num_layers());
    for (const auto& l : model.layers) {
        ck_put_tensor(f, l.graph.weight.v.data(), model.dim, model.dim);
        ck_put_tensor(f, l.semantic.encoder_weight.v.data(), model.dim, model.hidden);
        ck_put_tensor(f, l.semantic.encoder_bias.data(), 1, model.hidden);
        ck_put_tensor(f, l.semantic.decoder_weight.v.data(), model.hidden, model.dim);
        ck_put_tensor(f, l.semantic.decoder_bias.data(), 1, model.dim);
        ck_put_tensor(f, l.global.weight.v.data(), model.dim, model.dim);
        ck_put_tensor(f, l.global.bias.data(), 1, model.dim);
        ck_put_tensor(f, l.gating.weight.v.data(), 2 * model.dim, std::uint64_t(kNumExperts));
        ck_put_tensor(f, l.gating.bias.data(), 1, std::uint64_t(kNumExperts));
    }
    if (!f) throw DataError("checkpoint: I/O failure on " + path.string());
}

namespace {

template <typename Real>
MoeModel<Real> load_checkpoint_body(std::istream& f) {
    MoeModel<Real> model;
    model.options.mode = MoeMode(ck_get_u8(f));
    model.options.gating_mode = GatingMode(ck_get_u8(f));
    const std::uint8_t mask = ck_get_u8(f);
    for (int k = 0; k < kNumExperts; ++k) model.options.expert_mask[k] = (mask >> k) & 1;
    model.options.allow_overcomplete = ck_get_u8(f) != 0;
    model.dim = ck_get_u64(f);
    model.hidden = ck_get_u64(f);
    const std::uint64_t num_layers = ck_get_u64(f);
    model.layers.resize(num_layers);
    for (auto& l : model.layers) {
        l.graph.weight = Mat<Real>(model.dim, model.dim);
        ck_get_tensor(f, l.graph.weight.v.data(), model.dim, model.dim);
        l.semantic.encoder_weight = Mat<Real>(model.dim, model.hidden);
        ck_get_tensor(f, l.semantic.encoder_weight.v.data(), model.dim, model.hidden);
        l.semantic.encoder_bias.resize(model.hidden);
        ck_get_tensor(f, l.semantic.encoder_bias.data(), 1, model.hidden);
        l.semantic.decoder_weight = Mat<Real>(model.hidden, model.dim);
        ck_get_tensor(f, l.semantic.decoder_weight.v.data(), model.hidden, model.dim);
        l.semantic.decoder_bias.resize(model.dim);
        ck_get_tensor(f, l.semantic.decoder_bias.data(), 1, model.dim);
        l.global.weight = Mat<Real>(model.dim, model.dim);
        ck_get_tensor(f, l.global.weight.v.data(), model.dim, model.dim);
        l.global.bias.resize(model.dim);
        ck_get_tensor(f, l.global.bias.data(), 1, model.dim);
        l.gating.weight = Mat<Real>(2 * model.dim, kNumExperts);
        ck_get_tensor(f, l.gating.weight.v.data(), 2 * model.dim, kNumExperts);
        l.gating.bias.resize(kNumExperts);
        ck_get_tensor(f, l.gating.bias.data(), 1, kNumExperts);
    }
    model.validate();
    return model;
}

}  // namespace

AnyModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path.string());
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError("checkpoint " + path.string() + ": bad magic");
    const std::uint32_t version = ck_get_u32(f);
    if (version != kCheckpointVersion)
        throw DataError("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
    const std::uint8_t dtype = ck_get_u8(f);
    if (dtype == 0) return load_checkpoint_body<float>(f);
    if (dtype == 1) return load_checkpoint_body<double>(f);
    throw DataError("checkpoint " + path.string() + ": unknown dtype " + std::to_string(dtype));
}

template <typename Real>
MoeModel<Real> load_checkpoint_as(const std::filesystem::path& path) {
    AnyModel any = load_checkpoint(path);
    if (auto* m = std::get_if<MoeModel<Real>>(&any)) return std::move(*m);
    throw DataError("checkpoint " + path.string() + ": stored precision differs from requested");
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

#define CAMERA_INSTANTIATE_MODEL(Real)                                                             \
    template struct MoeModel<Real>;                                                                \
    template MoeModel<Real> init_model<Real>(std::size_t, std::size_t, std::size_t, std::uint64_t, \
                                             const ModelOptions&);                                 \
    template Mat<Real> sym_norm_propagate<Real>(const Graph&, const Mat<Real>&);                   \
    template Mat<Real> neighbor_mean<Real>(const Graph&, const Mat<Real>&);                        \
    template Mat<Real> neighbor_mean_transpose<Real>(const Graph&, const Mat<Real>&);              \
    template Mat<Real> gcn_propagate<Real>(const Graph&, const Mat<Real>&, const Mat<Real>&);      \
    template Mat<Real> expert_graph<Real>(const MoeLayerParams<Real>&, const Graph&,               \
                                          const Mat<Real>&);                                       \
    template Mat<Real> expert_semantic<Real>(const MoeLayerParams<Real>&, const Mat<Real>&);       \
    template Mat<Real> expert_global<Real>(const MoeLayerParams<Real>&, const Mat<Real>&);         \
    template Mat<Real> compute_context<Real>(const Graph&, const Mat<Real>&);                      \
    template Mat<Real> gating_forward<Real>(const MoeLayerParams<Real>&, const ModelOptions&,      \
                                            const Mat<Real>&, const Mat<Real>&);                   \
    template std::pair<Mat<Real>, LayerTrace<Real>> moe_layer_forward<Real>(                       \
        const MoeLayerParams<Real>&, const Graph&, const Mat<Real>&, const ModelOptions&);         \
    template ForwardTrace<Real> model_forward<Real>(const MoeModel<Real>&, const Graph&,           \
                                                    const Mat<Real>&);                             \
    template ForwardTrace<Real> model_forward<Real>(const MoeModel<Real>&, const Graph&,           \
                                                    const FeatureMatrix&);                         \
    template Mat<Real> to_mat<Real>(const FeatureMatrix&);                                         \
    template std::vector<TensorView<Real>> tensor_views<Real>(MoeModel<Real>&);                    \
    template void save_checkpoint<Real>(const MoeModel<Real>&, const std::filesystem::path&);      \
    template MoeModel<Real> load_checkpoint_as<Real>(const std::filesystem::path&);

CAMERA_INSTANTIATE_MODEL(float)
CAMERA_INSTANTIATE_MODEL(double)

#undef CAMERA_INSTANTIATE_MODEL

}  // namespace camera
