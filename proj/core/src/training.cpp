#include "camera/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "camera/errors.hpp"

namespace camera {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

template <typename Real>
double row_norm(const Mat<Real>& m, std::size_t i) {
    double s = 0;
    const Real* r = m.row(i);
    for (std::size_t c = 0; c < m.cols; ++c) s += double(r[c]) * double(r[c]);
    return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

template <typename Real>
double loss_expert(const ForwardTrace<Real>& trace) {
    double total = 0;
    for (const auto& lt : trace.layers) {
        const double inv_n = lt.input.rows ? 1.0 / double(lt.input.rows) : 0.0;
        for (const auto& e : lt.residual) {
            if (e.empty()) continue;
            double s = 0;
            for (Real x : e.v) s += double(x) * double(x);
            total += inv_n * s;
        }
    }
    return total;
}

template <typename Real>
double loss_gating(const ForwardTrace<Real>& trace, double eps) {
    double total = 0;
    for (const auto& lt : trace.layers) {
        const double inv_n = lt.gating.rows ? 1.0 / double(lt.gating.rows) : 0.0;
        double s = 0;
        for (Real x : lt.gating.v) {
            const double g = double(x);
            s += g * std::log(g + eps);
        }
        total += -inv_n * s;
    }
    return total;
}

double loss_oc(const std::vector<double>& scores) {
    if (scores.empty()) return 0;
    double s = 0;
    for (double x : scores) s += -std::log1p(-x);
    return s / double(scores.size());
}

template <typename Real>
double loss_oc_from_trace(const ForwardTrace<Real>& trace) {
    const std::size_t n = trace.output.rows;
    if (n == 0) return 0;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += softplus(row_norm(trace.output, i));
    return s / double(n);
}

template <typename Real>
LossBreakdown compute_losses(const ForwardTrace<Real>& trace, double alpha, double beta,
                             double entropy_eps) {
    LossBreakdown b;
    b.alpha = alpha;
    b.beta = beta;
    b.l_expert = loss_expert(trace);
    b.l_gating = loss_gating(trace, entropy_eps);
    b.l_oc = loss_oc_from_trace(trace);
    b.l_total = b.l_expert + alpha * b.l_gating + beta * b.l_oc;
    return b;
}

// ---------------------------------------------------------------------------
// Gradient containers
// ---------------------------------------------------------------------------

template <typename Real>
ModelGrads<Real> ModelGrads<Real>::zeros_like(const MoeModel<Real>& model) {
    ModelGrads g;
    g.layers.resize(model.num_layers());
    for (auto& lg : g.layers) {
        lg.graph_weight = Mat<Real>(model.dim, model.dim);
        lg.encoder_weight = Mat<Real>(model.dim, model.hidden);
        lg.encoder_bias.assign(model.hidden, Real(0));
        lg.decoder_weight = Mat<Real>(model.hidden, model.dim);
        lg.decoder_bias.assign(model.dim, Real(0));
        lg.global_weight = Mat<Real>(model.dim, model.dim);
        lg.global_bias.assign(model.dim, Real(0));
        lg.gating_weight = Mat<Real>(2 * model.dim, kNumExperts);
        lg.gating_bias.assign(kNumExperts, Real(0));
    }
    return g;
}

template <typename Real>
std::vector<TensorView<Real>> ModelGrads<Real>::views() {
    std::vector<TensorView<Real>> out;
    out.reserve(layers.size() * 9);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& lg = layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        out.push_back({p + "graph.weight", lg.graph_weight.v.data(), lg.graph_weight.size()});
        out.push_back({p + "semantic.encoder_weight", lg.encoder_weight.v.data(), lg.encoder_weight.size()});
        out.push_back({p + "semantic.encoder_bias", lg.encoder_bias.data(), lg.encoder_bias.size()});
        out.push_back({p + "semantic.decoder_weight", lg.decoder_weight.v.data(), lg.decoder_weight.size()});
        out.push_back({p + "semantic.decoder_bias", lg.decoder_bias.data(), lg.decoder_bias.size()});
        out.push_back({p + "global.weight", lg.global_weight.v.data(), lg.global_weight.size()});
        out.push_back({p + "global.bias", lg.global_bias.data(), lg.global_bias.size()});
        out.push_back({p + "gating.weight", lg.gating_weight.v.data(), lg.gating_weight.size()});
        out.push_back({p + "gating.bias", lg.gating_bias.data(), lg.gating_bias.size()});
    }
    return out;
}

template <typename Real>
void ModelGrads<Real>::add_scaled(const ModelGrads<Real>& other, Real scale) {
    auto mine = views();
    auto theirs = const_cast<ModelGrads<Real>&>(other).views();
    for (std::size_t t = 0; t < mine.size(); ++t)
        for (std::size_t i = 0; i < mine[t].size; ++i) mine[t].data[i] += scale * theirs[t].data[i];
}

template <typename Real>
ModelGrads<Real> BackwardResult<Real>::total(Real alpha, Real beta) const {
    ModelGrads<Real> t = expert;
    t.add_scaled(gating, alpha);
    t.add_scaled(oc, beta);
    return t;
}

// ---------------------------------------------------------------------------
// Backward internals
// ---------------------------------------------------------------------------

namespace {

// Pre-activation of the semantic encoder, recomputed from the stored layer
// input (the trace keeps only residuals).
template <typename Real>
Mat<Real> semantic_preact(const MoeLayerParams<Real>& layer, const Mat<Real>& x) {
    Mat<Real> u;
    matmul(x, layer.semantic.encoder_weight, u);
    add_row_vector(u, layer.semantic.encoder_bias);
    return u;
}

// d(expert-loss term)/d(own params) with the layer input treated as constant.
template <typename Real>
void accumulate_expert_term(const MoeLayerParams<Real>& layer, const Graph& g,
                            const LayerTrace<Real>& lt, int k, LayerGrads<Real>& out) {
    const Mat<Real>& x = lt.input;
    const Mat<Real>& e = lt.residual[k];
    const Real coef = Real(2.0 / double(x.rows));

    if (k == kExpertGraph) {
        // E = X - P*W with P = A_hat*X; dW = -coef * P^T E
        Mat<Real> p = sym_norm_propagate(g, x);
        Mat<Real> dw;
        matmul_at_b(p, e, dw);
        for (std::size_t i = 0; i < dw.v.size(); ++i) out.graph_weight.v[i] -= coef * dw.v[i];
    } else if (k == kExpertSemantic) {
        Mat<Real> u = semantic_preact(layer, x);
        Mat<Real> v = u;
        for (Real& t : v.v) t = t > Real(0) ? t : Real(0);
        // dR = -coef * E
        Mat<Real> dr = e;
        for (Real& t : dr.v) t *= -coef;
        Mat<Real> dwd;
        matmul_at_b(v, dr, dwd);
        for (std::size_t i = 0; i < dwd.v.size(); ++i) out.decoder_weight.v[i] += dwd.v[i];
        const std::vector<Real> dbd = column_sum(dr);
        for (std::size_t i = 0; i < dbd.size(); ++i) out.decoder_bias[i] += dbd[i];
        Mat<Real> dv;
        matmul_a_bt(dr, layer.semantic.decoder_weight, dv);
        for (std::size_t i = 0; i < dv.v.size(); ++i)
            if (u.v[i] <= Real(0)) dv.v[i] = Real(0);
        Mat<Real> dwe;
        matmul_at_b(x, dv, dwe);
        for (std::size_t i = 0; i < dwe.v.size(); ++i) out.encoder_weight.v[i] += dwe.v[i];
        const std::vector<Real> dbe = column_sum(dv);
        for (std::size_t i = 0; i < dbe.size(); ++i) out.encoder_bias[i] += dbe[i];
    } else {
        // E_i = x_i - a, a = mu*W + b; da = -coef * sum_i E_i
        const std::vector<Real> mu = column_mean(x);
        std::vector<Real> da = column_sum(e);
        for (Real& t : da) t *= -coef;
        for (std::size_t p = 0; p < x.cols; ++p)
            for (std::size_t j = 0; j < x.cols; ++j) out.global_weight.at(p, j) += mu[p] * da[j];
        for (std::size_t j = 0; j < x.cols; ++j) out.global_bias[j] += da[j];
    }
}

// Row-wise softmax backward restricted to the enabled support.
template <typename Real>
Mat<Real> softmax_backward(const Mat<Real>& gates, const Mat<Real>& dgates,
                           const ModelOptions& options) {
    Mat<Real> dz(gates.rows, gates.cols);
    for (std::size_t i = 0; i < gates.rows; ++i) {
        Real dot = 0;
        for (int k = 0; k < kNumExperts; ++k)
            if (options.expert_mask[k]) dot += dgates.at(i, k) * gates.at(i, k);
        for (int k = 0; k < kNumExperts; ++k)
            if (options.expert_mask[k]) dz.at(i, k) = gates.at(i, k) * (dgates.at(i, k) - dot);
    }
    return dz;
}

// Accumulates dWg/dbg for a given dZ; input is [X || C] (or [X || 0]).
template <typename Real>
void accumulate_gating_params(const ModelOptions& options, const LayerTrace<Real>& lt,
                              const Mat<Real>& dz, LayerGrads<Real>& out) {
    const Mat<Real>& x = lt.input;
    const std::size_t d = x.cols;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const Real* dzi = dz.row(i);
        const Real* xi = x.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            const Real xp = xi[p];
            if (xp == Real(0)) continue;
            Real* w = out.gating_weight.row(p);
            for (int k = 0; k < kNumExperts; ++k) w[k] += xp * dzi[k];
        }
        if (options.gating_mode == GatingMode::ContextInformed) {
            const Real* ci = lt.context.row(i);
            for (std::size_t p = 0; p < d; ++p) {
                const Real cp = ci[p];
                if (cp == Real(0)) continue;
                Real* w = out.gating_weight.row(d + p);
                for (int k = 0; k < kNumExperts; ++k) w[k] += cp * dzi[k];
            }
        }
        for (int k = 0; k < kNumExperts; ++k) out.gating_bias[k] += dzi[k];
    }
}

// d(entropy term)/d(gating params) with the layer input and context frozen.
template <typename Real>
void accumulate_gating_term(const ModelOptions& options, const LayerTrace<Real>& lt, double eps,
                            LayerGrads<Real>& out) {
    if (options.gating_mode == GatingMode::Uniform) return;  // constant gates
    const Mat<Real>& gates = lt.gating;
    const Real inv_n = Real(1.0 / double(gates.rows));
    Mat<Real> dgates(gates.rows, gates.cols);
    for (std::size_t i = 0; i < gates.rows; ++i)
        for (int k = 0; k < kNumExperts; ++k) {
            if (!options.expert_mask[k]) continue;
            const double gv = double(gates.at(i, k));
            dgates.at(i, k) = Real(-double(inv_n) * (std::log(gv + eps) + gv / (gv + eps)));
        }
    Mat<Real> dz = softmax_backward(gates, dgates, options);
    accumulate_gating_params(options, lt, dz, out);
}

// Full-flow backward through one MoE layer; returns dX and accumulates the
// parameter gradients. Used only by the OC term, the one loss that reaches
// everything.
template <typename Real>
Mat<Real> layer_backward_full(const MoeLayerParams<Real>& layer, const ModelOptions& options,
                              const Graph& g, const LayerTrace<Real>& lt, const Mat<Real>& dy,
                              bool block_gating, LayerGrads<Real>& out) {
    const Mat<Real>& x = lt.input;
    const std::size_t n = x.rows, d = x.cols;

    Mat<Real> dx(n, d);
    if (options.mode == MoeMode::EgoDecoupled) dx.v = dy.v;  // skip connection

    // dG[i,k] = <dy_i, e_k,i>
    Mat<Real> dgates(n, kNumExperts);
    for (int k = 0; k < kNumExperts; ++k) {
        if (!options.expert_mask[k]) continue;
        const Mat<Real>& e = lt.residual[k];
        for (std::size_t i = 0; i < n; ++i) {
            const Real* dyi = dy.row(i);
            const Real* ei = e.row(i);
            Real s = 0;
            for (std::size_t c = 0; c < d; ++c) s += dyi[c] * ei[c];
            dgates.at(i, k) = s;
        }
    }

    if (options.gating_mode != GatingMode::Uniform && !block_gating) {
        Mat<Real> dz = softmax_backward(lt.gating, dgates, options);
        accumulate_gating_params(options, lt, dz, out);
        // flow into the gating input [x || c]
        const Mat<Real>& wg = layer.gating.weight;
        for (std::size_t i = 0; i < n; ++i) {
            const Real* dzi = dz.row(i);
            Real* dxi = dx.row(i);
            for (std::size_t p = 0; p < d; ++p) {
                const Real* wp = wg.row(p);
                Real s = 0;
                for (int k = 0; k < kNumExperts; ++k) s += dzi[k] * wp[k];
                dxi[p] += s;
            }
        }
        if (options.gating_mode == GatingMode::ContextInformed) {
            Mat<Real> dc(n, d);
            for (std::size_t i = 0; i < n; ++i) {
                const Real* dzi = dz.row(i);
                Real* dci = dc.row(i);
                for (std::size_t p = 0; p < d; ++p) {
                    const Real* wp = wg.row(d + p);
                    Real s = 0;
                    for (int k = 0; k < kNumExperts; ++k) s += dzi[k] * wp[k];
                    dci[p] = s;
                }
            }
            Mat<Real> dxc = neighbor_mean_transpose(g, dc);
            for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxc.v[i];
        }
    }

    // per-expert gated residual gradient: dE_k = g_k (.) dy
    Mat<Real> de(n, d);
    for (int k = 0; k < kNumExperts; ++k) {
        if (!options.expert_mask[k]) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const Real gi = lt.gating.at(i, k);
            const Real* dyi = dy.row(i);
            Real* dei = de.row(i);
            for (std::size_t c = 0; c < d; ++c) dei[c] = gi * dyi[c];
        }

        if (k == kExpertGraph) {
            // E = X - A_hat X W
            for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += de.v[i];
            Mat<Real> p = sym_norm_propagate(g, x);
            Mat<Real> dw;
            matmul_at_b(p, de, dw);
            for (std::size_t i = 0; i < dw.v.size(); ++i) out.graph_weight.v[i] -= dw.v[i];
            Mat<Real> dp;
            matmul_a_bt(de, layer.graph.weight, dp);
            Mat<Real> back = sym_norm_propagate(g, dp);  // A_hat is symmetric
            for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] -= back.v[i];
        } else if (k == kExpertSemantic) {
            for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += de.v[i];
            Mat<Real> u = semantic_preact(layer, x);
            Mat<Real> v = u;
            for (Real& t : v.v) t = t > Real(0) ? t : Real(0);
            // dR = -dE
            Mat<Real> dwd;
            matmul_at_b(v, de, dwd);
            for (std::size_t i = 0; i < dwd.v.size(); ++i) out.decoder_weight.v[i] -= dwd.v[i];
            const std::vector<Real> dbd = column_sum(de);
            for (std::size_t i = 0; i < dbd.size(); ++i) out.decoder_bias[i] -= dbd[i];
            Mat<Real> dv;
            matmul_a_bt(de, layer.semantic.decoder_weight, dv);
            for (Real& t : dv.v) t = -t;
            for (std::size_t i = 0; i < dv.v.size(); ++i)
                if (u.v[i] <= Real(0)) dv.v[i] = Real(0);
            Mat<Real> dwe;
            matmul_at_b(x, dv, dwe);
            for (std::size_t i = 0; i < dwe.v.size(); ++i) out.encoder_weight.v[i] += dwe.v[i];
            const std::vector<Real> dbe = column_sum(dv);
            for (std::size_t i = 0; i < dbe.size(); ++i) out.encoder_bias[i] += dbe[i];
            Mat<Real> dxe;
            matmul_a_bt(dv, layer.semantic.encoder_weight, dxe);
            for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxe.v[i];
        } else {
            // E_i = x_i - a, a = mu W + b, mu = mean of rows
            for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += de.v[i];
            std::vector<Real> da = column_sum(de);
            for (Real& t : da) t = -t;
            const std::vector<Real> mu = column_mean(x);
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t j = 0; j < d; ++j) out.global_weight.at(p, j) += mu[p] * da[j];
            for (std::size_t j = 0; j < d; ++j) out.global_bias[j] += da[j];
            std::vector<Real> dmu(d, Real(0));
            for (std::size_t p = 0; p < d; ++p) {
                const Real* wp = layer.global.weight.row(p);
                Real s = 0;
                for (std::size_t j = 0; j < d; ++j) s += wp[j] * da[j];
                dmu[p] = s;
            }
            const Real inv_n = Real(1.0 / double(n));
            for (std::size_t i = 0; i < n; ++i) {
                Real* dxi = dx.row(i);
                for (std::size_t p = 0; p < d; ++p) dxi[p] += inv_n * dmu[p];
            }
        }
    }
    return dx;
}

// dL_OC/dH^[L]: L_OC = (1/N) sum softplus(||h_i||).
template <typename Real>
Mat<Real> oc_output_seed(const Mat<Real>& out) {
    Mat<Real> d(out.rows, out.cols);
    const double inv_n = out.rows ? 1.0 / double(out.rows) : 0.0;
    for (std::size_t i = 0; i < out.rows; ++i) {
        const double r = row_norm(out, i);
        if (r == 0.0) continue;  // subgradient 0 at the non-smooth point
        const Real coef = Real(inv_n * sigmoid(r) / r);
        const Real* oi = out.row(i);
        Real* di = d.row(i);
        for (std::size_t c = 0; c < out.cols; ++c) di[c] = coef * oi[c];
    }
    return d;
}

template <typename Real>
void check_finite(ModelGrads<Real>& grads, const char* component) {
    for (const auto& view : grads.views())
        for (std::size_t i = 0; i < view.size; ++i)
            if (!std::isfinite(double(view.data[i])))
                throw NumericError(std::string("non-finite gradient in ") + view.name + " (" +
                                   component + " term)");
}

}  // namespace

template <typename Real>
ModelGrads<Real> expert_term_gradient(const MoeModel<Real>& model, const Graph& g,
                                      const ForwardTrace<Real>& trace, std::size_t layer, int expert) {
    auto grads = ModelGrads<Real>::zeros_like(model);
    if (!model.options.expert_mask[expert]) return grads;
    accumulate_expert_term(model.layers[layer], g, trace.layers[layer], expert, grads.layers[layer]);
    return grads;
}

template <typename Real>
ModelGrads<Real> gating_term_gradient(const MoeModel<Real>& model, const ForwardTrace<Real>& trace,
                                      std::size_t layer, double entropy_eps) {
    auto grads = ModelGrads<Real>::zeros_like(model);
    accumulate_gating_term(model.options, trace.layers[layer], entropy_eps, grads.layers[layer]);
    return grads;
}

template <typename Real>
ModelGrads<Real> oc_gradient(const MoeModel<Real>& model, const Graph& g,
                             const ForwardTrace<Real>& trace, const BackwardOptions& opts) {
    auto grads = ModelGrads<Real>::zeros_like(model);
    Mat<Real> dy = oc_output_seed(trace.output);
    for (std::size_t l = model.num_layers(); l-- > 0;)
        dy = layer_backward_full(model.layers[l], model.options, g, trace.layers[l], dy,
                                 opts.oc_block_gating, grads.layers[l]);
    return grads;
}

template <typename Real>
BackwardResult<Real> backward(const MoeModel<Real>& model, const Graph& g,
                              const ForwardTrace<Real>& trace, const BackwardOptions& opts) {
    if (trace.layers.size() != model.num_layers())
        throw DataError("backward: trace does not match model layer count");

    BackwardResult<Real> result{ModelGrads<Real>::zeros_like(model), ModelGrads<Real>::zeros_like(model),
                                ModelGrads<Real>::zeros_like(model)};
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        for (int k = 0; k < kNumExperts; ++k)
            if (model.options.expert_mask[k])
                accumulate_expert_term(model.layers[l], g, trace.layers[l], k, result.expert.layers[l]);
        accumulate_gating_term(model.options, trace.layers[l], opts.entropy_eps, result.gating.layers[l]);
    }
    Mat<Real> dy = oc_output_seed(trace.output);
    for (std::size_t l = model.num_layers(); l-- > 0;)
        dy = layer_backward_full(model.layers[l], model.options, g, trace.layers[l], dy,
                                 opts.oc_block_gating, result.oc.layers[l]);

    check_finite(result.expert, "expert");
    check_finite(result.gating, "gating");
    check_finite(result.oc, "oc");
    return result;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

template <typename Real>
AdamState<Real> AdamState<Real>::sized_for(const MoeModel<Real>& model) {
    AdamState s;
    s.m.assign(model.parameter_count(), Real(0));
    s.v.assign(model.parameter_count(), Real(0));
    return s;
}

template <typename Real>
void adam_step(MoeModel<Real>& model, ModelGrads<Real>& grads, AdamState<Real>& state, double lr,
               double beta1, double beta2, double eps) {
    auto pv = tensor_views(model);
    auto gv = grads.views();
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(beta2, double(state.step));
    std::size_t off = 0;
    for (std::size_t t = 0; t < pv.size(); ++t) {
        for (std::size_t i = 0; i < pv[t].size; ++i, ++off) {
            const double g = double(gv[t].data[i]);
            const double m = beta1 * double(state.m[off]) + (1.0 - beta1) * g;
            const double v = beta2 * double(state.v[off]) + (1.0 - beta2) * g * g;
            state.m[off] = Real(m);
            state.v[off] = Real(v);
            const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
            pv[t].data[i] = Real(double(pv[t].data[i]) - update);
        }
    }
}

template <typename Real>
void sgd_step(MoeModel<Real>& model, ModelGrads<Real>& grads, double lr) {
    auto pv = tensor_views(model);
    auto gv = grads.views();
    for (std::size_t t = 0; t < pv.size(); ++t)
        for (std::size_t i = 0; i < pv[t].size; ++i)
            pv[t].data[i] = Real(double(pv[t].data[i]) - lr * double(gv[t].data[i]));
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("train config: learning_rate must be > 0");
    if (alpha < 0 || beta < 0) throw ConfigError("train config: alpha and beta must be >= 0");
    if (num_layers < 1) throw ConfigError("train config: num_layers must be >= 1");
}

template <typename Real>
std::uint64_t model_checksum(const MoeModel<Real>& model) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    auto views = tensor_views(const_cast<MoeModel<Real>&>(model));
    for (const auto& view : views)
        for (std::size_t i = 0; i < view.size; ++i) {
            unsigned char bytes[8];
            if constexpr (sizeof(Real) == 4) {
                std::uint32_t u;
                std::memcpy(&u, &view.data[i], 4);
                for (int b = 0; b < 4; ++b) bytes[b] = (u >> (8 * b)) & 0xff;
            } else {
                std::uint64_t u;
                std::memcpy(&u, &view.data[i], 8);
                for (int b = 0; b < 8; ++b) bytes[b] = (u >> (8 * b)) & 0xff;
            }
            for (std::size_t b = 0; b < sizeof(Real); ++b) {
                h ^= bytes[b];
                h *= 1099511628211ull;
            }
        }
    return h;
}

template <typename Real>
TrainReport train(const Dataset& dataset, MoeModel<Real>& model, const TrainConfig& config) {
    config.validate();
    dataset.validate();
    model.validate();
    if (dataset.features.dim != model.dim)
        throw DataError("train: feature dim " + std::to_string(dataset.features.dim) +
                        " != model dim " + std::to_string(model.dim));

    const Mat<Real> h0 = to_mat<Real>(dataset.features);
    AdamState<Real> adam = AdamState<Real>::sized_for(model);
    BackwardOptions bopts;
    bopts.entropy_eps = config.entropy_eps;
    bopts.oc_block_gating = config.oc_block_gating;

    TrainReport report;
    report.epochs.reserve(config.epochs);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        ForwardTrace<Real> trace = model_forward(model, dataset.graph, h0);
        LossBreakdown losses = compute_losses(trace, config.alpha, config.beta, config.entropy_eps);
        if (!std::isfinite(losses.l_total))
            throw NumericError("training diverged at epoch " + std::to_string(epoch));

        BackwardResult<Real> bw = backward(model, dataset.graph, trace, bopts);
        ModelGrads<Real> total = bw.total(Real(config.alpha), Real(config.beta));
        if (config.optimizer == Optimizer::Adam)
            adam_step(model, total, adam, config.learning_rate, config.adam_beta1, config.adam_beta2,
                      config.adam_eps);
        else
            sgd_step(model, total, config.learning_rate);

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = losses;
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(stats);
    }
    report.final_model_checksum = model_checksum(model);
    return report;
}

void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open train report for writing: " + path.string());
    f << "# epoch l_expert l_gating l_oc l_total seconds\n";
    char buf[256];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g %.17g %.6f\n", e.epoch, e.loss.l_expert,
                      e.loss.l_gating, e.loss.l_oc, e.loss.l_total, e.seconds);
        f << buf;
    }
    f << "# final_model_checksum " << report.final_model_checksum << "\n";
    if (!f) throw DataError("write_train_report: I/O failure on " + path.string());
}

TrainReport read_train_report(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open train report: " + path.string());
    TrainReport report;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line.rfind("# final_model_checksum", 0) == 0) {
            std::istringstream ss(line.substr(22));
            ss >> report.final_model_checksum;
            continue;
        }
        if (line[0] == '#') continue;
        std::istringstream ss(line);
        EpochStats e;
        if (!(ss >> e.epoch >> e.loss.l_expert >> e.loss.l_gating >> e.loss.l_oc >> e.loss.l_total >>
              e.seconds))
            throw DataError("train report " + path.string() + ": malformed line");
        report.epochs.push_back(e);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

#define CAMERA_INSTANTIATE_TRAINING(Real)                                                       \
    template double loss_expert<Real>(const ForwardTrace<Real>&);                               \
    template double loss_gating<Real>(const ForwardTrace<Real>&, double);                       \
    template double loss_oc_from_trace<Real>(const ForwardTrace<Real>&);                        \
    template LossBreakdown compute_losses<Real>(const ForwardTrace<Real>&, double, double,      \
                                                double);                                       \
    template struct ModelGrads<Real>;                                                           \
    template struct BackwardResult<Real>;                                                       \
    template BackwardResult<Real> backward<Real>(const MoeModel<Real>&, const Graph&,           \
                                                 const ForwardTrace<Real>&,                     \
                                                 const BackwardOptions&);                       \
    template ModelGrads<Real> expert_term_gradient<Real>(const MoeModel<Real>&, const Graph&,   \
                                                         const ForwardTrace<Real>&,             \
                                                         std::size_t, int);                     \
    template ModelGrads<Real> gating_term_gradient<Real>(const MoeModel<Real>&,                 \
                                                         const ForwardTrace<Real>&,             \
                                                         std::size_t, double);                  \
    template ModelGrads<Real> oc_gradient<Real>(const MoeModel<Real>&, const Graph&,            \
                                                const ForwardTrace<Real>&,                      \
                                                const BackwardOptions&);                        \
    template struct AdamState<Real>;                                                            \
    template void adam_step<Real>(MoeModel<Real>&, ModelGrads<Real>&, AdamState<Real>&, double, \
                                  double, double, double);                                      \
    template void sgd_step<Real>(MoeModel<Real>&, ModelGrads<Real>&, double);                   \
    template std::uint64_t model_checksum<Real>(const MoeModel<Real>&);                         \
    template TrainReport train<Real>(const Dataset&, MoeModel<Real>&, const TrainConfig&);

CAMERA_INSTANTIATE_TRAINING(float)
CAMERA_INSTANTIATE_TRAINING(double)

#undef CAMERA_INSTANTIATE_TRAINING

}  // namespace camera
