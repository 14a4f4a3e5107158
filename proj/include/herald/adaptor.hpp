#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "herald/errors.hpp"
#include "herald/hypergraph.hpp"
#include "herald/rng.hpp"
#include "herald/tensor.hpp"

namespace herald {

/// Entries of the soft incidence matrix are floored here before degree
/// computation so exp underflow can never produce a zero soft degree.
constexpr double kSoftIncidenceFloor = 1e-12;

/// Learnable bundle of one adaptor instance. The bandwidth is a
/// hyper-parameter, not a trained value; it is distinct from the layer
/// activation even though the source notation overloads the symbol.
struct HeraldParams {
    Tensor w_v;            // {d, h} attention/value projection
    Tensor w_e;            // {d, h} hyperedge projection
    Tensor w_s;            // {h, 1} distance scoring vector
    double sigma = 1.0;    // Gaussian kernel bandwidth, > 0

    std::size_t parameter_count() const {
        return w_v.numel() + w_e.numel() + w_s.numel();
    }
};

inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                             Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = rng.uniform(-limit, limit);
    return Tensor::from_data(std::move(shape), std::move(values), /*requires_grad=*/true);
}

inline HeraldParams make_herald_params(std::size_t d, std::size_t h, double sigma,
                                       Rng& rng) {
    if (!(sigma > 0.0)) throw ContractError("herald: sigma must be positive");
    HeraldParams p;
    p.w_v = glorot_uniform({d, h}, d, h, rng);
    p.w_e = glorot_uniform({d, h}, d, h, rng);
    p.w_s = glorot_uniform({h, 1}, h, 1, rng);
    p.sigma = sigma;
    return p;
}

struct MixSchedule {
    enum class Mode { cosine_layerwise, constant };
    Mode mode = Mode::cosine_layerwise;
    double constant_value = 0.1;  // used in constant mode; must lie in [0,1]
};

/// Layer-wise updating strength: a(l) = 1 - 0.9 (cos(pi (l-1)/10) + 1) / 2,
/// clamped to [0,1].
inline double mix_coefficient(const MixSchedule& s, int layer) {
    if (s.mode == MixSchedule::Mode::constant) {
        if (s.constant_value < 0.0 || s.constant_value > 1.0) {
            throw ContractError("mix schedule: constant must lie in [0,1]");
        }
        return s.constant_value;
    }
    if (layer < 1) throw ContractError("mix schedule: layer index must be >= 1");
    const double a =
        1.0 - 0.9 * (std::cos(M_PI * static_cast<double>(layer - 1) / 10.0) + 1.0) / 2.0;
    return std::clamp(a, 0.0, 1.0);
}

/// Mean of incident vertex features per hyperedge: f_i = (1/|e_i|) sum x_v.
inline Tensor hyperedge_features(const Tensor& x, const PreparedGraph& prep) {
    if (x.shape().size() != 2 || x.rows() != prep.graph->num_nodes) {
        throw DimensionError("hyperedge_features: feature matrix " + shape_str(x.shape()) +
                             " must have one row per vertex (" +
                             std::to_string(prep.graph->num_nodes) + ")");
    }
    return matmul(prep.edge_avg, x);
}

/// Single-head self-attention over all vertex pairs. Scores are plain
/// Gram-matrix dot products of the projected features; there is no
/// 1/sqrt(h) temperature unless explicitly requested.
inline Tensor attended_node_features(const Tensor& x, const HeraldParams& p,
                                     bool scale_scores = false) {
    Tensor projected = matmul(x, p.w_v);  // rows are W_vᵀ x_j
    Tensor scores = matmul(projected, transpose(projected));
    if (scale_scores) {
        scores = scale(scores, 1.0 / std::sqrt(static_cast<double>(p.w_v.cols())));
    }
    Tensor alpha = softmax_rows(scores);
    return matmul(alpha, projected);
}

/// d_ij = w_sᵀ (x_i - f_j)^{∘2} for every vertex/hyperedge pair. The
/// score vector is applied as-is, so negative components make this a
/// pseudo-distance that may go below zero.
inline Tensor weighted_pairwise_sqdist(const Tensor& x, const Tensor& f, const Tensor& w) {
    if (x.shape().size() != 2 || f.shape().size() != 2 || x.cols() != f.cols()) {
        throw DimensionError("pairwise distance: feature dims disagree, " +
                             shape_str(x.shape()) + " vs " + shape_str(f.shape()));
    }
    const std::size_t m = x.rows(), n = f.rows(), h = x.cols();
    if (w.shape() != Shape{h, 1}) {
        throw DimensionError("pairwise distance: weight vector " + shape_str(w.shape()) +
                             " must be [" + std::to_string(h) + " x 1]");
    }
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = x.data().data() + i * h;
        for (std::size_t j = 0; j < n; ++j) {
            const double* fj = f.data().data() + j * h;
            double acc = 0.0;
            for (std::size_t s = 0; s < h; ++s) {
                const double diff = xi[s] - fj[s];
                acc += w.at(s) * diff * diff;
            }
            out[i * n + j] = acc;
        }
    }
    return make_op("weighted_pairwise_sqdist", {m, n}, std::move(out), {x, f, w},
                   [m, n, h](const TensorNode& o) {
                       auto& ix = *o.inputs[0];
                       auto& ifeat = *o.inputs[1];
                       auto& iw = *o.inputs[2];
                       if (ix.requires_grad) ix.ensure_grad();
                       if (ifeat.requires_grad) ifeat.ensure_grad();
                       if (iw.requires_grad) iw.ensure_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                           const double* xi = ix.data.data() + i * h;
                           for (std::size_t j = 0; j < n; ++j) {
                               const double g = o.grad[i * n + j];
                               if (g == 0.0) continue;
                               const double* fj = ifeat.data.data() + j * h;
                               for (std::size_t s = 0; s < h; ++s) {
                                   const double diff = xi[s] - fj[s];
                                   if (ix.requires_grad)
                                       ix.grad[i * h + s] += g * iw.data[s] * 2.0 * diff;
                                   if (ifeat.requires_grad)
                                       ifeat.grad[j * h + s] -= g * iw.data[s] * 2.0 * diff;
                                   if (iw.requires_grad)
                                       iw.grad[s] += g * diff * diff;
                               }
                           }
                       }
                   });
}

/// Gaussian-kernel soft incidence matrix (entries exp(-d_ij / 2 sigma^2),
/// floored at kSoftIncidenceFloor). With negative pseudo-distances some
/// entries exceed 1; that is the defined behavior.
inline Tensor soft_incidence(const Tensor& x_bar, const Tensor& f_bar,
                             const HeraldParams& p) {
    Tensor d = weighted_pairwise_sqdist(x_bar, f_bar, p.w_s);
    Tensor kernel = exp(scale(d, -1.0 / (2.0 * p.sigma * p.sigma)));
    return clamp_min(kernel, kSoftIncidenceFloor);
}

/// hatN = (1-a) N + a N_res, with N_res the normalized operator of the
/// soft incidence matrix (degrees recomputed from it, on the tape).
struct ResidualOperator {
    Tensor n_res;
    Tensor n_hat;
};

inline ResidualOperator residual_operator(const Tensor& h_tilde,
                                          const std::vector<double>& weights,
                                          const Tensor& n_static, double a) {
    if (a < 0.0 || a > 1.0) {
        throw ContractError("residual_operator: mix coefficient " + std::to_string(a) +
                             " outside [0,1]");
    }
    ResidualOperator r;
    r.n_res = normalized_operator(h_tilde, weights);
    r.n_hat = add(scale(n_static, 1.0 - a), scale(r.n_res, a));
    return r;
}

/// Everything one adaptor invocation produces. The HGNN layer consumes
/// n_hat; the Laplacian is the module's formal output and what the
/// inspection tooling dumps.
struct HeraldOutput {
    Tensor h_tilde;    // {V,E} soft incidence
    Tensor n_res;      // {V,V}
    Tensor n_hat;      // {V,V}
    Tensor laplacian;  // I - n_hat
    double mix = 0.0;
};

/// Full adaptor pass: hyperedge means, projections, self-attention,
/// pairwise kernel, residual mixing, Laplacian.
inline HeraldOutput herald_forward(const Tensor& x, const PreparedGraph& prep,
                                   const HeraldParams& params, double a,
                                   bool scale_scores = false) {
    Tensor edge_feats = hyperedge_features(x, prep);
    Tensor edge_proj = matmul(edge_feats, params.w_e);
    Tensor node_attn = attended_node_features(x, params, scale_scores);
    Tensor h_tilde = soft_incidence(node_attn, edge_proj, params);
    ResidualOperator res = residual_operator(h_tilde, prep.weights, prep.normalized, a);
    HeraldOutput out;
    out.h_tilde = h_tilde;
    out.n_res = res.n_res;
    out.n_hat = res.n_hat;
    out.laplacian = sub(Tensor::identity(res.n_hat.rows()), res.n_hat);
    out.mix = a;
    return out;
}

}  // namespace herald
