#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "herald/errors.hpp"
#include "herald/tensor.hpp"

namespace herald {

/// Vertex/hyperedge structure. Hyperedges are stored as sorted unique
/// member lists (the incidence matrix is 0/1); duplicate hyperedges are
/// legal and kept.
struct Hypergraph {
    std::size_t num_nodes = 0;
    std::vector<std::vector<int>> hyperedges;
    std::vector<double> edge_weights;  // positive; defaults to all-ones
    std::optional<Tensor> features;    // {num_nodes, d}, no gradients
    std::vector<int> node_labels;      // empty when absent
    int graph_label = -1;              // for graph-level tasks; -1 when absent

    std::size_t num_edges() const { return hyperedges.size(); }
};

struct DegreePair {
    std::vector<double> vertex;  // d(v) = sum_e w(e) h(v,e)
    std::vector<double> edge;    // delta(e) = sum_v h(v,e)
};

namespace detail {

inline std::vector<int> canonical_members(std::vector<int> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    return members;
}

}  // namespace detail

/// Validating constructor used by loaders and fixtures. Canonicalizes
/// member lists; rejects empty edges, bad ids, non-positive weights and
/// isolated vertices.
inline Hypergraph make_hypergraph(std::size_t num_nodes,
                                  std::vector<std::vector<int>> hyperedges,
                                  std::vector<double> edge_weights = {},
                                  std::optional<Tensor> features = std::nullopt,
                                  std::vector<int> node_labels = {}) {
    Hypergraph g;
    g.num_nodes = num_nodes;
    g.hyperedges.reserve(hyperedges.size());
    for (std::size_t e = 0; e < hyperedges.size(); ++e) {
        auto members = detail::canonical_members(std::move(hyperedges[e]));
        if (members.empty()) {
            throw StructuralError("hyperedge " + std::to_string(e) + " is empty");
        }
        for (int v : members) {
            if (v < 0 || static_cast<std::size_t>(v) >= num_nodes) {
                throw StructuralError("hyperedge " + std::to_string(e) +
                                      " references invalid vertex " + std::to_string(v));
            }
        }
        g.hyperedges.push_back(std::move(members));
    }
    if (edge_weights.empty()) {
        g.edge_weights.assign(g.hyperedges.size(), 1.0);
    } else {
        if (edge_weights.size() != g.hyperedges.size()) {
            throw StructuralError("edge weight count " + std::to_string(edge_weights.size()) +
                                  " does not match hyperedge count " +
                                  std::to_string(g.hyperedges.size()));
        }
        for (std::size_t e = 0; e < edge_weights.size(); ++e) {
            if (!(edge_weights[e] > 0.0)) {
                throw StructuralError("hyperedge " + std::to_string(e) +
                                      " has non-positive weight");
            }
        }
        g.edge_weights = std::move(edge_weights);
    }
    std::vector<char> covered(num_nodes, 0);
    for (const auto& edge : g.hyperedges)
        for (int v : edge) covered[static_cast<std::size_t>(v)] = 1;
    std::vector<int> isolated;
    for (std::size_t v = 0; v < num_nodes; ++v)
        if (!covered[v]) isolated.push_back(static_cast<int>(v));
    if (!isolated.empty()) {
        std::string list;
        for (std::size_t i = 0; i < isolated.size(); ++i)
            list += (i ? "," : "") + std::to_string(isolated[i]);
        throw StructuralError("isolated vertices: " + list);
    }
    if (features) {
        if (features->shape().size() != 2 || features->shape()[0] != num_nodes) {
            throw StructuralError("feature matrix " + shape_str(features->shape()) +
                                  " does not have one row per vertex");
        }
        g.features = std::move(features);
    }
    g.node_labels = std::move(node_labels);
    return g;
}

/// Exact weighted row/column sums of the binary incidence matrix.
inline DegreePair degrees(const Hypergraph& g) {
    DegreePair d;
    d.vertex.assign(g.num_nodes, 0.0);
    d.edge.assign(g.num_edges(), 0.0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        d.edge[e] = static_cast<double>(g.hyperedges[e].size());
        for (int v : g.hyperedges[e]) d.vertex[static_cast<std::size_t>(v)] += g.edge_weights[e];
    }
    for (std::size_t v = 0; v < g.num_nodes; ++v) {
        if (d.vertex[v] <= 0.0) {
            throw StructuralError("vertex " + std::to_string(v) + " has zero degree");
        }
    }
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (d.edge[e] <= 0.0) {
            throw StructuralError("hyperedge " + std::to_string(e) + " has zero degree");
        }
    }
    return d;
}

/// Dense {|V|, |E|} incidence matrix H (no gradients).
inline Tensor incidence_matrix(const Hypergraph& g) {
    Tensor h = Tensor::zeros({g.num_nodes, g.num_edges()});
    auto& data = h.data();
    const std::size_t n_edges = g.num_edges();
    for (std::size_t e = 0; e < n_edges; ++e)
        for (int v : g.hyperedges[e]) data[static_cast<std::size_t>(v) * n_edges + e] = 1.0;
    return h;
}

namespace detail {

inline void check_operator_inputs(const Tensor& h_like, const std::vector<double>& weights) {
    if (h_like.shape().size() != 2) {
        throw DimensionError("normalized_operator: incidence-like matrix must be rank 2, got " +
                             shape_str(h_like.shape()));
    }
    const std::size_t n_nodes = h_like.rows(), n_edges = h_like.cols();
    if (weights.size() != n_edges) {
        throw DimensionError("normalized_operator: " + std::to_string(weights.size()) +
                             " weights for " + std::to_string(n_edges) + " hyperedges");
    }
    for (std::size_t i = 0; i < h_like.numel(); ++i) {
        if (h_like.at(i) < 0.0) {
            throw StructuralError("normalized_operator: negative incidence entry");
        }
    }
    for (std::size_t v = 0; v < n_nodes; ++v) {
        double row = 0.0;
        for (std::size_t e = 0; e < n_edges; ++e) row += h_like.at(v, e) * weights[e];
        if (row <= 0.0) {
            throw StructuralError("normalized_operator: row " + std::to_string(v) +
                                  " has zero weighted sum");
        }
    }
    for (std::size_t e = 0; e < n_edges; ++e) {
        double col = 0.0;
        for (std::size_t v = 0; v < n_nodes; ++v) col += h_like.at(v, e);
        if (col <= 0.0) {
            throw StructuralError("normalized_operator: column " + std::to_string(e) +
                                  " has zero sum");
        }
    }
}

}  // namespace detail

/// N = Dv^{-1/2} H W De^{-1} Hᵀ Dv^{-1/2}, with both degree matrices
/// recomputed from the matrix that is passed in. Keeping the degrees on
/// the tape matters: when the input is the learned soft incidence matrix
/// the operator must be differentiated through them.
inline Tensor normalized_operator(const Tensor& h_like, const std::vector<double>& weights) {
    detail::check_operator_inputs(h_like, weights);
    const std::size_t n_edges = h_like.cols();
    Tensor w_col = Tensor::from_data({n_edges, 1}, std::vector<double>(weights));
    Tensor dv = matmul(h_like, w_col);                       // {V,1}
    Tensor de = col_sum(h_like);                             // {1,E}
    Tensor s = scale_rows(h_like, div(Tensor::scalar(1.0), sqrt(dv)));
    Tensor coef = mul(transpose(w_col), div(Tensor::scalar(1.0), de));  // {1,E} = w(e)/delta(e)
    Tensor t = scale_columns(s, coef);
    return matmul(t, transpose(s));
}

/// Dv^{-1} H W De^{-1} Hᵀ: similar to N and row-stochastic, which is what
/// pins N's spectrum to [0, 1]. Used by the spectral test suites.
inline Tensor row_stochastic_core(const Tensor& h_like, const std::vector<double>& weights) {
    detail::check_operator_inputs(h_like, weights);
    const std::size_t n_edges = h_like.cols();
    Tensor w_col = Tensor::from_data({n_edges, 1}, std::vector<double>(weights));
    Tensor dv = matmul(h_like, w_col);
    Tensor de = col_sum(h_like);
    Tensor left = scale_rows(h_like, div(Tensor::scalar(1.0), dv));
    Tensor coef = mul(transpose(w_col), div(Tensor::scalar(1.0), de));
    return matmul(scale_columns(left, coef), transpose(h_like));
}

/// L = I - N.
inline Tensor laplacian(const Tensor& n) {
    if (n.shape().size() != 2 || n.rows() != n.cols()) {
        throw DimensionError("laplacian: operator must be square, got " +
                             shape_str(n.shape()));
    }
    return sub(Tensor::identity(n.rows()), n);
}

/// Centroid expansion of a simple graph: every vertex v spawns hyperedge
/// e_v = {v} ∪ neighbors(v), so |E| = |V| and all weights are 1.
inline Hypergraph from_simple_graph(std::size_t num_nodes,
                                    const std::vector<std::pair<int, int>>& edges,
                                    std::optional<Tensor> features = std::nullopt,
                                    std::vector<int> node_labels = {},
                                    int graph_label = -1) {
    std::vector<std::set<int>> adjacent(num_nodes);
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_nodes ||
            static_cast<std::size_t>(v) >= num_nodes) {
            throw StructuralError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                  ") references invalid vertex");
        }
        if (u == v) continue;
        adjacent[static_cast<std::size_t>(u)].insert(v);
        adjacent[static_cast<std::size_t>(v)].insert(u);
    }
    std::vector<std::vector<int>> hyperedges(num_nodes);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        hyperedges[v].assign(adjacent[v].begin(), adjacent[v].end());
        hyperedges[v].push_back(static_cast<int>(v));
    }
    Hypergraph g = make_hypergraph(num_nodes, std::move(hyperedges), {},
                                   std::move(features), std::move(node_labels));
    g.graph_label = graph_label;
    return g;
}

/// Per-graph constants shared by every forward pass: the binary incidence
/// matrix, the member-averaging matrix of the hyperedge-feature step, and
/// the static operator N.
struct PreparedGraph {
    const Hypergraph* graph = nullptr;
    Tensor incidence;   // {V,E}
    Tensor edge_avg;    // {E,V}; row e holds 1/|e| over members
    Tensor normalized;  // N of the binary H
    std::vector<double> weights;
};

inline PreparedGraph prepare(const Hypergraph& g) {
    PreparedGraph p;
    p.graph = &g;
    p.weights = g.edge_weights;
    p.incidence = incidence_matrix(g);
    p.edge_avg = Tensor::zeros({g.num_edges(), g.num_nodes});
    auto& avg = p.edge_avg.data();
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const double inv = 1.0 / static_cast<double>(g.hyperedges[e].size());
        for (int v : g.hyperedges[e])
            avg[e * g.num_nodes + static_cast<std::size_t>(v)] = inv;
    }
    NoGradGuard no_grad;
    p.normalized = normalized_operator(p.incidence, p.weights);
    return p;
}

}  // namespace herald
