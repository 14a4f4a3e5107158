#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "herald/adaptor.hpp"
#include "herald/data_io.hpp"
#include "herald/errors.hpp"
#include "herald/model.hpp"
#include "herald/rng.hpp"
#include "herald/tensor.hpp"
#include "herald/training.hpp"

namespace herald {

/// Central-difference check of one parameter tensor against the analytic
/// gradient of a scalar loss. `loss_builder` must be a pure function of
/// the current parameter data. Returns the maximum relative error, with
/// the denominator floored so that near-zero gradients are compared in
/// absolute terms.
inline double gradcheck_max_rel_error(const std::function<Tensor()>& loss_builder,
                                      Tensor param, double step = 1e-5) {
    if (!param.requires_grad()) {
        throw ContractError("gradcheck: parameter does not require gradients");
    }
    param.zero_grad();
    Tensor loss = loss_builder();
    backward(loss);
    const std::vector<double> analytic = param.grad();
    param.zero_grad();

    auto& data = param.data();
    double max_err = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double saved = data[i];
        double up, down;
        {
            NoGradGuard no_grad;
            data[i] = saved + step;
            up = loss_builder().value();
            data[i] = saved - step;
            down = loss_builder().value();
        }
        data[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-3});
        max_err = std::max(max_err, std::fabs(fd - analytic[i]) / denom);
    }
    return max_err;
}

struct GradCheckCase {
    std::string name;
    std::function<double()> run;  // returns max relative error
};

namespace detail {

/// Fixed random cotangent so that "sum(R ∘ out)" exposes every output
/// entry with an O(1) weight.
inline Tensor random_cotangent(const Shape& shape, Rng& rng) {
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    return Tensor::from_data(shape, std::move(values));
}

inline Tensor random_grad_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = scale * rng.normal();
    return Tensor::from_data(shape, std::move(values), /*requires_grad=*/true);
}

}  // namespace detail

/// Seeded per-op and end-to-end finite-difference cases; what the
/// `gradcheck` command runs.
inline std::vector<GradCheckCase> standard_gradcheck_suite(std::uint64_t seed) {
    std::vector<GradCheckCase> cases;

    cases.push_back({"matmul", [seed] {
        Rng rng(stream_seed(seed, "gc.matmul"));
        Tensor a = detail::random_grad_tensor({3, 4}, rng);
        Tensor b = detail::random_grad_tensor({4, 2}, rng);
        Tensor r = detail::random_cotangent({3, 2}, rng);
        auto loss = [&] { return sum(mul(matmul(a, b), r)); };
        return std::max(gradcheck_max_rel_error(loss, a),
                        gradcheck_max_rel_error(loss, b));
    }});

    cases.push_back({"elementwise", [seed] {
        Rng rng(stream_seed(seed, "gc.elementwise"));
        Tensor x = detail::random_grad_tensor({4, 3}, rng, 0.7);
        Tensor y = detail::random_grad_tensor({4, 3}, rng, 0.7);
        Tensor r = detail::random_cotangent({4, 3}, rng);
        auto loss = [&] {
            Tensor num = add(square(x), Tensor::scalar(0.5));
            Tensor den = add(exp(y), Tensor::scalar(1.0));
            Tensor mix = sub(div(num, den), mul(x, y));
            return sum(mul(relu(add(mix, Tensor::scalar(0.2))), r));
        };
        return std::max(gradcheck_max_rel_error(loss, x),
                        gradcheck_max_rel_error(loss, y));
    }});

    cases.push_back({"sqrt_scale_rows", [seed] {
        Rng rng(stream_seed(seed, "gc.sqrt"));
        Tensor m = detail::random_grad_tensor({4, 5}, rng, 0.5);
        Tensor r = detail::random_cotangent({4, 5}, rng);
        auto loss = [&] {
            Tensor positive = add(square(m), Tensor::scalar(0.3));
            Tensor row_scale = sqrt(add(row_sum(positive), Tensor::scalar(1.0)));
            return sum(mul(scale_rows(positive, div(Tensor::scalar(1.0), row_scale)), r));
        };
        return gradcheck_max_rel_error(loss, m);
    }});

    cases.push_back({"softmax_rows", [seed] {
        Rng rng(stream_seed(seed, "gc.softmax"));
        Tensor x = detail::random_grad_tensor({5, 5}, rng);
        Tensor r = detail::random_cotangent({5, 5}, rng);
        auto loss = [&] { return sum(mul(softmax_rows(x), r)); };
        return gradcheck_max_rel_error(loss, x);
    }});

    cases.push_back({"reductions", [seed] {
        Rng rng(stream_seed(seed, "gc.reduce"));
        Tensor x = detail::random_grad_tensor({3, 4}, rng);
        Tensor r = detail::random_cotangent({1, 4}, rng);
        auto loss = [&] {
            Tensor parts = add(frobenius_norm(x), mean(square(x)));
            return add(parts, sum(mul(col_sum(x), r)));
        };
        return gradcheck_max_rel_error(loss, x);
    }});

    cases.push_back({"cross_entropy", [seed] {
        Rng rng(stream_seed(seed, "gc.ce"));
        Tensor logits = detail::random_grad_tensor({4, 3}, rng);
        const std::vector<int> labels = {0, 2, 1, 1};
        const std::vector<int> mask = {0, 1, 3};
        auto loss = [&] { return cross_entropy(logits, labels, mask); };
        return gradcheck_max_rel_error(loss, logits);
    }});

    cases.push_back({"hyperedge_features", [seed] {
        Rng rng(stream_seed(seed, "gc.edgefeat"));
        Hypergraph g = random_hypergraph(6, 3, rng);
        PreparedGraph prep = prepare(g);
        Tensor x = detail::random_grad_tensor({6, 4}, rng);
        Tensor r = detail::random_cotangent({3, 4}, rng);
        auto loss = [&] { return sum(mul(hyperedge_features(x, prep), r)); };
        return gradcheck_max_rel_error(loss, x);
    }});

    cases.push_back({"attention", [seed] {
        Rng rng(stream_seed(seed, "gc.attention"));
        Tensor x = detail::random_grad_tensor({5, 4}, rng);
        Rng prng(stream_seed(seed, "gc.attention.params"));
        HeraldParams p = make_herald_params(4, 3, 1.0, prng);
        Tensor r = detail::random_cotangent({5, 3}, rng);
        auto loss = [&] { return sum(mul(attended_node_features(x, p), r)); };
        return std::max(gradcheck_max_rel_error(loss, x),
                        gradcheck_max_rel_error(loss, p.w_v));
    }});

    cases.push_back({"soft_incidence", [seed] {
        Rng rng(stream_seed(seed, "gc.incidence"));
        Tensor xb = detail::random_grad_tensor({5, 3}, rng);
        Tensor fb = detail::random_grad_tensor({4, 3}, rng);
        Rng prng(stream_seed(seed, "gc.incidence.params"));
        HeraldParams p = make_herald_params(3, 3, 0.9, prng);
        Tensor r = detail::random_cotangent({5, 4}, rng);
        auto loss = [&] { return sum(mul(soft_incidence(xb, fb, p), r)); };
        double err = gradcheck_max_rel_error(loss, xb);
        err = std::max(err, gradcheck_max_rel_error(loss, fb));
        return std::max(err, gradcheck_max_rel_error(loss, p.w_s));
    }});

    cases.push_back({"residual_operator", [seed] {
        Rng rng(stream_seed(seed, "gc.residual"));
        Hypergraph g = random_hypergraph(7, 4, rng);
        PreparedGraph prep = prepare(g);
        // positive soft incidence with gradients
        std::vector<double> soft(7 * 4);
        for (auto& v : soft) v = rng.uniform(0.2, 1.2);
        Tensor h_tilde = Tensor::from_data({7, 4}, std::move(soft), true);
        Tensor r = detail::random_cotangent({7, 7}, rng);
        auto loss = [&] {
            return sum(mul(residual_operator(h_tilde, prep.weights, prep.normalized, 0.37)
                               .n_hat,
                           r));
        };
        return gradcheck_max_rel_error(loss, h_tilde);
    }});

    cases.push_back({"herald_forward", [seed] {
        Rng rng(stream_seed(seed, "gc.herald"));
        Hypergraph g = random_hypergraph(12, 6, rng);
        PreparedGraph prep = prepare(g);
        Tensor x = detail::random_grad_tensor({12, 5}, rng, 0.8);
        Rng prng(stream_seed(seed, "gc.herald.params"));
        HeraldParams p = make_herald_params(5, 3, 1.0, prng);
        Tensor r = detail::random_cotangent({12, 12}, rng);
        auto loss = [&] {
            return sum(mul(herald_forward(x, prep, p, 0.4).laplacian, r));
        };
        double err = gradcheck_max_rel_error(loss, p.w_v);
        err = std::max(err, gradcheck_max_rel_error(loss, p.w_e));
        err = std::max(err, gradcheck_max_rel_error(loss, p.w_s));
        return std::max(err, gradcheck_max_rel_error(loss, x));
    }});

    return cases;
}

/// The end-to-end case: full HGNN+HERALD loss (cross entropy + topology
/// regularizer) on a seeded 12-node/6-edge instance, checked per
/// parameter group.
inline std::vector<GradCheckCase> full_loss_gradcheck_cases(std::uint64_t seed) {
    struct Shared {
        Hypergraph graph;
        PreparedGraph prep;
        Tensor features;
        std::vector<int> labels;
        std::vector<int> mask;
        Model model;
    };
    Rng rng(stream_seed(seed, "gc.full"));
    auto graph = random_hypergraph(12, 6, rng, /*feature_dim=*/5);
    ModelConfig cfg = default_node_config(5, 3, /*herald_on=*/true, /*hidden=*/4);
    cfg.herald_hidden = 3;
    auto shared = std::make_shared<Shared>(Shared{
        std::move(graph), PreparedGraph{}, Tensor(), {}, {}, Model(cfg, seed)});
    shared->prep = prepare(shared->graph);
    shared->features = *shared->graph.features;
    for (std::size_t i = 0; i < 12; ++i) {
        shared->labels.push_back(static_cast<int>(i % 3));
        shared->mask.push_back(static_cast<int>(i));
    }
    auto loss_builder = [shared] {
        ForwardResult fwd = shared->model.forward(shared->prep, shared->features);
        Tensor loss = cross_entropy(fwd.logits, shared->labels, shared->mask);
        return add(loss, scale(topology_regularizer(shared->prep.normalized,
                                                    fwd.herald_outputs),
                               0.1));
    };
    std::vector<GradCheckCase> cases;
    for (const auto& [name, param] : shared->model.named_parameters()) {
        cases.push_back({"full_loss." + name, [loss_builder, param = param] {
            return gradcheck_max_rel_error(loss_builder, param);
        }});
    }
    return cases;
}

}  // namespace herald
