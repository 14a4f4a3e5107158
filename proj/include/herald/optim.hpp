#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "herald/errors.hpp"
#include "herald/tensor.hpp"

namespace herald {

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment state for one parameter tensor.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        states_.resize(params_.size());
        for (std::size_t p = 0; p < params_.size(); ++p) {
            states_[p].m.assign(params_[p].numel(), 0.0);
            states_[p].v.assign(params_[p].numel(), 0.0);
        }
    }

    std::int64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

    /// One bias-corrected update for every parameter; gradients are zeroed
    /// afterwards so the next forward starts from a clean accumulator.
    void step() {
        for (auto& p : params_) {
            if (!p.requires_grad() || p.node()->grad.size() != p.numel()) {
                throw ContractError("adam: parameter " + shape_str(p.shape()) +
                                    " has no populated gradient");
            }
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t p = 0; p < params_.size(); ++p) {
            auto& data = params_[p].data();
            auto& grad = params_[p].node()->grad;
            auto& st = states_[p];
            for (std::size_t i = 0; i < data.size(); ++i) {
                const double g = grad[i];
                st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
                st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = st.m[i] / bc1;
                const double vhat = st.v[i] / bc2;
                data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            grad.assign(data.size(), 0.0);
        }
    }

private:
    std::vector<Tensor> params_;
    AdamConfig cfg_;
    std::vector<AdamState> states_;
    std::int64_t step_ = 0;
};

}  // namespace herald
