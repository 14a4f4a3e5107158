#include <cmath>

#include <gtest/gtest.h>

#include "herald/optim.hpp"
#include "herald/tensor.hpp"

namespace herald {
namespace {

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    Tensor p = Tensor::from_data({3}, {1.0, -2.0, 0.25}, true);
    p.zero_grad();
    Adam opt({p});
    const auto before = p.data();
    opt.step();
    EXPECT_EQ(p.data(), before);
}

TEST(Adam, SingleStepMatchesDirectFormulaEvaluation) {
    // independent evaluation of the update rule for g = 1, t = 1
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double m = (1.0 - b1) * 1.0;
    const double v = (1.0 - b2) * 1.0;
    const double mhat = m / (1.0 - b1);
    const double vhat = v / (1.0 - b2);
    const double expected_delta = lr * mhat / (std::sqrt(vhat) + eps);

    Tensor p = Tensor::from_data({1}, {0.5}, true);
    p.grad()[0] = 1.0;
    Adam opt({p}, AdamConfig{lr, b1, b2, eps});
    opt.step();
    EXPECT_DOUBLE_EQ(p.data()[0], 0.5 - expected_delta);
    // gradients are zeroed by the step
    EXPECT_DOUBLE_EQ(p.grad()[0], 0.0);
    EXPECT_EQ(opt.step_count(), 1);
}

TEST(Adam, IdenticalParamsWithIdenticalGradsStayIdentical) {
    Tensor a = Tensor::from_data({2}, {0.3, -0.7}, true);
    Tensor b = Tensor::from_data({2}, {0.3, -0.7}, true);
    Adam opt({a, b});
    for (int step = 0; step < 5; ++step) {
        a.grad() = {1.5, -0.25};
        b.grad() = {1.5, -0.25};
        opt.step();
        EXPECT_EQ(a.data(), b.data());
    }
}

TEST(Adam, ZeroLearningRateIsBitIdentical) {
    Tensor p = Tensor::from_data({2}, {0.125, -4.75}, true);
    const auto before = p.data();
    Adam opt({p}, AdamConfig{0.0});
    p.grad() = {3.0, -1.0};
    opt.step();
    EXPECT_EQ(p.data(), before);
}

TEST(Adam, MissingGradIsContractError) {
    Tensor p = Tensor::from_data({2}, {1.0, 2.0}, true);
    Adam opt({p});
    EXPECT_THROW(opt.step(), ContractError);
}

}  // namespace
}  // namespace herald
