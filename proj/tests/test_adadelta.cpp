#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gmge/adadelta.hpp"
#include "gmge/tensor.hpp"

using gmge::AdadeltaState;
using gmge::NumericError;
using gmge::Tensor;

TEST(Adadelta, FirstStepHandValue) {
    // rho=0.9, eps=1e-6, g=1:
    //   E[g^2] = 0.1, dx = -sqrt(1e-6)/sqrt(0.1 + 1e-6) = -0.0031623
    Tensor<double> p({1}, {0.0});
    p.set_requires_grad(true);
    std::vector<Tensor<double>*> params = {&p};
    AdadeltaState<double> st(params, 0.9, 1e-6);
    p.grad_vec()[0] = 1.0;
    st.step(params);
    EXPECT_NEAR(p.data()[0], -0.0031623, 1e-7);
    EXPECT_NEAR(p.data()[0], -std::sqrt(1e-6) / std::sqrt(0.1 + 1e-6), 1e-9);
}

TEST(Adadelta, TwoHandComputedSteps) {
    const double rho = 0.9, eps = 1e-6;
    Tensor<double> p({1}, {0.0});
    p.set_requires_grad(true);
    std::vector<Tensor<double>*> params = {&p};
    AdadeltaState<double> st(params, rho, eps);

    // hand-tracked state
    double eg2 = 0, ed2 = 0, x = 0;
    const double g[2] = {1.0, 0.5};
    for (int i = 0; i < 2; ++i) {
        eg2 = rho * eg2 + (1 - rho) * g[i] * g[i];
        const double dx = -std::sqrt(ed2 + eps) / std::sqrt(eg2 + eps) * g[i];
        ed2 = rho * ed2 + (1 - rho) * dx * dx;
        x += dx;

        p.zero_grad();
        p.grad_vec()[0] = g[i];
        st.step(params);
        ASSERT_NEAR(p.data()[0], x, 1e-9) << "step " << i;
    }
}

TEST(Adadelta, FiveStepScalarSequence) {
    const double rho = 0.95, eps = 1e-6;
    Tensor<double> p({1}, {2.0});
    p.set_requires_grad(true);
    std::vector<Tensor<double>*> params = {&p};
    AdadeltaState<double> st(params, rho, eps);
    double eg2 = 0, ed2 = 0, x = 2.0;
    for (int i = 0; i < 5; ++i) {
        const double g = 2.0 * x;  // d/dx x^2
        eg2 = rho * eg2 + (1 - rho) * g * g;
        const double dx = -std::sqrt(ed2 + eps) / std::sqrt(eg2 + eps) * g;
        ed2 = rho * ed2 + (1 - rho) * dx * dx;
        x += dx;

        p.zero_grad();
        p.grad_vec()[0] = 2.0 * p.data()[0];
        st.step(params);
        ASSERT_NEAR(p.data()[0], x, 1e-9) << "step " << i;
    }
}

TEST(Adadelta, ZeroGradientOnlyDecaysAccumulators) {
    Tensor<double> p({2}, {1.0, -1.0});
    p.set_requires_grad(true);
    std::vector<Tensor<double>*> params = {&p};
    AdadeltaState<double> st(params, 0.9, 1e-6);
    p.grad_vec();  // allocate zeros
    st.step(params);
    EXPECT_DOUBLE_EQ(p.data()[0], 1.0);
    EXPECT_DOUBLE_EQ(p.data()[1], -1.0);
}

TEST(Adadelta, QuadraticConvergesWithinBudget) {
    // loss f(x,y) = x^2 + 2 y^2, start (1.5, -1)
    Tensor<double> p({2}, {1.5, -1.0});
    p.set_requires_grad(true);
    std::vector<Tensor<double>*> params = {&p};
    AdadeltaState<double> st(params, 0.95, 1e-6);
    double loss = 0;
    for (int i = 0; i < 2000; ++i) {
        const double x = p.data()[0], y = p.data()[1];
        loss = x * x + 2 * y * y;
        if (loss < 1e-6) break;
        p.zero_grad();
        p.grad_vec()[0] = 2 * x;
        p.grad_vec()[1] = 4 * y;
        st.step(params);
    }
    EXPECT_LT(loss, 1e-6);
}

TEST(Adadelta, NonFiniteGradientAborts) {
    Tensor<double> p({1}, {0.0});
    p.set_requires_grad(true);
    std::vector<Tensor<double>*> params = {&p};
    AdadeltaState<double> st(params, 0.9, 1e-6);
    p.grad_vec()[0] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(st.step(params), NumericError);
}
