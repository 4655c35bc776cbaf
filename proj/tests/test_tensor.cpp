#include <gtest/gtest.h>

#include "gmge/tensor.hpp"

using gmge::DimError;
using gmge::Tensor;
using gmge::ValueError;

TEST(Tensor, BufferLengthMatchesShape) {
    Tensor<float> t({2, 3, 4});
    EXPECT_EQ(t.numel(), 24u);
    EXPECT_EQ(t.shape(), (std::vector<int>{2, 3, 4}));
}

TEST(Tensor, RejectsNonPositiveExtents) {
    EXPECT_THROW(Tensor<float>({2, 0, 3}), DimError);
    EXPECT_THROW(Tensor<float>({-1}), DimError);
    EXPECT_THROW(Tensor<float>(std::vector<int>{}), DimError);
}

TEST(Tensor, DataLengthValidated) {
    EXPECT_THROW(Tensor<float>({2, 2}, {1.f, 2.f, 3.f}), DimError);
    Tensor<float> ok({2, 2}, {1.f, 2.f, 3.f, 4.f});
    EXPECT_FLOAT_EQ(ok.data()[3], 4.f);
}

TEST(Tensor, GradMatchesShape) {
    Tensor<double> t({3, 2}, true);
    EXPECT_TRUE(t.requires_grad());
    EXPECT_FALSE(t.has_grad());
    t.grad_vec()[5] = 7.0;
    EXPECT_EQ(t.grad_vec().size(), t.numel());
    t.zero_grad();
    EXPECT_DOUBLE_EQ(t.grad_vec()[5], 0.0);
}

TEST(Tensor, ItemRequiresScalar) {
    Tensor<float> s({1}, {3.5f});
    EXPECT_FLOAT_EQ(s.item(), 3.5f);
    Tensor<float> v({2});
    EXPECT_THROW(v.item(), ValueError);
}

TEST(Tensor, CloneDetaches) {
    Tensor<float> t({2}, {1.f, 2.f});
    Tensor<float> c = t.clone();
    c.data()[0] = 9.f;
    EXPECT_FLOAT_EQ(t.data()[0], 1.f);
}
