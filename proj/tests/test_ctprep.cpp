#include <gtest/gtest.h>

#include <cstring>
#include <cmath>

#include "gmge/ctprep.hpp"
#include "gmge/rng.hpp"

using gmge::CTVolume;
using gmge::Rng;
using gmge::ValueError;

namespace {

CTVolume random_volume(int w, int h, int d, Rng& rng, float lo = -1000.f, float hi = 1000.f,
                       std::array<float, 3> spacing = {1, 1, 1}) {
    CTVolume v(w, h, d, 0.f, spacing);
    for (auto& x : v.voxels) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

}  // namespace

TEST(ClipNormalize, WindowMapping) {
    CTVolume v(2, 2, 1);
    v.voxels = {1000.f, -1000.f, 0.f, 200.f};
    auto out = gmge::clip_and_normalize(v, -400.f, 400.f);
    EXPECT_FLOAT_EQ(out.voxels[0], 1.0f);
    EXPECT_FLOAT_EQ(out.voxels[1], 0.0f);
    EXPECT_FLOAT_EQ(out.voxels[2], 0.5f);
    EXPECT_FLOAT_EQ(out.voxels[3], 0.75f);
}

TEST(ClipNormalize, RangeAndMonotonicity) {
    Rng rng(31);
    CTVolume v = random_volume(5, 5, 5, rng, -2000.f, 2000.f);
    auto out = gmge::clip_and_normalize(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_GE(out.voxels[i], 0.f);
        EXPECT_LE(out.voxels[i], 1.f);
        for (std::size_t j = 0; j < v.size(); ++j)
            if (v.voxels[i] <= v.voxels[j]) EXPECT_LE(out.voxels[i], out.voxels[j]);
    }
    EXPECT_THROW(gmge::clip_and_normalize(v, 400.f, -400.f), ValueError);
}

TEST(ResampleIsotropic, ExtentArithmetic) {
    CTVolume v(100, 100, 50, 7.f, {0.5f, 0.5f, 2.0f});
    auto out = gmge::resample_isotropic(v, 1.f);
    EXPECT_EQ(out.w, 50);
    EXPECT_EQ(out.h, 50);
    EXPECT_EQ(out.d, 100);
    EXPECT_FLOAT_EQ(out.spacing[2], 1.f);
}

TEST(ResampleIsotropic, IsotropicInputIsIdentity) {
    Rng rng(32);
    CTVolume v = random_volume(8, 9, 10, rng);
    auto out = gmge::resample_isotropic(v, 1.f);
    ASSERT_EQ(out.w, v.w);
    ASSERT_EQ(out.h, v.h);
    ASSERT_EQ(out.d, v.d);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(out.voxels[i], v.voxels[i], 1e-6f);
}

TEST(ResampleIsotropic, LinearRampInterpolatesExactly) {
    // f(x,y,z) = physical x position; trilinear must reproduce the ramp
    CTVolume v(12, 6, 6, 0.f, {2.f, 1.f, 1.f});
    for (int z = 0; z < v.d; ++z)
        for (int y = 0; y < v.h; ++y)
            for (int x = 0; x < v.w; ++x) v.at(x, y, z) = (x + 0.5f) * v.spacing[0];
    auto out = gmge::resample_isotropic(v, 1.f);
    ASSERT_EQ(out.w, 24);
    for (int z = 0; z < out.d; ++z)
        for (int y = 0; y < out.h; ++y)
            for (int x = 2; x < out.w - 2; ++x)  // interior: no border clamp
                EXPECT_NEAR(out.at(x, y, z), (x + 0.5f) * 1.f, 1e-4f);
}

TEST(ResampleIsotropic, ConstantFieldPreservedExactly) {
    CTVolume v(7, 5, 9, 3.25f, {1.3f, 0.7f, 2.1f});
    auto out = gmge::resample_isotropic(v, 1.f);
    for (float x : out.voxels) EXPECT_EQ(x, 3.25f);
}

TEST(ResampleIsotropic, SmoothFieldMeanPreservedWithinOnePercent) {
    CTVolume v(20, 20, 10, 0.f, {0.7f, 0.9f, 2.0f});
    for (int z = 0; z < v.d; ++z)
        for (int y = 0; y < v.h; ++y)
            for (int x = 0; x < v.w; ++x)
                v.at(x, y, z) = 100.f + 20.f * std::sin(0.3f * x) * std::cos(0.25f * y) +
                                10.f * std::sin(0.4f * z);
    double mean_in = 0;
    for (float x : v.voxels) mean_in += x;
    mean_in /= static_cast<double>(v.size());
    auto out = gmge::resample_isotropic(v, 1.f);
    double mean_out = 0;
    for (float x : out.voxels) mean_out += x;
    mean_out /= static_cast<double>(out.size());
    EXPECT_NEAR(mean_out, mean_in, 0.01 * std::abs(mean_in));
}

TEST(ResampleIsotropic, DegenerateAxisRejected) {
    CTVolume v(1, 5, 5);
    EXPECT_THROW(gmge::resample_isotropic(v, 1.f), ValueError);
}

TEST(SlabSelect, HandArithmetic) {
    CTVolume v(4, 4, 220);
    for (int z = 0; z < v.d; ++z)
        for (int y = 0; y < v.h; ++y)
            for (int x = 0; x < v.w; ++x) v.at(x, y, z) = static_cast<float>(z);
    v.nose_slice = 60;
    v.acromion_slice = 160;
    auto out = gmge::slab_select(v, 30.f);
    EXPECT_EQ(out.d, 161);  // z in [30, 190]
    EXPECT_FLOAT_EQ(out.at(0, 0, 0), 30.f);
    EXPECT_FLOAT_EQ(out.at(0, 0, out.d - 1), 190.f);
    EXPECT_EQ(*out.nose_slice, 30);
    EXPECT_EQ(*out.acromion_slice, 130);
}

TEST(SlabSelect, ZeroMarginKeepsLandmarkToLandmark) {
    CTVolume v(2, 2, 50);
    v.nose_slice = 10;
    v.acromion_slice = 40;
    auto out = gmge::slab_select(v, 0.f);
    EXPECT_EQ(out.d, 31);
}

TEST(SlabSelect, EdgeLandmarksClipWithoutError) {
    struct Case {
        int d, nose, acr;
        float margin;
        int want_d;
    };
    // hand-built boundary table
    const Case cases[] = {
        {50, 2, 47, 10.f, 50},   // both clipped to the full volume
        {50, 0, 49, 5.f, 50},    // landmarks at the very edges
        {50, 1, 20, 30.f, 50},   // clip at 0, hi clipped at 49
        {50, 30, 45, 10.f, 30},  // lo = 20, hi = 49
    };
    for (const auto& c : cases) {
        CTVolume v(2, 2, c.d);
        v.nose_slice = c.nose;
        v.acromion_slice = c.acr;
        auto out = gmge::slab_select(v, c.margin);
        EXPECT_EQ(out.d, c.want_d) << "nose=" << c.nose << " acr=" << c.acr;
        EXPECT_GT(out.d, 0);
    }
}

TEST(SlabSelect, MissingLandmarksRejected) {
    CTVolume v(2, 2, 50);
    EXPECT_THROW(gmge::slab_select(v, 30.f), ValueError);
    v.nose_slice = 10;
    EXPECT_THROW(gmge::slab_select(v, 30.f), ValueError);
}

TEST(SlabSelect, OrientationValidated) {
    CTVolume v(2, 2, 50);
    v.nose_slice = 40;   // nose below acromion contradicts head_to_feet
    v.acromion_slice = 10;
    EXPECT_THROW(gmge::slab_select(v, 0.f), ValueError);
}

TEST(ResizeTo, TargetExtentExact) {
    Rng rng(33);
    CTVolume v = random_volume(37, 23, 11, rng);
    auto out = gmge::resize_to(v, {150, 150, 90});
    EXPECT_EQ(out.w, 150);
    EXPECT_EQ(out.h, 150);
    EXPECT_EQ(out.d, 90);
}

TEST(ResizeTo, IdentityWhenTargetMatches) {
    Rng rng(34);
    CTVolume v = random_volume(9, 7, 5, rng);
    auto out = gmge::resize_to(v, {9, 7, 5});
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(out.voxels[i], v.voxels[i], 1e-6f);
}

TEST(ResizeTo, ConstantVolumeExact) {
    CTVolume v(6, 5, 4, -2.5f);
    auto out = gmge::resize_to(v, {13, 9, 7});
    for (float x : out.voxels) EXPECT_EQ(x, -2.5f);
}

TEST(PreprocessChain, Deterministic) {
    Rng rng(35);
    CTVolume v = random_volume(20, 20, 30, rng, -1000.f, 1000.f, {1.f, 1.f, 1.5f});
    v.nose_slice = 4;
    v.acromion_slice = 26;
    gmge::PrepOptions opt;
    opt.slab_margin_mm = 5.f;
    opt.input_extent = {16, 16, 16};
    auto a = gmge::preprocess(v, opt);
    auto b = gmge::preprocess(v, opt);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(0, std::memcmp(a.voxels.data(), b.voxels.data(), a.size() * sizeof(float)));
    EXPECT_EQ(a.w, 16);
    EXPECT_EQ(a.d, 16);
    for (float x : a.voxels) {
        EXPECT_GE(x, 0.f);
        EXPECT_LE(x, 1.f);
    }
}
