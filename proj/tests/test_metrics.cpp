#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gmge/metrics.hpp"
#include "gmge/rng.hpp"
#include "gmge/split.hpp"

using gmge::confusion_metrics;
using gmge::paired_t_test;
using gmge::Rng;
using gmge::roc_auc;
using gmge::ValueError;

namespace {

// Brute-force references: plain counting loops.
double auc_pairwise(const std::vector<double>& s, const std::vector<int>& y) {
    double won = 0;
    long pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            ++pairs;
            if (s[i] > s[j])
                won += 1.0;
            else if (s[i] == s[j])
                won += 0.5;
        }
    return won / static_cast<double>(pairs);
}

}  // namespace

TEST(ConfusionMetrics, HandArithmetic) {
    // TP=90 TN=85 FP=10 FN=15
    std::vector<int> preds, labels;
    auto push = [&](int p, int y, int count) {
        for (int i = 0; i < count; ++i) {
            preds.push_back(p);
            labels.push_back(y);
        }
    };
    push(1, 1, 90);
    push(0, 0, 85);
    push(1, 0, 10);
    push(0, 1, 15);
    auto m = confusion_metrics(preds, labels);
    EXPECT_EQ(m.tp, 90);
    EXPECT_EQ(m.tn, 85);
    EXPECT_EQ(m.fp, 10);
    EXPECT_EQ(m.fn, 15);
    EXPECT_NEAR(m.accuracy, 0.875, 1e-6);
    EXPECT_NEAR(m.sensitivity, 0.857143, 1e-6);
    EXPECT_NEAR(m.specificity, 0.894737, 1e-6);
}

TEST(ConfusionMetrics, PerfectPredictions) {
    std::vector<int> y = {0, 1, 1, 0, 1};
    auto m = confusion_metrics(y, y);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(m.sensitivity, 1.0);
    EXPECT_DOUBLE_EQ(m.specificity, 1.0);
}

TEST(ConfusionMetrics, AllPredictedPositive) {
    std::vector<int> preds(10, 1);
    std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    auto m = confusion_metrics(preds, labels);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(m.sensitivity, 1.0);
    EXPECT_DOUBLE_EQ(m.specificity, 0.0);
}

TEST(ConfusionMetrics, UndefinedCasesThrow) {
    std::vector<int> preds = {1, 0};
    EXPECT_THROW(confusion_metrics(preds, {1, 1}), ValueError);  // no negatives
    EXPECT_THROW(confusion_metrics(preds, {0, 0}), ValueError);  // no positives
}

TEST(RocAuc, FourPointFixture) {
    auto r = roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(r.auc, 0.75);
}

TEST(RocAuc, PerfectSeparation) {
    auto r = roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1});
    EXPECT_DOUBLE_EQ(r.auc, 1.0);
}

TEST(RocAuc, InvertedLabelsComplement) {
    auto r = roc_auc({0.1, 0.4, 0.35, 0.8}, {1, 1, 0, 0});
    EXPECT_DOUBLE_EQ(r.auc, 0.25);
}

TEST(RocAuc, TiesCountHalf) {
    auto r = roc_auc({0.5, 0.5}, {0, 1});
    EXPECT_DOUBLE_EQ(r.auc, 0.5);
}

TEST(RocAuc, SingleClassThrows) {
    EXPECT_THROW(roc_auc({0.5, 0.7}, {1, 1}), ValueError);
}

TEST(RocAuc, MatchesPairwiseOracleOnRandomInstances) {
    Rng rng(555);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = 2 + rng.next_below(12);
        std::vector<double> s(n);
        std::vector<int> y(n);
        bool has[2] = {false, false};
        for (std::size_t i = 0; i < n; ++i) {
            // coarse grid so ties actually happen
            s[i] = static_cast<double>(rng.next_below(8)) / 8.0;
            y[i] = static_cast<int>(rng.next_below(2));
            has[y[i]] = true;
        }
        if (!has[0] || !has[1]) continue;
        ASSERT_DOUBLE_EQ(roc_auc(s, y).auc, auc_pairwise(s, y)) << "iter " << iter;
    }
}

TEST(RocAuc, AntisymmetryForTieFreeScores) {
    Rng rng(556);
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t n = 4 + rng.next_below(10);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rng.next_double();  // ties have measure zero
            y[i] = static_cast<int>(rng.next_below(2));
        }
        y[0] = 0;
        y[1] = 1;
        std::vector<int> inv(n);
        for (std::size_t i = 0; i < n; ++i) inv[i] = 1 - y[i];
        ASSERT_DOUBLE_EQ(roc_auc(s, y).auc + roc_auc(s, inv).auc, 1.0);
    }
}

TEST(RocAuc, CurveEndpointsAndMonotonicity) {
    Rng rng(557);
    std::vector<double> s(30);
    std::vector<int> y(30);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.next_double();
        y[i] = static_cast<int>(rng.next_below(2));
    }
    y[0] = 0;
    y[1] = 1;
    auto r = roc_auc(s, y);
    EXPECT_DOUBLE_EQ(r.points.front().fpr, 0.0);
    EXPECT_DOUBLE_EQ(r.points.front().tpr, 0.0);
    EXPECT_DOUBLE_EQ(r.points.back().fpr, 1.0);
    EXPECT_DOUBLE_EQ(r.points.back().tpr, 1.0);
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        EXPECT_GE(r.points[i].fpr, r.points[i - 1].fpr);
        EXPECT_GE(r.points[i].tpr, r.points[i - 1].tpr);
    }
}

TEST(PairedTTest, HandValue) {
    // d = [1,2,3]: mean 2, sd 1, t = 2/(1/sqrt(3))
    auto r = paired_t_test({2, 4, 6}, {1, 2, 3}, 0.05);
    EXPECT_NEAR(r.t, 3.4641, 1e-4);
    EXPECT_EQ(r.df, 2);
    // critical value at df=2 is 4.303: no rejection
    EXPECT_FALSE(r.reject);
}

TEST(PairedTTest, IdenticalSeriesDegenerate) {
    std::vector<double> a = {0.1, 0.2, 0.3};
    EXPECT_THROW(paired_t_test(a, a, 0.05), ValueError);
}

TEST(PairedTTest, TabulatedDecisionAtFiveFolds) {
    // k=5, d = [0.05, 0.06, 0.04, 0.05, 0.05]: mean 0.05, sd ~0.00707
    // t = 0.05/(0.00707/sqrt(5)) ~ 15.81 > 2.776 -> reject
    std::vector<double> b = {0.80, 0.81, 0.79, 0.80, 0.82};
    std::vector<double> a = {0.85, 0.87, 0.83, 0.85, 0.87};
    auto r = paired_t_test(a, b, 0.05);
    EXPECT_EQ(r.df, 4);
    EXPECT_NEAR(r.critical, 2.776, 1e-9);
    EXPECT_TRUE(r.reject);

    // small consistent-sign differences but tiny mean: hand-built accept
    std::vector<double> c = {0.801, 0.809, 0.792, 0.80, 0.821};
    auto r2 = paired_t_test(c, b, 0.05);
    EXPECT_FALSE(r2.reject);
}

TEST(PairedTTest, UnsupportedAlphaRejected) {
    EXPECT_THROW(paired_t_test({1, 2, 3}, {0, 0, 0}, 0.20), ValueError);
}

TEST(MakeSplit, PaperScaleSizes) {
    Rng rng(1);
    std::vector<int> labels(130);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < 80 ? 1 : 0;
    auto plan = gmge::make_split(130, labels, 99, 30, 0.2, 5);
    EXPECT_EQ(plan.extractor.size(), 30u);
    EXPECT_EQ(plan.test.size(), 20u);
    EXPECT_EQ(plan.train.size(), 80u);
    for (const auto& f : plan.folds) EXPECT_EQ(f.size(), 16u);
}

TEST(MakeSplit, DeterministicForSeed) {
    std::vector<int> labels(60);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
    auto a = gmge::make_split(60, labels, 7, 10, 0.2, 5);
    auto b = gmge::make_split(60, labels, 7, 10, 0.2, 5);
    EXPECT_EQ(a.extractor, b.extractor);
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.folds, b.folds);
    auto c = gmge::make_split(60, labels, 8, 10, 0.2, 5);
    EXPECT_NE(a.extractor, c.extractor);
}

TEST(MakeSplit, SizingErrors) {
    std::vector<int> labels(30, 1);
    for (int i = 0; i < 15; ++i) labels[i] = 0;
    EXPECT_THROW(gmge::make_split(30, labels, 1, 30, 0.2, 5), ValueError);
    EXPECT_THROW(gmge::make_split(30, labels, 1, 28, 0.2, 5), ValueError);
}

TEST(MakeSplit, PartitionsDisjointAndCoveringOnRandomSizes) {
    Rng rng(88);
    for (int iter = 0; iter < 30; ++iter) {
        const std::size_t n = 40 + rng.next_below(120);
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng.next_below(2));
        labels[0] = 0;
        labels[1] = 1;
        const std::size_t ext = 5 + rng.next_below(10);
        auto plan = gmge::make_split(n, labels, rng.next_u64(), ext, 0.2, 5);
        EXPECT_EQ(plan.extractor.size(), ext);
        // validate() throws on any disjointness/coverage violation
        plan.validate(n);
    }
}

TEST(MakeSplit, StratificationRoughlyPreservesPrevalence) {
    std::vector<int> labels(200);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < 120 ? 1 : 0;  // 60% positive
    auto plan = gmge::make_split(200, labels, 5, 30, 0.2, 5);
    auto frac = [&](const std::vector<std::size_t>& part) {
        double p = 0;
        for (auto i : part) p += labels[i];
        return p / static_cast<double>(part.size());
    };
    EXPECT_NEAR(frac(plan.extractor), 0.6, 0.05);
    EXPECT_NEAR(frac(plan.test), 0.6, 0.1);
    for (const auto& f : plan.folds) EXPECT_NEAR(frac(f), 0.6, 0.15);
}
