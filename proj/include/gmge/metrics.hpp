#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gmge/errors.hpp"

namespace gmge {

struct ConfusionMetrics {
    double accuracy = 0, sensitivity = 0, specificity = 0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

// accuracy    = (TP+TN) / (TP+TN+FP+FN)
// sensitivity = TP / (TP+FN)
// specificity = TN / (TN+FP)
inline ConfusionMetrics confusion_metrics(const std::vector<int>& preds,
                                          const std::vector<int>& labels) {
    if (preds.size() != labels.size())
        throw DimError("confusion_metrics: " + std::to_string(preds.size()) + " predictions vs " +
                       std::to_string(labels.size()) + " labels");
    if (preds.empty()) throw ValueError("confusion_metrics: empty input");
    ConfusionMetrics m;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1))
            throw ValueError("confusion_metrics: entry " + std::to_string(i) + " not in {0,1}");
        if (labels[i] == 1)
            preds[i] == 1 ? ++m.tp : ++m.fn;
        else
            preds[i] == 1 ? ++m.fp : ++m.tn;
    }
    if (m.tp + m.fn == 0)
        throw ValueError("confusion_metrics: sensitivity undefined, no positive labels");
    if (m.tn + m.fp == 0)
        throw ValueError("confusion_metrics: specificity undefined, no negative labels");
    const double n = static_cast<double>(preds.size());
    m.accuracy = static_cast<double>(m.tp + m.tn) / n;
    m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    m.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
    return m;
}

struct RocPoint {
    double threshold, fpr, tpr;
};

struct RocResult {
    double auc = 0;
    std::vector<RocPoint> points;  // from (inf: 0,0) down to (-inf: 1,1)
};

// AUC as the probability that a random positive outscores a random
// negative, ties counted 1/2 (equivalent to trapezoidal integration of
// the ROC curve). Points are swept over the distinct score thresholds.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw DimError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                       std::to_string(labels.size()) + " labels");
    long pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValueError("roc_auc: label not in {0,1}");
        y == 1 ? ++pos : ++neg;
    }
    if (pos == 0 || neg == 0)
        throw ValueError("roc_auc: undefined, both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult r;
    r.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    long tp = 0, fp = 0;
    double rank_sum_correct = 0;  // positive-vs-negative pairs won (+ half for ties)
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long tie_pos = 0, tie_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            labels[order[j]] == 1 ? ++tie_pos : ++tie_neg;
            ++j;
        }
        // negatives strictly below this tie group: neg - fp - tie_neg
        rank_sum_correct += static_cast<double>(tie_pos) *
                            (static_cast<double>(neg - fp - tie_neg) +
                             0.5 * static_cast<double>(tie_neg));
        tp += tie_pos;
        fp += tie_neg;
        r.points.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
        i = j;
    }
    r.auc = rank_sum_correct / (static_cast<double>(pos) * static_cast<double>(neg));
    return r;
}

namespace detail {
// Two-sided critical values of Student's t, per degrees of freedom
// 1..30, for the supported significance levels.
inline const double* t_critical_table(double alpha) {
    static const double t_10[30] = {6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860,
                                    1.833, 1.812, 1.796, 1.782, 1.771, 1.761, 1.753, 1.746,
                                    1.740, 1.734, 1.729, 1.725, 1.721, 1.717, 1.714, 1.711,
                                    1.708, 1.706, 1.703, 1.701, 1.699, 1.697};
    static const double t_05[30] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                    2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                    2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                    2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    static const double t_01[30] = {63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499, 3.355,
                                    3.250,  3.169, 3.106, 3.055, 3.012, 2.977, 2.947, 2.921,
                                    2.898,  2.878, 2.861, 2.845, 2.831, 2.819, 2.807, 2.797,
                                    2.787,  2.779, 2.771, 2.763, 2.756, 2.750};
    if (alpha == 0.10) return t_10;
    if (alpha == 0.05) return t_05;
    if (alpha == 0.01) return t_01;
    throw ValueError("paired_t_test: unsupported alpha (available: 0.10, 0.05, 0.01)");
}
}  // namespace detail

struct TTestResult {
    double t = 0;
    int df = 0;
    double critical = 0;
    bool reject = false;
};

// Two-sided paired t-test on per-fold metric differences,
// t = mean(d) / (sd(d)/sqrt(k)) with the k-1 sample standard deviation.
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b,
                                 double alpha = 0.05) {
    if (a.size() != b.size()) throw DimError("paired_t_test: length mismatch");
    const std::size_t k = a.size();
    if (k < 2) throw ValueError("paired_t_test: need at least 2 pairs");
    if (k > 31) throw ValueError("paired_t_test: critical values tabulated for k <= 31 only");
    std::vector<double> d(k);
    for (std::size_t i = 0; i < k; ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(k);
    double ss = 0;
    for (double v : d) ss += (v - mean) * (v - mean);
    if (ss == 0.0) throw ValueError("paired_t_test: degenerate, all differences identical");
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    TTestResult r;
    r.t = mean / (sd / std::sqrt(static_cast<double>(k)));
    r.df = static_cast<int>(k) - 1;
    r.critical = detail::t_critical_table(alpha)[r.df - 1];
    r.reject = std::abs(r.t) > r.critical;
    return r;
}

inline double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace gmge
