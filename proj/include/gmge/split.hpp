#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "gmge/errors.hpp"
#include "gmge/rng.hpp"

namespace gmge {

// Dataset partition: a held-out extractor set, an 80/20-style
// train/test split of the remainder, and k CV folds over the train
// portion. The extractor set never appears in classifier folds.
struct SplitPlan {
    std::vector<std::size_t> extractor;          // indices into the id list
    std::vector<std::size_t> train;              // union of all folds, ordered by fold
    std::vector<std::size_t> test;
    std::vector<std::vector<std::size_t>> folds; // partition of `train`
    uint64_t seed = 0;

    void validate(std::size_t total) const {
        std::unordered_set<std::size_t> seen;
        auto absorb = [&](const std::vector<std::size_t>& part, const char* name) {
            for (std::size_t i : part) {
                if (i >= total) throw ValueError(std::string(name) + ": index out of range");
                if (!seen.insert(i).second)
                    throw ValueError(std::string(name) + ": index " + std::to_string(i) +
                                     " appears in two partitions");
            }
        };
        absorb(extractor, "extractor");
        absorb(test, "test");
        std::size_t in_folds = 0;
        std::unordered_set<std::size_t> train_set(train.begin(), train.end());
        for (const auto& f : folds) {
            absorb(f, "fold");
            in_folds += f.size();
            for (std::size_t i : f)
                if (!train_set.count(i)) throw ValueError("fold index not in train set");
        }
        if (in_folds != train.size()) throw ValueError("folds do not partition the train set");
        if (seen.size() != total) throw ValueError("partitions do not cover all ids");
    }
};

// Stratified split: per class, ids are shuffled by the seeded generator,
// dealt to the extractor set, then test, then round-robin into folds.
inline SplitPlan make_split(std::size_t n_ids, const std::vector<int>& labels, uint64_t seed,
                            std::size_t extractor_n, double test_frac, std::size_t folds) {
    if (labels.size() != n_ids) throw DimError("make_split: labels length mismatch");
    if (folds < 2) throw ValueError("make_split: need at least 2 folds");
    if (!(test_frac >= 0.0 && test_frac < 1.0))
        throw ValueError("make_split: test_frac must be in [0,1)");
    if (extractor_n + folds >= n_ids)
        throw ValueError("make_split: not enough ids (" + std::to_string(n_ids) +
                         ") for extractor set of " + std::to_string(extractor_n) + " plus " +
                         std::to_string(folds) + " folds");

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n_ids; ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw ValueError("make_split: label at " + std::to_string(i) + " not in {0,1}");
        by_class[labels[i]].push_back(i);
    }
    Rng rng(Rng::derive(seed, 0xA11C));
    rng.shuffle(by_class[0]);
    rng.shuffle(by_class[1]);

    // class shares proportional to prevalence, remainders to the larger class
    const double pos_frac =
        n_ids ? static_cast<double>(by_class[1].size()) / static_cast<double>(n_ids) : 0.0;
    std::size_t ext_pos = static_cast<std::size_t>(std::llround(pos_frac * extractor_n));
    ext_pos = std::min(ext_pos, by_class[1].size());
    std::size_t ext_neg = extractor_n - ext_pos;
    if (ext_neg > by_class[0].size()) {
        ext_pos += ext_neg - by_class[0].size();
        ext_neg = by_class[0].size();
    }
    if (ext_pos > by_class[1].size())
        throw ValueError("make_split: extractor set larger than available ids");

    SplitPlan plan;
    plan.seed = seed;
    plan.folds.resize(folds);
    std::size_t take[2] = {ext_neg, ext_pos};
    for (int c = 0; c < 2; ++c) {
        auto& ids = by_class[c];
        std::size_t i = 0;
        for (; i < take[c]; ++i) plan.extractor.push_back(ids[i]);
        const std::size_t remaining = ids.size() - take[c];
        const std::size_t n_test = static_cast<std::size_t>(std::llround(
            test_frac * static_cast<double>(remaining)));
        for (std::size_t j = 0; j < n_test; ++j, ++i) plan.test.push_back(ids[i]);
        for (std::size_t f = 0; i < ids.size(); ++i, ++f)
            plan.folds[f % folds].push_back(ids[i]);
    }
    for (const auto& f : plan.folds) {
        if (f.empty()) throw ValueError("make_split: a fold came out empty; too few ids");
        plan.train.insert(plan.train.end(), f.begin(), f.end());
    }
    plan.validate(n_ids);
    return plan;
}

}  // namespace gmge
