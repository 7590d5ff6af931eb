#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhull/core.hpp"
#include "genhull/dataset.hpp"

namespace genhull {

struct FoldSplit {
    std::size_t fold_index = 0;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
};

/// Stratified k-fold assignment. Each class is shuffled and dealt so per-fold
/// class counts deviate from proportionality by at most one; the fold that
/// receives a class's remainder rotates so overall fold sizes stay even.
/// Deterministic given (dataset order, seed).
inline std::vector<FoldSplit> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed,
                                               std::vector<std::string>* warnings = nullptr) {
    const std::size_t n = ds.n_samples();
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
    if (k > n) throw std::invalid_argument("stratified_kfold: k > n (" + std::to_string(k) + " > " +
                                           std::to_string(n) + ")");

    const std::size_t c = ds.n_classes();
    std::vector<std::vector<std::size_t>> by_class(c);
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.y[i])].push_back(i);

    Rng rng = make_rng(seed);
    std::vector<std::vector<std::size_t>> fold_test(k);
    std::size_t rotate = 0;
    for (std::size_t cls = 0; cls < c; ++cls) {
        auto& members = by_class[cls];
        if (members.empty()) continue;
        if (members.size() < k && warnings)
            warnings->push_back("class '" + ds.class_labels[cls] + "' has " + std::to_string(members.size()) +
                                " samples, fewer than k=" + std::to_string(k) +
                                "; distributing round-robin");
        rng.shuffle(members);
        const std::size_t base = members.size() / k;
        const std::size_t rem = members.size() % k;
        std::size_t pos = 0;
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t fold = (f + rotate) % k;
            std::size_t quota = base + (f < rem ? 1 : 0);
            while (quota-- > 0) fold_test[fold].push_back(members[pos++]);
        }
        rotate = (rotate + rem) % k;
    }

    std::vector<FoldSplit> folds(k);
    std::vector<char> in_test(n, 0);
    for (std::size_t f = 0; f < k; ++f) {
        folds[f].fold_index = f;
        auto& test = fold_test[f];
        std::sort(test.begin(), test.end());
        folds[f].test_idx = test;
        for (std::size_t i : test) in_test[i] = 1;
        folds[f].train_idx.reserve(n - test.size());
        for (std::size_t i = 0; i < n; ++i)
            if (!in_test[i]) folds[f].train_idx.push_back(i);
        for (std::size_t i : test) in_test[i] = 0;
    }
    return folds;
}

}  // namespace genhull
