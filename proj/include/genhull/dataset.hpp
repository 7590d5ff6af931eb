#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "genhull/core.hpp"

namespace genhull {

/// A tabular classification dataset: real-valued features, dense integer
/// labels, and the original class label strings in first-occurrence order.
struct Dataset {
    std::string id;
    Matrix X;                               // n x d
    std::vector<int> y;                     // n, codes into class_labels
    std::vector<std::string> feature_names; // d
    std::vector<std::string> class_labels;  // c

    std::size_t n_samples() const { return X.rows(); }
    std::size_t n_features() const { return X.cols(); }
    std::size_t n_classes() const { return class_labels.size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(class_labels.size(), 0);
        for (int label : y) {
            if (label < 0 || static_cast<std::size_t>(label) >= counts.size())
                throw std::out_of_range("Dataset: label code outside class_labels");
            ++counts[static_cast<std::size_t>(label)];
        }
        return counts;
    }

    Dataset take(const std::vector<std::size_t>& idx) const {
        Dataset sub;
        sub.id = id;
        sub.X = X.take_rows(idx);
        sub.y.reserve(idx.size());
        for (std::size_t i : idx) sub.y.push_back(y.at(i));
        sub.feature_names = feature_names;
        sub.class_labels = class_labels;
        return sub;
    }
};

/// Per-feature centering/scaling parameters (population std convention).
struct ScalerStats {
    std::vector<double> mean;
    std::vector<double> std_dev;        // 0 for constant columns
    std::vector<bool> constant_column;

    std::size_t size() const { return mean.size(); }
    double divisor(std::size_t j) const { return constant_column[j] ? 1.0 : std_dev[j]; }
};

/// Check all Dataset invariants and re-encode labels densely by first
/// occurrence. Throws on NaN/Inf cells, fewer than 2 classes, or a class too
/// small to stratify.
inline Dataset validate(const Dataset& ds) {
    const std::size_t n = ds.n_samples();
    const std::size_t d = ds.n_features();
    if (n < 2) throw std::invalid_argument("validate: need at least 2 samples, got " + std::to_string(n));
    if (d < 1) throw std::invalid_argument("validate: need at least 1 feature");
    if (ds.y.size() != n) throw std::invalid_argument("validate: label count does not match row count");

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (!std::isfinite(ds.X(i, j)))
                throw std::invalid_argument("validate: non-finite value at (row " + std::to_string(i) +
                                            ", column " + std::to_string(j) + ")");

    Dataset out = ds;
    // dense re-encoding in first-occurrence order, dropping unused labels
    std::unordered_map<int, int> remap;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const int code = ds.y[i];
        auto it = remap.find(code);
        if (it == remap.end()) {
            const std::string name = (code >= 0 && static_cast<std::size_t>(code) < ds.class_labels.size())
                                         ? ds.class_labels[static_cast<std::size_t>(code)]
                                         : std::to_string(code);
            remap.emplace(code, static_cast<int>(labels.size()));
            labels.push_back(name);
            out.y[i] = static_cast<int>(labels.size()) - 1;
        } else {
            out.y[i] = it->second;
        }
    }
    out.class_labels = std::move(labels);

    const std::size_t c = out.class_labels.size();
    if (c < 2) throw std::invalid_argument("validate: c < 2 (single-class dataset)");
    const auto counts = out.class_counts();
    for (std::size_t k = 0; k < c; ++k)
        if (counts[k] < 2)
            throw std::invalid_argument("validate: class '" + out.class_labels[k] +
                                        "' has fewer than 2 samples; cannot stratify");
    if (out.feature_names.size() != d) {
        out.feature_names.resize(d);
        for (std::size_t j = 0; j < d; ++j)
            if (out.feature_names[j].empty()) out.feature_names[j] = "f" + std::to_string(j);
    }
    return out;
}

inline ScalerStats fit_scaler(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n == 0) throw std::invalid_argument("fit_scaler: empty matrix");
    ScalerStats s;
    s.mean.assign(d, 0.0);
    s.std_dev.assign(d, 0.0);
    s.constant_column.assign(d, false);
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x(i, j);
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = x(i, j) - m;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        s.mean[j] = m;
        const double sd = std::sqrt(var);
        if (sd > 0.0) {
            s.std_dev[j] = sd;
        } else {
            s.std_dev[j] = 0.0;
            s.constant_column[j] = true;
        }
    }
    return s;
}

inline Matrix apply_scaler(const Matrix& x, const ScalerStats& s) {
    if (x.cols() != s.size())
        throw std::invalid_argument("apply_scaler: stats length " + std::to_string(s.size()) +
                                    " does not match feature count " + std::to_string(x.cols()));
    Matrix out(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const double m = s.mean[j];
        const double inv = 1.0 / s.divisor(j);
        for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = (x(i, j) - m) * inv;
    }
    return out;
}

inline Matrix invert_scaler(const Matrix& x, const ScalerStats& s) {
    if (x.cols() != s.size()) throw std::invalid_argument("invert_scaler: dimension mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j)
        for (std::size_t i = 0; i < x.rows(); ++i)
            out(i, j) = x(i, j) * s.divisor(j) + s.mean[j];
    return out;
}

/// Z-score features. Without stats, fit on ds (training fold); with stats,
/// apply them unchanged (test fold). Constant columns are centered to zero.
inline std::pair<Dataset, ScalerStats> standardize(const Dataset& ds,
                                                   const std::optional<ScalerStats>& stats = std::nullopt) {
    ScalerStats s = stats ? *stats : fit_scaler(ds.X);
    if (s.size() != ds.n_features())
        throw std::invalid_argument("standardize: stats length does not match feature count");
    Dataset out = ds;
    out.X = apply_scaler(ds.X, s);
    return {std::move(out), std::move(s)};
}

}  // namespace genhull
