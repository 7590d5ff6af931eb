#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhull/core.hpp"
#include "genhull/dataset.hpp"

namespace genhull {

/// Support-weighted mean of per-class F1 scores. Classes absent from y_true
/// carry zero weight; an undefined per-class F1 counts as 0.
inline double weighted_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("weighted_f1: length mismatch");
    if (y_true.empty()) throw std::invalid_argument("weighted_f1: empty input");

    int max_label = 0;
    for (int v : y_true) max_label = std::max(max_label, v);
    for (int v : y_pred) max_label = std::max(max_label, v);
    const auto c = static_cast<std::size_t>(max_label) + 1;

    std::vector<double> tp(c, 0.0), fp(c, 0.0), fn(c, 0.0), support(c, 0.0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const auto t = static_cast<std::size_t>(y_true[i]);
        const auto p = static_cast<std::size_t>(y_pred[i]);
        support[t] += 1.0;
        if (t == p) {
            tp[t] += 1.0;
        } else {
            fn[t] += 1.0;
            fp[p] += 1.0;
        }
    }
    double score = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        if (support[k] == 0.0) continue;
        const double prec_den = tp[k] + fp[k];
        const double rec_den = tp[k] + fn[k];
        const double prec = prec_den > 0.0 ? tp[k] / prec_den : 0.0;
        const double rec = rec_den > 0.0 ? tp[k] / rec_den : 0.0;
        const double f1 = (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        score += support[k] * f1;
    }
    return score / static_cast<double>(y_true.size());
}

/// Abstract train/predict contract; the seam through which additional
/// classifiers (e.g. a kernel SVM) plug into the harness.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::string name() const = 0;
    virtual void fit(const Matrix& x, const std::vector<int>& y) = 0;
    virtual std::vector<int> predict(const Matrix& x) const = 0;
    virtual bool converged() const { return true; }
};

struct LogRegConfig {
    double l2 = 1.0;            // penalty on weights, biases free
    std::size_t max_iter = 500;
    double tol = 1e-6;          // gradient infinity-norm stop
};

struct ForestConfig {
    std::size_t n_trees = 100;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

enum class ClassifierKind { logreg, forest };

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::logreg;
    LogRegConfig logreg;
    ForestConfig forest;

    static ClassifierConfig logistic(LogRegConfig cfg = {}) { return {ClassifierKind::logreg, cfg, {}}; }
    static ClassifierConfig random_forest(ForestConfig cfg = {}) { return {ClassifierKind::forest, {}, cfg}; }
};

inline const char* kind_name(ClassifierKind k) {
    return k == ClassifierKind::logreg ? "logreg" : "forest";
}

namespace detail {

// Remap possibly-sparse training codes to a dense internal range so models
// only ever predict labels they saw.
struct LabelSpace {
    std::vector<int> internal_to_global;
    std::vector<int> global_to_internal;

    void build(const std::vector<int>& y) {
        internal_to_global.clear();
        global_to_internal.clear();
        for (int v : y) {
            if (v < 0) throw std::invalid_argument("fit: negative label code");
            if (static_cast<std::size_t>(v) >= global_to_internal.size())
                global_to_internal.resize(static_cast<std::size_t>(v) + 1, -1);
            if (global_to_internal[static_cast<std::size_t>(v)] < 0) {
                global_to_internal[static_cast<std::size_t>(v)] = static_cast<int>(internal_to_global.size());
                internal_to_global.push_back(v);
            }
        }
    }
    std::size_t count() const { return internal_to_global.size(); }
    int encode(int global) const { return global_to_internal[static_cast<std::size_t>(global)]; }
    int decode(int internal) const { return internal_to_global[static_cast<std::size_t>(internal)]; }
};

}  // namespace detail

/// Multinomial softmax regression fit by full-batch gradient descent with a
/// backtracking (Armijo) line search, so the training loss never increases.
class LogisticRegression : public Classifier {
public:
    explicit LogisticRegression(LogRegConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.l2 < 0.0) throw std::invalid_argument("LogisticRegression: l2 must be >= 0");
        if (!(cfg_.tol > 0.0)) throw std::invalid_argument("LogisticRegression: tol must be positive");
    }

    std::string name() const override { return "logreg"; }
    bool converged() const override { return converged_; }

    void fit(const Matrix& x, const std::vector<int>& y) override {
        const std::size_t n = x.rows();
        if (n == 0 || y.size() != n) throw std::invalid_argument("LogisticRegression::fit: bad input shape");
        labels_.build(y);
        const std::size_t c = labels_.count();
        if (c < 2) throw std::invalid_argument("LogisticRegression::fit: needs >= 2 classes present");
        d_ = x.cols();

        std::vector<int> yi(n);
        for (std::size_t i = 0; i < n; ++i) yi[i] = labels_.encode(y[i]);

        w_ = Matrix(c, d_);
        bias_.assign(c, 0.0);
        Matrix grad_w(c, d_);
        std::vector<double> grad_b(c, 0.0);
        Matrix probs(n, c);

        double loss = objective(x, yi, w_, bias_, probs);
        loss_trace_.clear();
        loss_trace_.push_back(loss);
        converged_ = false;
        for (std::size_t iter = 0; iter < cfg_.max_iter; ++iter) {
            gradient(x, yi, probs, grad_w, grad_b);
            double gmax = 0.0;
            for (double v : grad_w.data()) gmax = std::max(gmax, std::fabs(v));
            for (double v : grad_b) gmax = std::max(gmax, std::fabs(v));
            if (gmax < cfg_.tol) {
                converged_ = true;
                break;
            }

            double gnorm2 = 0.0;
            for (double v : grad_w.data()) gnorm2 += v * v;
            for (double v : grad_b) gnorm2 += v * v;

            double t = 1.0;
            Matrix w_try = w_;
            std::vector<double> b_try = bias_;
            while (true) {
                for (std::size_t idx = 0; idx < w_.data().size(); ++idx)
                    w_try.data()[idx] = w_.data()[idx] - t * grad_w.data()[idx];
                for (std::size_t k = 0; k < c; ++k) b_try[k] = bias_[k] - t * grad_b[k];
                const double trial = objective(x, yi, w_try, b_try, probs);
                if (trial <= loss - 1e-4 * t * gnorm2 || t < 1e-12) {
                    w_ = w_try;
                    bias_ = b_try;
                    loss = trial;
                    break;
                }
                t *= 0.5;
            }
            loss_trace_.push_back(loss);
        }
        fitted_ = true;
    }

    std::vector<int> predict(const Matrix& x) const override {
        if (!fitted_) throw std::logic_error("LogisticRegression::predict before fit");
        if (x.cols() != d_) throw std::invalid_argument("LogisticRegression::predict: dimension mismatch");
        std::vector<int> out(x.rows());
        const std::size_t c = labels_.count();
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t k = 0; k < c; ++k) {
                double s = bias_[k];
                for (std::size_t j = 0; j < d_; ++j) s += w_(k, j) * x(i, j);
                if (s > best) {
                    best = s;
                    arg = k;
                }
            }
            out[i] = labels_.decode(static_cast<int>(arg));
        }
        return out;
    }

    const Matrix& weights() const { return w_; }
    const std::vector<double>& biases() const { return bias_; }
    const std::vector<double>& loss_trace() const { return loss_trace_; }

private:
    double objective(const Matrix& x, const std::vector<int>& yi, const Matrix& w,
                     const std::vector<double>& b, Matrix& probs) const {
        const std::size_t n = x.rows(), c = labels_.count();
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < c; ++k) {
                double s = b[k];
                for (std::size_t j = 0; j < d_; ++j) s += w(k, j) * x(i, j);
                probs(i, k) = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            for (std::size_t k = 0; k < c; ++k) {
                probs(i, k) = std::exp(probs(i, k) - mx);
                z += probs(i, k);
            }
            for (std::size_t k = 0; k < c; ++k) probs(i, k) /= z;
            loss -= std::log(std::max(probs(i, static_cast<std::size_t>(yi[i])), 1e-300));
        }
        loss /= static_cast<double>(n);
        double pen = 0.0;
        for (double v : w.data()) pen += v * v;
        return loss + 0.5 * cfg_.l2 * pen / static_cast<double>(n);
    }

    void gradient(const Matrix& x, const std::vector<int>& yi, const Matrix& probs, Matrix& gw,
                  std::vector<double>& gb) const {
        const std::size_t n = x.rows(), c = labels_.count();
        std::fill(gw.data().begin(), gw.data().end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < c; ++k) {
                const double r = probs(i, k) - (static_cast<std::size_t>(yi[i]) == k ? 1.0 : 0.0);
                gb[k] += r;
                for (std::size_t j = 0; j < d_; ++j) gw(k, j) += r * x(i, j);
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (double& v : gw.data()) v *= inv_n;
        for (double& v : gb) v *= inv_n;
        for (std::size_t k = 0; k < c; ++k)
            for (std::size_t j = 0; j < d_; ++j) gw(k, j) += cfg_.l2 * inv_n * w_(k, j);
    }

    LogRegConfig cfg_;
    detail::LabelSpace labels_;
    Matrix w_;
    std::vector<double> bias_;
    std::vector<double> loss_trace_;
    std::size_t d_ = 0;
    bool fitted_ = false;
    bool converged_ = false;
};

/// Bagged Gini decision trees, sqrt(d) features per split, grown to purity.
/// Per-tree derived seeds keep training reproducible for any thread count.
class RandomForest : public Classifier {
public:
    explicit RandomForest(ForestConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.n_trees < 1) throw std::invalid_argument("RandomForest: need at least one tree");
    }

    std::string name() const override { return "forest"; }

    void fit(const Matrix& x, const std::vector<int>& y) override {
        const std::size_t n = x.rows();
        if (n == 0 || y.size() != n) throw std::invalid_argument("RandomForest::fit: bad input shape");
        labels_.build(y);
        if (labels_.count() < 2) throw std::invalid_argument("RandomForest::fit: needs >= 2 classes present");
        d_ = x.cols();

        std::vector<int> yi(n);
        for (std::size_t i = 0; i < n; ++i) yi[i] = labels_.encode(y[i]);

        trees_.assign(cfg_.n_trees, {});
        parallel_for(cfg_.n_trees, cfg_.jobs, [&](std::size_t t) {
            Rng rng = make_rng(derive_seed(cfg_.seed, 0xf0e0 + t));
            std::vector<std::size_t> sample(n);
            if (cfg_.bootstrap) {
                for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
            } else {
                std::iota(sample.begin(), sample.end(), 0);
            }
            grow(trees_[t], x, yi, std::move(sample), rng);
        });
        fitted_ = true;
    }

    std::vector<int> predict(const Matrix& x) const override {
        if (!fitted_) throw std::logic_error("RandomForest::predict before fit");
        if (x.cols() != d_) throw std::invalid_argument("RandomForest::predict: dimension mismatch");
        const std::size_t c = labels_.count();
        std::vector<int> out(x.rows());
        std::vector<std::size_t> votes(c);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            std::fill(votes.begin(), votes.end(), 0);
            for (const auto& tree : trees_) {
                std::size_t node = 0;
                while (!tree[node].leaf) {
                    node = x(i, tree[node].feature) <= tree[node].threshold ? tree[node].left
                                                                            : tree[node].right;
                }
                ++votes[static_cast<std::size_t>(tree[node].label)];
            }
            std::size_t arg = 0;
            for (std::size_t k = 1; k < c; ++k)
                if (votes[k] > votes[arg]) arg = k;  // ties keep the lowest class index
            out[i] = labels_.decode(static_cast<int>(arg));
        }
        return out;
    }

private:
    struct Node {
        bool leaf = true;
        int label = 0;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
    };
    using Tree = std::vector<Node>;

    void grow(Tree& tree, const Matrix& x, const std::vector<int>& yi, std::vector<std::size_t> rows,
              Rng& rng) const {
        tree.clear();
        tree.emplace_back();
        build_node(tree, 0, x, yi, std::move(rows), rng);
    }

    static double gini(const std::vector<double>& counts, double total) {
        double g = 1.0;
        for (double ct : counts) {
            const double p = ct / total;
            g -= p * p;
        }
        return g;
    }

    void build_node(Tree& tree, std::size_t node, const Matrix& x, const std::vector<int>& yi,
                    std::vector<std::size_t> rows, Rng& rng) const {
        const std::size_t c = labels_.count();
        std::vector<double> counts(c, 0.0);
        for (std::size_t r : rows) counts[static_cast<std::size_t>(yi[r])] += 1.0;
        const auto total = static_cast<double>(rows.size());

        std::size_t majority = 0;
        bool pure = true;
        for (std::size_t k = 0; k < c; ++k) {
            if (counts[k] > counts[majority]) majority = k;
            if (counts[k] > 0.0 && counts[k] < total) pure = false;
        }
        tree[node].label = static_cast<int>(majority);
        if (pure || rows.size() < 2) return;

        // feature subsample: sqrt(d), drawn per split
        const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d_))));
        std::vector<std::size_t> feats(d_);
        std::iota(feats.begin(), feats.end(), 0);
        for (std::size_t i = 0; i < mtry; ++i)
            std::swap(feats[i], feats[i + static_cast<std::size_t>(rng.below(d_ - i))]);
        feats.resize(mtry);

        const double parent_impurity = gini(counts, total);
        double best_gain = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> vals;
        std::vector<double> left_counts(c);
        for (std::size_t f : feats) {
            vals.clear();
            vals.reserve(rows.size());
            for (std::size_t r : rows) vals.emplace_back(x(r, f), yi[r]);
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;

            std::fill(left_counts.begin(), left_counts.end(), 0.0);
            double left_total = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left_counts[static_cast<std::size_t>(vals[i].second)] += 1.0;
                left_total += 1.0;
                if (vals[i].first == vals[i + 1].first) continue;
                double left_imp = 1.0, right_imp = 1.0;
                const double right_total = total - left_total;
                for (std::size_t k = 0; k < c; ++k) {
                    const double pl = left_counts[k] / left_total;
                    const double pr = (counts[k] - left_counts[k]) / right_total;
                    left_imp -= pl * pl;
                    right_imp -= pr * pr;
                }
                const double gain =
                    parent_impurity - (left_total * left_imp + right_total * right_imp) / total;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (best_gain <= 0.0) return;  // no separating split among candidates

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows)
            (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
        if (left_rows.empty() || right_rows.empty()) return;

        tree[node].leaf = false;
        tree[node].feature = best_feature;
        tree[node].threshold = best_threshold;
        tree.emplace_back();
        tree[node].left = tree.size() - 1;
        build_node(tree, tree[node].left, x, yi, std::move(left_rows), rng);
        tree.emplace_back();
        tree[node].right = tree.size() - 1;
        build_node(tree, tree[node].right, x, yi, std::move(right_rows), rng);
    }

    ForestConfig cfg_;
    detail::LabelSpace labels_;
    std::vector<Tree> trees_;
    std::size_t d_ = 0;
    bool fitted_ = false;
};

inline std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& cfg) {
    if (cfg.kind == ClassifierKind::logreg) return std::make_unique<LogisticRegression>(cfg.logreg);
    return std::make_unique<RandomForest>(cfg.forest);
}

inline std::unique_ptr<LogisticRegression> train_logreg(const Dataset& train, LogRegConfig cfg = {}) {
    auto model = std::make_unique<LogisticRegression>(cfg);
    model->fit(train.X, train.y);
    return model;
}

inline std::unique_ptr<RandomForest> train_forest(const Dataset& train, ForestConfig cfg = {}) {
    auto model = std::make_unique<RandomForest>(cfg);
    model->fit(train.X, train.y);
    return model;
}

}  // namespace genhull
