#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "genhull/classifiers.hpp"
#include "genhull/core.hpp"
#include "genhull/dataset.hpp"
#include "genhull/folds.hpp"
#include "genhull/hull.hpp"
#include "genhull/metafeatures.hpp"

namespace genhull {

/// One row of experiment output: a (dataset, fold, classifier) cell with the
/// generalization block of scores. F1_in/CI_in are missing exactly when the
/// inside partition is empty (same for the outside pair).
struct GeneralizationRecord {
    std::string dataset_id;
    std::size_t fold_index = 0;
    std::string classifier;
    double f1_train = 0.0;
    double f1_test = 0.0;
    std::optional<double> f1_in;
    std::optional<double> f1_out;
    double t_in = 0.0;
    double t_out = 1.0;
    double ci_train = 0.0;
    double ci_test = 0.0;
    std::optional<double> ci_in;
    std::optional<double> ci_out;
    bool flagged = false;  // e.g. a class missing from the training fold
};

/// Per-fold detail handed to observers: everything needed to audit a fold
/// without re-running it.
struct FoldDetail {
    std::size_t fold_index;
    const FoldSplit& split;
    const HullSplit& hull;
    const Dataset& train;         // standardized
    const Dataset& test;          // standardized with train stats
    const std::string& classifier;
    const std::vector<int>& predictions;  // over the test fold
};

using FoldObserver = std::function<void(const FoldDetail&)>;

struct RunOptions {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    double hull_tol = 1e-7;
    unsigned jobs = 1;
    FoldObserver observer;
};

namespace detail {

inline std::vector<int> take_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(y.at(i));
    return out;
}

}  // namespace detail

/// Score one (fold, model) pair given the fold's hull split. Partition scores
/// are computed only over their index sets.
inline GeneralizationRecord fold_generalization(const FoldSplit& split, const Classifier& model,
                                                const HullSplit& hull, const Dataset& train,
                                                const Dataset& test,
                                                const std::vector<int>& predictions) {
    if (predictions.size() != test.n_samples())
        throw std::invalid_argument("fold_generalization: prediction count mismatch");
    for (std::size_t i : hull.inside_idx)
        if (i >= test.n_samples()) throw std::out_of_range("fold_generalization: hull index out of range");

    GeneralizationRecord rec;
    rec.dataset_id = train.id;
    rec.fold_index = split.fold_index;
    rec.classifier = model.name();
    rec.f1_train = weighted_f1(train.y, model.predict(train.X));
    rec.f1_test = weighted_f1(test.y, predictions);
    rec.t_in = hull.t_in;
    rec.t_out = hull.t_out;
    rec.ci_train = class_imbalance(train.y);
    rec.ci_test = class_imbalance(test.y);

    auto partition_scores = [&](const std::vector<std::size_t>& idx, std::optional<double>& f1,
                                std::optional<double>& ci) {
        if (idx.empty()) return;
        std::vector<int> truth = detail::take_labels(test.y, idx);
        std::vector<int> pred;
        pred.reserve(idx.size());
        for (std::size_t i : idx) pred.push_back(predictions[i]);
        f1 = weighted_f1(truth, pred);
        ci = class_imbalance(truth);
    };
    partition_scores(hull.inside_idx, rec.f1_in, rec.ci_in);
    partition_scores(hull.outside_idx, rec.f1_out, rec.ci_out);
    return rec;
}

/// Stratified CV over one dataset: per fold, standardize in the training
/// frame, hull-split the test fold once, then train and score every
/// classifier. Emits exactly k * |classifiers| records in (fold, classifier)
/// order; folds with a missing training class are flagged.
inline std::vector<GeneralizationRecord> run_cv(const Dataset& ds,
                                                const std::vector<ClassifierConfig>& classifiers,
                                                const RunOptions& opt = {}) {
    if (classifiers.empty()) throw std::invalid_argument("run_cv: no classifiers given");
    const auto folds = stratified_kfold(ds, opt.k, opt.seed);
    const std::size_t c = ds.n_classes();

    std::vector<GeneralizationRecord> records;
    records.reserve(folds.size() * classifiers.size());
    for (const auto& fold : folds) {
        Dataset train_raw = ds.take(fold.train_idx);
        Dataset test_raw = ds.take(fold.test_idx);

        auto [train, stats] = standardize(train_raw);
        Dataset test = test_raw;
        test.X = apply_scaler(test_raw.X, stats);

        std::set<int> seen(train.y.begin(), train.y.end());
        const bool missing_class = seen.size() < c;

        const HullSplit hull = split_by_hull(train.X, test.X, opt.hull_tol, opt.jobs);

        for (const auto& cfg : classifiers) {
            auto model = make_classifier(cfg);
            model->fit(train.X, train.y);
            const std::vector<int> predictions = model->predict(test.X);
            GeneralizationRecord rec = fold_generalization(fold, *model, hull, train, test, predictions);
            rec.flagged = missing_class;
            if (opt.observer) {
                const std::string name = model->name();
                opt.observer(FoldDetail{fold.fold_index, fold, hull, train, test, name, predictions});
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

// --- JSONL persistence ----------------------------------------------------

inline nlohmann::ordered_json record_to_json(const GeneralizationRecord& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["dataset_id"] = r.dataset_id;
    j["fold_index"] = r.fold_index;
    j["classifier"] = r.classifier;
    j["F1_train"] = r.f1_train;
    j["F1_test"] = r.f1_test;
    j["F1_in"] = opt(r.f1_in);
    j["F1_out"] = opt(r.f1_out);
    j["T_in"] = r.t_in;
    j["T_out"] = r.t_out;
    j["CI_train"] = r.ci_train;
    j["CI_test"] = r.ci_test;
    j["CI_in"] = opt(r.ci_in);
    j["CI_out"] = opt(r.ci_out);
    j["flagged"] = r.flagged;
    return j;
}

inline GeneralizationRecord record_from_json(const nlohmann::json& j) {
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<double>();
    };
    GeneralizationRecord r;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.fold_index = j.at("fold_index").get<std::size_t>();
    r.classifier = j.at("classifier").get<std::string>();
    r.f1_train = j.at("F1_train").get<double>();
    r.f1_test = j.at("F1_test").get<double>();
    r.f1_in = opt("F1_in");
    r.f1_out = opt("F1_out");
    r.t_in = j.at("T_in").get<double>();
    r.t_out = j.at("T_out").get<double>();
    r.ci_train = j.at("CI_train").get<double>();
    r.ci_test = j.at("CI_test").get<double>();
    r.ci_in = opt("CI_in");
    r.ci_out = opt("CI_out");
    r.flagged = j.value("flagged", false);
    return r;
}

/// Append records to a JSONL file, one object per line.
inline void append_records_jsonl(const std::string& path, const std::vector<GeneralizationRecord>& records) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("append_records_jsonl: cannot open '" + path + "'");
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline std::vector<GeneralizationRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_records_jsonl: cannot open '" + path + "'");
    std::vector<GeneralizationRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("read_records_jsonl: ") + e.what(), line_no, 1);
        }
    }
    return out;
}

// --- aggregation ------------------------------------------------------------

struct CellStat {
    double mean = 0.0;
    double sem = 0.0;
    std::size_t count = 0;
};

/// mean / SEM / contributing-count per (classifier, metric), flagged records
/// excluded and missing cells averaged over present values only. Delta rows
/// report the per-record F1_train minus F1_{test,in,out} gaps.
struct AggregateSummary {
    std::map<std::string, std::map<std::string, CellStat>> cells;

    const CellStat& at(const std::string& classifier, const std::string& metric) const {
        return cells.at(classifier).at(metric);
    }
};

namespace detail {

inline CellStat stat_of(const std::vector<double>& v) {
    CellStat s;
    s.count = v.size();
    if (v.empty()) return s;
    s.mean = mean_of(v);
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        const double sample_var = ss / static_cast<double>(v.size() - 1);
        s.sem = std::sqrt(sample_var / static_cast<double>(v.size()));
    }
    return s;
}

}  // namespace detail

inline AggregateSummary aggregate(const std::vector<GeneralizationRecord>& records) {
    if (records.empty()) throw std::invalid_argument("aggregate: no records");
    std::map<std::string, std::map<std::string, std::vector<double>>> pools;
    for (const auto& r : records) {
        if (r.flagged) continue;
        auto& p = pools[r.classifier];
        p["F1_train"].push_back(r.f1_train);
        p["F1_test"].push_back(r.f1_test);
        p["T_in"].push_back(r.t_in);
        p["T_out"].push_back(r.t_out);
        p["CI_train"].push_back(r.ci_train);
        p["CI_test"].push_back(r.ci_test);
        p["delta_test"].push_back(r.f1_train - r.f1_test);
        if (r.f1_in) {
            p["F1_in"].push_back(*r.f1_in);
            p["delta_in"].push_back(r.f1_train - *r.f1_in);
        }
        if (r.f1_out) {
            p["F1_out"].push_back(*r.f1_out);
            p["delta_out"].push_back(r.f1_train - *r.f1_out);
        }
        if (r.ci_in) p["CI_in"].push_back(*r.ci_in);
        if (r.ci_out) p["CI_out"].push_back(*r.ci_out);
    }
    AggregateSummary summary;
    for (auto& [classifier, metrics] : pools)
        for (auto& [metric, values] : metrics) summary.cells[classifier][metric] = detail::stat_of(values);
    if (summary.cells.empty()) throw std::invalid_argument("aggregate: every record was flagged");
    return summary;
}

inline nlohmann::ordered_json summary_to_json(const AggregateSummary& s) {
    nlohmann::ordered_json j;
    for (const auto& [classifier, metrics] : s.cells) {
        nlohmann::ordered_json block;
        for (const auto& [metric, stat] : metrics) {
            block[metric] = {{"mean", stat.mean}, {"sem", stat.sem}, {"count", stat.count}};
        }
        j[classifier] = std::move(block);
    }
    return j;
}

}  // namespace genhull
