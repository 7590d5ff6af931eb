#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "genhull/dataset.hpp"
#include "genhull/folds.hpp"
#include "genhull/io.hpp"

using namespace genhull;

TEST_CASE("load_table parses a minimal CSV") {
    std::istringstream in("a,b,t\n1,2,x\n3,4,y\n");
    const Dataset ds = load_table(in, TableFormat::csv, std::string("t"), "mini");
    CHECK(ds.n_samples() == 2);
    CHECK(ds.n_features() == 2);
    CHECK(ds.n_classes() == 2);
    CHECK(ds.X(0, 0) == 1.0);
    CHECK(ds.X(1, 1) == 4.0);
    CHECK(ds.y == std::vector<int>{0, 1});
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.class_labels == std::vector<std::string>{"x", "y"});
}

TEST_CASE("load_table names the offending column for textual features") {
    std::istringstream in("a,b,t\n1,red,x\n3,blue,y\n");
    CHECK_THROWS_WITH_AS(load_table(in, TableFormat::csv, std::string("t")),
                         doctest::Contains("column 'b'"), ParseError);
}

TEST_CASE("load_table reports missing target and ragged rows") {
    std::istringstream in("a,b\n1,2\n");
    CHECK_THROWS_AS(load_table(in, TableFormat::csv, std::string("t")), std::invalid_argument);

    std::istringstream ragged("a,b,t\n1,2\n");
    CHECK_THROWS_AS(load_table(ragged, TableFormat::csv, std::string("t")), ParseError);
}

TEST_CASE("load_table accepts a target index") {
    std::istringstream in("a,b,t\n1,2,x\n3,4,y\n");
    const Dataset ds = load_table(in, TableFormat::csv, std::size_t{2});
    CHECK(ds.n_features() == 2);
    CHECK(ds.class_labels.size() == 2);
}

static const char* kArff = R"(% tiny fixture
@relation demo

@attribute width numeric
@attribute height real
@attribute depth integer
@attribute weight numeric
@attribute class {a, b, c}

@data
1.0, 2.0, 3, 0.5, a
1.5, 2.5, 4, 0.7, b
2.0, 3.0, 5, 0.9, c
2.5, 3.5, 6, 1.1, a
)";

TEST_CASE("load_table round-trips a hand-written ARFF fixture") {
    std::istringstream in(kArff);
    const Dataset ds = load_table(in, TableFormat::arff, std::string("class"), "arff-fixture");
    CHECK(ds.n_samples() == 4);
    CHECK(ds.n_features() == 4);
    CHECK(ds.n_classes() == 3);
    CHECK(ds.feature_names == std::vector<std::string>{"width", "height", "depth", "weight"});
    CHECK(ds.class_labels == std::vector<std::string>{"a", "b", "c"});
    CHECK(ds.X(2, 2) == 5.0);
    CHECK(ds.y == std::vector<int>{0, 1, 2, 0});
}

TEST_CASE("ARFF rejects nominal feature columns and undeclared labels") {
    std::istringstream nominal_feature(
        "@relation r\n@attribute f {x,y}\n@attribute class {a,b}\n@data\nx,a\ny,b\n");
    CHECK_THROWS_AS(load_table(nominal_feature, TableFormat::arff, std::string("class")),
                    std::invalid_argument);

    std::istringstream bad_label(
        "@relation r\n@attribute f numeric\n@attribute class {a,b}\n@data\n1,a\n2,z\n");
    CHECK_THROWS_AS(load_table(bad_label, TableFormat::arff, std::string("class")), ParseError);
}

TEST_CASE("validate flags NaN cells with their position") {
    Dataset ds;
    ds.X = Matrix(2, 2);
    ds.X(1, 1) = std::nan("");
    ds.y = {0, 1};
    ds.class_labels = {"a", "b"};
    CHECK_THROWS_WITH_AS(validate(ds), doctest::Contains("row 1, column 1"), std::invalid_argument);
}

TEST_CASE("validate rejects single-class data") {
    Dataset ds;
    ds.X = Matrix(3, 1);
    ds.y = {0, 0, 0};
    ds.class_labels = {"only"};
    CHECK_THROWS_WITH_AS(validate(ds), doctest::Contains("c < 2"), std::invalid_argument);
}

TEST_CASE("validate rejects classes too small to stratify") {
    Dataset ds;
    ds.X = Matrix(3, 1);
    ds.y = {0, 0, 1};
    ds.class_labels = {"a", "b"};
    CHECK_THROWS_AS(validate(ds), std::invalid_argument);
}

TEST_CASE("validate passes valid data through unchanged and re-encodes labels densely") {
    Dataset ds;
    ds.X = Matrix(4, 2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 2; ++j) ds.X(i, j) = static_cast<double>(i + j);
    ds.y = {2, 0, 2, 0};  // gap: label 1 unused
    ds.class_labels = {"a", "b", "c"};
    const Dataset out = validate(ds);
    CHECK(out.X == ds.X);
    CHECK(out.y == std::vector<int>{0, 1, 0, 1});
    CHECK(out.class_labels == std::vector<std::string>{"c", "a"});
}

TEST_CASE("standardize two-point column and constants") {
    Dataset ds;
    ds.X = Matrix(2, 1);
    ds.X(0, 0) = 1.0;
    ds.X(1, 0) = 3.0;
    ds.y = {0, 1};
    ds.class_labels = {"a", "b"};
    const auto [out, stats] = standardize(ds);
    CHECK(stats.mean[0] == 2.0);
    CHECK(stats.std_dev[0] == 1.0);  // population convention
    CHECK(out.X(0, 0) == -1.0);
    CHECK(out.X(1, 0) == 1.0);

    Dataset cst;
    cst.X = Matrix(3, 1, 5.0);
    cst.y = {0, 1, 0};
    cst.class_labels = {"a", "b"};
    const auto [cout, cstats] = standardize(cst);
    CHECK(cstats.constant_column[0]);
    for (std::size_t i = 0; i < 3; ++i) CHECK(cout.X(i, 0) == 0.0);
}

TEST_CASE("standardize applies given train stats to test rows verbatim") {
    ScalerStats stats;
    stats.mean = {10.0, -1.0};
    stats.std_dev = {2.0, 0.5};
    stats.constant_column = {false, false};

    Dataset test;
    test.X = Matrix(1, 2);
    test.X(0, 0) = 14.0;
    test.X(0, 1) = 0.0;
    test.y = {0};
    test.class_labels = {"a"};
    const auto [out, _] = standardize(test, stats);
    CHECK(out.X(0, 0) == 2.0);
    CHECK(out.X(0, 1) == 2.0);

    ScalerStats wrong;
    wrong.mean = {0.0};
    wrong.std_dev = {1.0};
    wrong.constant_column = {false};
    CHECK_THROWS_AS(standardize(test, wrong), std::invalid_argument);
}

TEST_CASE("standardize then invert reproduces input within 1e-12 relative") {
    Rng rng = make_rng(11);
    Matrix x(40, 5);
    for (auto& v : x.data()) v = 100.0 * rng.normal() + 3.0;
    for (std::size_t i = 0; i < 40; ++i) x(i, 3) = 7.5;  // constant column

    const ScalerStats stats = fit_scaler(x);
    const Matrix back = invert_scaler(apply_scaler(x, stats), stats);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            CHECK(back(i, j) == doctest::Approx(x(i, j)).epsilon(1e-12));
}

static Dataset make_labeled(std::size_t n, const std::vector<std::pair<int, std::size_t>>& spec) {
    Dataset ds;
    ds.X = Matrix(n, 1);
    std::size_t row = 0;
    for (const auto& [label, count] : spec)
        for (std::size_t i = 0; i < count; ++i) {
            ds.X(row, 0) = static_cast<double>(row);
            ds.y.push_back(label);
            ++row;
        }
    int max_label = 0;
    for (int l : ds.y) max_label = std::max(max_label, l);
    for (int l = 0; l <= max_label; ++l) ds.class_labels.push_back(std::to_string(l));
    return ds;
}

TEST_CASE("stratified_kfold splits 70/30 over k=10 exactly") {
    const Dataset ds = make_labeled(100, {{0, 70}, {1, 30}});
    const auto folds = stratified_kfold(ds, 10, 123);
    REQUIRE(folds.size() == 10);
    for (const auto& f : folds) {
        std::size_t c0 = 0, c1 = 0;
        for (std::size_t i : f.test_idx) (ds.y[i] == 0 ? c0 : c1)++;
        CHECK(c0 == 7);
        CHECK(c1 == 3);
        CHECK(f.test_idx.size() + f.train_idx.size() == 100);
        // disjointness
        std::set<std::size_t> seen(f.test_idx.begin(), f.test_idx.end());
        for (std::size_t i : f.train_idx) CHECK(seen.count(i) == 0);
    }
}

TEST_CASE("stratified_kfold is a partition and deterministic") {
    const Dataset ds = make_labeled(53, {{0, 20}, {1, 18}, {2, 15}});
    const auto a = stratified_kfold(ds, 5, 77);
    const auto b = stratified_kfold(ds, 5, 77);
    std::set<std::size_t> all;
    for (std::size_t f = 0; f < a.size(); ++f) {
        CHECK(a[f].test_idx == b[f].test_idx);  // determinism
        CHECK(a[f].train_idx == b[f].train_idx);
        for (std::size_t i : a[f].test_idx) CHECK(all.insert(i).second);  // no repeats
    }
    CHECK(all.size() == 53);  // full coverage

    const auto c = stratified_kfold(ds, 5, 78);
    bool any_difference = false;
    for (std::size_t f = 0; f < a.size(); ++f) any_difference |= a[f].test_idx != c[f].test_idx;
    CHECK(any_difference);  // the seed matters
}

TEST_CASE("stratified_kfold per-class proportionality within one sample") {
    const Dataset ds = make_labeled(47, {{0, 29}, {1, 13}, {2, 5}});
    const std::size_t k = 4;
    std::vector<std::string> warnings;
    const auto folds = stratified_kfold(ds, k, 9, &warnings);
    for (const auto& f : folds) {
        std::size_t counts[3] = {0, 0, 0};
        for (std::size_t i : f.test_idx) counts[ds.y[i]]++;
        CHECK(counts[0] >= 29 / k);
        CHECK(counts[0] <= 29 / k + 1);
        CHECK(counts[1] >= 13 / k);
        CHECK(counts[1] <= 13 / k + 1);
        CHECK(counts[2] >= 5 / k);
        CHECK(counts[2] <= 5 / k + 1);
    }
}

TEST_CASE("stratified_kfold warns on classes smaller than k and rejects k > n") {
    const Dataset ds = make_labeled(12, {{0, 9}, {1, 3}});
    std::vector<std::string> warnings;
    stratified_kfold(ds, 5, 1, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("round-robin") != std::string::npos);

    CHECK_THROWS_AS(stratified_kfold(ds, 13, 1), std::invalid_argument);
    CHECK_THROWS_AS(stratified_kfold(ds, 1, 1), std::invalid_argument);
}

TEST_CASE("write_dataset_csv round-trips through load_table") {
    Dataset ds;
    ds.id = "rt";
    ds.X = Matrix(3, 2);
    ds.X(0, 0) = 0.25;
    ds.X(0, 1) = -1.5;
    ds.X(1, 0) = 3.125;
    ds.X(1, 1) = 2.0;
    ds.X(2, 0) = -0.75;
    ds.X(2, 1) = 0.0;
    ds.y = {0, 1, 0};
    ds.feature_names = {"u", "v"};
    ds.class_labels = {"yes", "no"};

    std::ostringstream out;
    write_dataset_csv(out, ds);
    std::istringstream in(out.str());
    const Dataset back = load_table(in, TableFormat::csv, std::string("target"));
    CHECK(back.X == ds.X);
    CHECK(back.y == ds.y);
    CHECK(back.class_labels == ds.class_labels);
}
