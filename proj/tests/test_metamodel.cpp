#include <doctest.h>

#include <cmath>
#include <limits>

#include "genhull/metamodel.hpp"
#include "support/oracles.hpp"

using namespace genhull;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MetaTable make_table(std::vector<std::string> columns, const std::vector<std::vector<double>>& rows,
                     std::vector<std::string> classifiers = {}) {
    MetaTable t;
    t.columns = std::move(columns);
    t.values = Matrix::from_rows(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.dataset_ids.push_back("ds" + std::to_string(i));
        t.classifiers.push_back(classifiers.empty() ? "logreg" : classifiers[i]);
    }
    return t;
}

}  // namespace

TEST_CASE("r_squared fixtures") {
    const std::vector<double> y{0.0, 1.0, 2.0};
    CHECK(r_squared(y, y) == 1.0);
    const std::vector<double> mean_pred{1.0, 1.0, 1.0};
    CHECK(r_squared(y, mean_pred) == 0.0);
    const std::vector<double> partial{0.0, 1.0, 1.0};
    CHECK(r_squared(y, partial) == doctest::Approx(0.5));  // SS_res = 1, SS_tot = 2

    const std::vector<double> constant{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(r_squared(constant, y), std::invalid_argument);
    const std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(r_squared(y, shorter), std::invalid_argument);
}

TEST_CASE("correlation_matrix basic identities") {
    Rng rng = make_rng(3);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 24; ++i) {
        const double v = rng.normal();
        rows.push_back({v, -v, rng.normal(), 5.0});
    }
    const MetaTable t = make_table({"v", "neg_v", "noise", "const"}, rows);
    const Matrix corr = correlation_matrix(t, {"v", "neg_v", "noise", "const"});

    CHECK(corr(0, 0) == 1.0);                       // corr(v, v)
    CHECK(corr(0, 1) == doctest::Approx(-1.0));     // corr(v, -v)
    CHECK(std::fabs(corr(0, 2)) < 0.5);
    CHECK(std::isnan(corr(3, 3)));                  // constant column reported missing
    CHECK(std::isnan(corr(0, 3)));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const bool both_nan = std::isnan(corr(i, j)) && std::isnan(corr(j, i));
            CHECK((both_nan || corr(i, j) == corr(j, i)));  // exact symmetry
        }

    CHECK_THROWS_AS(correlation_matrix(make_table({"a"}, {{1.0}, {2.0}}), {"a"}), std::invalid_argument);
}

TEST_CASE("correlation_matrix uses pairwise-complete observations") {
    std::vector<std::vector<double>> rows;
    Rng rng = make_rng(5);
    for (int i = 0; i < 30; ++i) {
        const double v = rng.normal();
        rows.push_back({v, 2.0 * v, rng.normal()});
    }
    rows[0][1] = kNaN;  // one missing cell must not poison the rest
    rows[4][2] = kNaN;
    const MetaTable t = make_table({"a", "b", "c"}, rows);
    const Matrix corr = correlation_matrix(t, {"a", "b", "c"});
    CHECK(corr(0, 1) == doctest::Approx(1.0));
    CHECK(!std::isnan(corr(0, 2)));
}

TEST_CASE("eval_fixed_equations reproduces the hand-derived arithmetic") {
    // columns needed by every equation; one row per scenario
    auto cols = meta_table_columns();
    std::vector<double> base(cols.size(), 0.5);
    auto at = [&](const char* name) {
        for (std::size_t j = 0; j < cols.size(); ++j)
            if (cols[j] == name) return j;
        throw std::logic_error("missing column");
    };

    // Eq 1 with F1_train = 0.9, idim_ratio = 0.5: step arg positive,
    // 0.857 + 0.959*0.9 - 0.831 = 0.8891
    std::vector<double> row1 = base;
    row1[at("F1_train")] = 0.9;
    row1[at("idim_ratio")] = 0.5;
    // Eq 1 with idim_ratio = 0: step(-0.0019) = 0 -> 0.857 exactly
    std::vector<double> row2 = base;
    row2[at("F1_train")] = 0.9;
    row2[at("idim_ratio")] = 0.0;
    // a third row so R^2 is defined over >= 2 rows
    std::vector<double> row3 = base;
    row3[at("F1_train")] = 0.7;
    row3[at("idim_ratio")] = 0.8;

    MetaTable t = make_table(cols, {row1, row2, row3}, {"logreg", "logreg", "logreg"});
    const auto reports = eval_fixed_equations(t);
    REQUIRE(!reports.empty());
    const auto& eq1 = reports[0];
    CHECK(eq1.name == "eq1_F1_in_LR");
    REQUIRE(eq1.predictions.size() == 3);
    CHECK(eq1.predictions[0] == doctest::Approx(0.8891).epsilon(1e-6 / 0.8891));
    CHECK(eq1.predictions[1] == 0.857);  // step branch, exact

    // Eq 7 with rho = 0.619, noise = 0.371: 0.46 + 0.42*erf(-0.42723)
    std::vector<double> row7 = base;
    row7[at("rho")] = 0.619;
    row7[at("noise")] = 0.371;
    MetaTable t7 = make_table(cols, {row7, row3}, {"forest", "forest"});
    const auto reports7 = eval_fixed_equations(t7);
    const auto& eq7 = reports7.back();
    CHECK(eq7.name == "eq7_T_in");
    REQUIRE(!eq7.predictions.empty());
    const double expected = 0.46 + 0.42 * oracles::erf_oracle(4.65 * 0.619 - 2.20 - 2.98 * 0.371);
    CHECK(eq7.predictions[0] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(eq7.predictions[0] == doctest::Approx(0.2693).epsilon(1e-3 / 0.2693));
}

TEST_CASE("eval_fixed_equations reports classifiers with no rows") {
    auto cols = meta_table_columns();
    std::vector<double> row(cols.size(), 0.5);
    MetaTable t = make_table(cols, {row, row, row}, {"logreg", "logreg", "logreg"});
    const auto reports = eval_fixed_equations(t);
    for (const auto& rep : reports) {
        if (rep.classifier == "svc") {
            CHECK(rep.n_rows == 0);
            CHECK(!rep.r2.has_value());
            CHECK(!rep.note.empty());
        }
    }
}

TEST_CASE("fixed_equations throws on a table missing a named column") {
    const MetaTable t = make_table({"rho", "noise"}, {{0.5, 0.5}, {0.6, 0.4}});
    CHECK_THROWS_AS(fixed_equations(t), std::invalid_argument);
}

TEST_CASE("eval_fixed_equations is bit-identical across calls") {
    auto cols = meta_table_columns();
    Rng rng = make_rng(7);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> kinds;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> r(cols.size());
        for (auto& v : r) v = rng.uniform(0.1, 0.9);
        rows.push_back(r);
        kinds.push_back(i % 2 ? "logreg" : "forest");
    }
    const MetaTable t = make_table(cols, rows, kinds);
    const auto a = eval_fixed_equations(t);
    const auto b = eval_fixed_equations(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].predictions == b[i].predictions);
        CHECK(a[i].r2 == b[i].r2);
    }
}

TEST_CASE("pareto_filter keeps only non-dominated candidates") {
    Formula dummy = fbuild::constant(1.0);
    ParetoFront in;
    in.push_back({dummy, 3.0, 0.5});
    in.push_back({dummy, 5.0, 0.4});  // dominated: more complex, worse fit
    auto out = pareto_filter(in);
    REQUIRE(out.size() == 1);
    CHECK(out[0].complexity == 3.0);

    in.clear();
    in.push_back({dummy, 3.0, 0.5});
    in.push_back({dummy, 5.0, 0.7});  // trade-off: both stay
    out = pareto_filter(in);
    CHECK(out.size() == 2);
    CHECK(out[0].complexity == 3.0);  // ordered by complexity

    in.clear();
    in.push_back({dummy, 3.0, 0.5});
    in.push_back({dummy, 3.0, 0.5});  // duplicate collapses
    out = pareto_filter(in);
    CHECK(out.size() == 1);
}

TEST_CASE("formula evaluation, printing and complexity weights") {
    using namespace fbuild;
    // 0.5 + 0.3 * erf(2*x - 1)
    const Formula f = add(constant(0.5),
                          mul(constant(0.3),
                              unary(FOp::erf_op, sub(mul(constant(2.0), variable(0)), constant(1.0)))));
    const std::vector<double> row{0.75};
    CHECK(f.eval(row) == doctest::Approx(0.5 + 0.3 * oracles::erf_oracle(0.5)).epsilon(1e-12));
    // weights: + 1, c 1, * 2, c 1, erf 4, - 1, * 2, c 1, var 1, c 1 = 15
    CHECK(f.complexity() == 15.0);
    const std::string s = f.to_string({"x"});
    CHECK(s.find("erf") != std::string::npos);
    CHECK(s.find('x') != std::string::npos);

    const Formula divided = combine(FOp::div, constant(1.0), variable(0));
    const std::vector<double> zero_row{0.0};
    CHECK(!std::isfinite(divided.eval(zero_row)));  // surfaces as penalty, not a crash
}

TEST_CASE("sr_search recovers a planted linear law with a cheap formula") {
    Rng rng = make_rng(11);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-2.0, 2.0);
        rows.push_back({x, 2.5 * x + 0.001 * rng.normal()});
    }
    const MetaTable t = make_table({"x", "y"}, rows);
    SrConfig cfg;
    cfg.population = 200;
    cfg.generations = 60;
    cfg.seed = 13;
    cfg.feature_columns = {"x"};
    const ParetoFront front = sr_search(t, "y", cfg);
    REQUIRE(!front.empty());
    bool found_cheap = false;
    for (const auto& s : front)
        if (s.complexity <= 5.0 && s.r2 >= 0.99) found_cheap = true;
    CHECK(found_cheap);
}

TEST_CASE("sr_search fronts are mutually non-dominated and evaluate finitely") {
    Rng rng = make_rng(17);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 120; ++i) {
        const double x = rng.uniform(0.1, 3.0);
        const double z = rng.uniform(-1.0, 1.0);
        rows.push_back({x, z, std::sin(x) + 0.4 * z + 0.02 * rng.normal()});
    }
    const MetaTable t = make_table({"x", "z", "y"}, rows);
    SrConfig cfg;
    cfg.population = 150;
    cfg.generations = 40;
    cfg.seed = 19;
    cfg.feature_columns = {"x", "z"};
    const ParetoFront front = sr_search(t, "y", cfg);
    REQUIRE(!front.empty());
    for (std::size_t i = 0; i < front.size(); ++i) {
        for (std::size_t j = 0; j < front.size(); ++j) {
            if (i == j) continue;
            const bool dominates = (front[i].r2 >= front[j].r2 && front[i].complexity < front[j].complexity) ||
                                   (front[i].r2 > front[j].r2 && front[i].complexity <= front[j].complexity);
            CHECK(!dominates);
        }
        for (const auto& row : rows) {
            std::vector<double> full_row = row;
            CHECK(std::isfinite(front[i].formula.eval(full_row)));
        }
    }
}

TEST_CASE("sr_search is deterministic given the seed") {
    Rng rng = make_rng(23);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 60; ++i) {
        const double x = rng.uniform(-1.0, 1.0);
        rows.push_back({x, x * x + 0.01 * rng.normal()});
    }
    const MetaTable t = make_table({"x", "y"}, rows);
    SrConfig cfg;
    cfg.population = 80;
    cfg.generations = 25;
    cfg.seed = 29;
    cfg.feature_columns = {"x"};
    const ParetoFront a = sr_search(t, "y", cfg);
    const ParetoFront b = sr_search(t, "y", cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].r2 == b[i].r2);
        CHECK(a[i].complexity == b[i].complexity);
        CHECK(a[i].formula.to_string({"x", "y"}) == b[i].formula.to_string({"x", "y"}));
    }
    CHECK_THROWS_AS(sr_search(t, "nope", cfg), std::invalid_argument);
}

TEST_CASE("build_meta_table joins profiles with fold-averaged records") {
    MetricVector mv;
    mv.n = 100;
    mv.d = 4;
    mv.c = 2;
    mv.lambda = 0.5;
    mv.rho = 0.6;
    mv.gamma = 0.1;
    mv.kappa = 3.0;
    mv.eta = 0.2;
    mv.idim = 2;
    mv.idim_ratio = 0.5;
    mv.noise = 0.5;
    mv.mean_dist = 2.0;
    mv.std_dist = 0.7;
    mv.ci = 0.0;
    std::map<std::string, MetricVector> profiles{{"dsA", mv}};

    std::vector<GeneralizationRecord> records(3);
    for (auto& r : records) {
        r.dataset_id = "dsA";
        r.classifier = "logreg";
        r.t_in = 0.5;
        r.t_out = 0.5;
    }
    records[0].f1_train = 0.9;
    records[1].f1_train = 0.7;
    records[2].f1_train = 0.8;
    records[0].f1_in = 0.6;  // only one fold has an inside partition
    records[2].flagged = true;  // excluded

    const MetaTable t = build_meta_table(profiles, records);
    REQUIRE(t.n_rows() == 1);
    CHECK(t.values(0, t.col_index("F1_train")) == doctest::Approx(0.8));  // mean of 0.9, 0.7
    CHECK(t.values(0, t.col_index("F1_in")) == doctest::Approx(0.6));
    CHECK(std::isnan(t.values(0, t.col_index("F1_out"))));  // never present
    CHECK(t.values(0, t.col_index("rho")) == 0.6);
    CHECK(t.classifiers[0] == "logreg");

    std::vector<GeneralizationRecord> orphan(1);
    orphan[0].dataset_id = "unknown";
    orphan[0].classifier = "logreg";
    CHECK_THROWS_AS(build_meta_table(profiles, orphan), std::invalid_argument);
}

TEST_CASE("correlation svg is deterministic and well-formed") {
    Matrix corr(2, 2);
    corr(0, 0) = corr(1, 1) = 1.0;
    corr(0, 1) = corr(1, 0) = -0.5;
    const std::string a = correlation_svg(corr, {"alpha", "beta"});
    const std::string b = correlation_svg(corr, {"alpha", "beta"});
    CHECK(a == b);
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("alpha") != std::string::npos);
    CHECK(a.rfind("</svg>\n") == a.size() - 7);
}
