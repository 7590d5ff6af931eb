#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhull/core.hpp"
#include "genhull/harness.hpp"
#include "genhull/metafeatures.hpp"
#include "genhull/numerics.hpp"

namespace genhull {

// --- meta table -------------------------------------------------------------

/// One row per (dataset, classifier): the dataset's meta-features joined with
/// fold-averaged generalization scores. Missing cells are NaN.
struct MetaTable {
    std::vector<std::string> columns;
    std::vector<std::string> dataset_ids;
    std::vector<std::string> classifiers;
    Matrix values;

    std::size_t n_rows() const { return values.rows(); }

    std::size_t col_index(const std::string& name) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) return j;
        throw std::invalid_argument("MetaTable: no column named '" + name + "'");
    }

    std::vector<double> column(const std::string& name) const { return values.col(col_index(name)); }
};

inline const std::vector<std::string>& meta_table_columns() {
    static const std::vector<std::string> cols = {
        "n",      "d",          "c",     "lambda", "rho",      "gamma",   "kappa",
        "eta",    "idim",       "idim_ratio",      "noise",    "mean_dist",
        "std_dist", "ci",       "F1_train", "F1_test", "F1_in", "F1_out",  "T_in"};
    return cols;
}

/// Join per-dataset profiles with harness records, averaging each score over
/// the unflagged folds of a (dataset, classifier) pair.
inline MetaTable build_meta_table(const std::map<std::string, MetricVector>& profiles,
                                  const std::vector<GeneralizationRecord>& records) {
    struct Acc {
        double sum = 0.0;
        std::size_t count = 0;
        void add(double v) { sum += v; ++count; }
        double mean_or_nan() const {
            return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
        }
    };
    struct RowAcc {
        Acc f1_train, f1_test, f1_in, f1_out, t_in;
    };
    std::map<std::pair<std::string, std::string>, RowAcc> groups;
    for (const auto& r : records) {
        if (r.flagged) continue;
        auto& g = groups[{r.dataset_id, r.classifier}];
        g.f1_train.add(r.f1_train);
        g.f1_test.add(r.f1_test);
        if (r.f1_in) g.f1_in.add(*r.f1_in);
        if (r.f1_out) g.f1_out.add(*r.f1_out);
        g.t_in.add(r.t_in);
    }

    MetaTable t;
    t.columns = meta_table_columns();
    t.values = Matrix(groups.size(), t.columns.size(), std::numeric_limits<double>::quiet_NaN());
    std::size_t row = 0;
    for (const auto& [key, g] : groups) {
        const auto& [dataset_id, classifier] = key;
        auto it = profiles.find(dataset_id);
        if (it == profiles.end())
            throw std::invalid_argument("build_meta_table: no profile for dataset '" + dataset_id + "'");
        const MetricVector& mv = it->second;
        t.dataset_ids.push_back(dataset_id);
        t.classifiers.push_back(classifier);
        const double vals[] = {static_cast<double>(mv.n),
                               static_cast<double>(mv.d),
                               static_cast<double>(mv.c),
                               mv.lambda,
                               mv.rho,
                               mv.gamma,
                               mv.kappa,
                               mv.eta,
                               static_cast<double>(mv.idim),
                               mv.idim_ratio,
                               mv.noise,
                               mv.mean_dist,
                               mv.std_dist,
                               mv.ci,
                               g.f1_train.mean_or_nan(),
                               g.f1_test.mean_or_nan(),
                               g.f1_in.mean_or_nan(),
                               g.f1_out.mean_or_nan(),
                               g.t_in.mean_or_nan()};
        for (std::size_t j = 0; j < t.columns.size(); ++j) t.values(row, j) = vals[j];
        ++row;
    }
    return t;
}

// --- correlation matrix -----------------------------------------------------

/// Pearson correlations with pairwise-complete observations; undefined cells
/// (constant column or fewer than 2 shared rows) are NaN. Exactly symmetric
/// with unit diagonal for non-constant columns.
inline Matrix correlation_matrix(const MetaTable& t, const std::vector<std::string>& columns) {
    if (t.n_rows() < 3) throw std::invalid_argument("correlation_matrix: need at least 3 rows");
    const std::size_t m = columns.size();
    std::vector<std::vector<double>> cols(m);
    for (std::size_t j = 0; j < m; ++j) cols[j] = t.column(columns[j]);

    Matrix corr(m, m, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            std::vector<double> va, vb;
            for (std::size_t i = 0; i < t.n_rows(); ++i) {
                if (std::isnan(cols[a][i]) || std::isnan(cols[b][i])) continue;
                va.push_back(cols[a][i]);
                vb.push_back(cols[b][i]);
            }
            if (va.size() < 2) continue;
            const double r = detail::pearson(va, vb);
            if (std::isnan(r)) continue;
            if (a == b) {
                corr(a, a) = 1.0;
            } else {
                corr(a, b) = corr(b, a) = std::clamp(r, -1.0, 1.0);
            }
        }
    }
    return corr;
}

/// Coefficient of determination, 1 - SS_res / SS_tot.
inline double r_squared(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw std::invalid_argument("r_squared: length mismatch");
    if (y.size() < 2) throw std::invalid_argument("r_squared: need at least 2 points");
    const double m = mean_of(y);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - m) * (y[i] - m);
    }
    if (ss_tot <= 0.0) throw std::invalid_argument("r_squared: constant target");
    return 1.0 - ss_res / ss_tot;
}

// --- formulas ---------------------------------------------------------------

enum class FOp : std::uint8_t {
    constant,
    variable,
    add,
    sub,
    mul,
    div,
    cos_op,
    sin_op,
    exp_op,
    log_op,
    erf_op,
    erfc_op,
    step_op
};

inline int f_arity(FOp op) {
    switch (op) {
        case FOp::constant:
        case FOp::variable: return 0;
        case FOp::add:
        case FOp::sub:
        case FOp::mul:
        case FOp::div: return 2;
        default: return 1;
    }
}

/// Node weights: terminals 1, +/- 1, x and / 2, unary transcendentals 4.
inline double f_weight(FOp op) {
    switch (op) {
        case FOp::constant:
        case FOp::variable:
        case FOp::add:
        case FOp::sub: return 1.0;
        case FOp::mul:
        case FOp::div: return 2.0;
        default: return 4.0;
    }
}

struct FormulaNode {
    FOp op = FOp::constant;
    double value = 0.0;     // constants
    std::size_t var = 0;    // variable column
};

/// Expression tree stored in prefix order; a node's subtree is contiguous.
struct Formula {
    std::vector<FormulaNode> nodes;

    bool empty() const { return nodes.empty(); }

    double complexity() const {
        double c = 0.0;
        for (const auto& n : nodes) c += f_weight(n.op);
        return c;
    }

    std::size_t subtree_end(std::size_t start) const {
        std::size_t need = 1, i = start;
        while (need > 0) {
            need += static_cast<std::size_t>(f_arity(nodes[i].op));
            --need;
            ++i;
        }
        return i;
    }

    double eval(std::span<const double> row) const {
        std::size_t cursor = 0;
        return eval_at(cursor, row);
    }

    std::vector<double> eval_rows(const Matrix& rows) const {
        std::vector<double> out(rows.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = eval(rows.row(i));
        return out;
    }

    std::string to_string(const std::vector<std::string>& names) const {
        std::size_t cursor = 0;
        return print_at(cursor, names);
    }

private:
    double eval_at(std::size_t& cursor, std::span<const double> row) const {
        const FormulaNode& n = nodes[cursor++];
        switch (n.op) {
            case FOp::constant: return n.value;
            case FOp::variable: return row[n.var];
            case FOp::add: {
                const double a = eval_at(cursor, row);
                const double b = eval_at(cursor, row);
                return a + b;
            }
            case FOp::sub: {
                const double a = eval_at(cursor, row);
                const double b = eval_at(cursor, row);
                return a - b;
            }
            case FOp::mul: {
                const double a = eval_at(cursor, row);
                const double b = eval_at(cursor, row);
                return a * b;
            }
            case FOp::div: {
                const double a = eval_at(cursor, row);
                const double b = eval_at(cursor, row);
                return a / b;  // inf/nan surfaces as a fitness penalty
            }
            case FOp::cos_op: return std::cos(eval_at(cursor, row));
            case FOp::sin_op: return std::sin(eval_at(cursor, row));
            case FOp::exp_op: return std::exp(eval_at(cursor, row));
            case FOp::log_op: return std::log(eval_at(cursor, row));
            case FOp::erf_op: {
                const double a = eval_at(cursor, row);
                return std::isnan(a) ? a : erf_family(std::clamp(a, -1e6, 1e6)).erf;
            }
            case FOp::erfc_op: {
                const double a = eval_at(cursor, row);
                return std::isnan(a) ? a : erf_family(std::clamp(a, -1e6, 1e6)).erfc;
            }
            case FOp::step_op: return step(eval_at(cursor, row));
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    std::string print_at(std::size_t& cursor, const std::vector<std::string>& names) const {
        const FormulaNode& n = nodes[cursor++];
        std::ostringstream os;
        switch (n.op) {
            case FOp::constant:
                os << n.value;
                return os.str();
            case FOp::variable:
                return n.var < names.size() ? names[n.var] : "x" + std::to_string(n.var);
            case FOp::add:
            case FOp::sub:
            case FOp::mul:
            case FOp::div: {
                const char* sym = n.op == FOp::add ? " + " : n.op == FOp::sub ? " - "
                                  : n.op == FOp::mul ? " * " : " / ";
                const std::string a = print_at(cursor, names);
                const std::string b = print_at(cursor, names);
                return "(" + a + sym + b + ")";
            }
            default: {
                const char* fn = n.op == FOp::cos_op ? "cos" : n.op == FOp::sin_op ? "sin"
                                 : n.op == FOp::exp_op ? "exp" : n.op == FOp::log_op ? "log"
                                 : n.op == FOp::erf_op ? "erf" : n.op == FOp::erfc_op ? "erfc" : "step";
                return std::string(fn) + "(" + print_at(cursor, names) + ")";
            }
        }
    }
};

namespace fbuild {

inline Formula constant(double v) { return {{{FOp::constant, v, 0}}}; }
inline Formula variable(std::size_t idx) { return {{{FOp::variable, 0.0, idx}}}; }

inline Formula combine(FOp op, const Formula& a, const Formula& b) {
    Formula f;
    f.nodes.reserve(1 + a.nodes.size() + b.nodes.size());
    f.nodes.push_back({op, 0.0, 0});
    f.nodes.insert(f.nodes.end(), a.nodes.begin(), a.nodes.end());
    f.nodes.insert(f.nodes.end(), b.nodes.begin(), b.nodes.end());
    return f;
}

inline Formula unary(FOp op, const Formula& a) {
    Formula f;
    f.nodes.reserve(1 + a.nodes.size());
    f.nodes.push_back({op, 0.0, 0});
    f.nodes.insert(f.nodes.end(), a.nodes.begin(), a.nodes.end());
    return f;
}

inline Formula add(const Formula& a, const Formula& b) { return combine(FOp::add, a, b); }
inline Formula sub(const Formula& a, const Formula& b) { return combine(FOp::sub, a, b); }
inline Formula mul(const Formula& a, const Formula& b) { return combine(FOp::mul, a, b); }

}  // namespace fbuild

// --- fixed association equations ---------------------------------------------

struct FixedEquation {
    std::string name;
    std::string target_column;
    std::string classifier;  // empty = classifier-agnostic (rows deduped by dataset)
    Formula formula;
};

/// The seven reference association formulas over meta-table columns.
inline std::vector<FixedEquation> fixed_equations(const MetaTable& t) {
    using namespace fbuild;
    const auto v = [&](const char* name) { return variable(t.col_index(name)); };

    std::vector<FixedEquation> eqs;
    // F1_in(LR) = 0.857 + (0.959*F1_train - 0.831) * step(2.38*idim_ratio - 0.0019)
    eqs.push_back({"eq1_F1_in_LR", "F1_in", "logreg",
                   add(constant(0.857),
                       mul(sub(mul(constant(0.959), v("F1_train")), constant(0.831)),
                           unary(FOp::step_op,
                                 sub(mul(constant(2.38), v("idim_ratio")), constant(0.0019)))))});
    // F1_out(LR) = 0.843*F1_train + 0.176*lambda - 0.040 - 0.097*noise
    eqs.push_back({"eq2_F1_out_LR", "F1_out", "logreg",
                   sub(sub(add(mul(constant(0.843), v("F1_train")), mul(constant(0.176), v("lambda"))),
                           constant(0.040)),
                       mul(constant(0.097), v("noise")))});
    // F1_in(SVC) = 1.072*F1_train + 0.021*std_dist - 0.08 - 0.003*c
    eqs.push_back({"eq3_F1_in_SVC", "F1_in", "svc",
                   sub(sub(add(mul(constant(1.072), v("F1_train")), mul(constant(0.021), v("std_dist"))),
                           constant(0.08)),
                       mul(constant(0.003), v("c")))});
    // F1_out(SVC) = 0.820 + (1.605*F1_train - 1.389) * cos(5.424 + 2.377*idim_ratio)
    eqs.push_back({"eq4_F1_out_SVC", "F1_out", "svc",
                   add(constant(0.820),
                       mul(sub(mul(constant(1.605), v("F1_train")), constant(1.389)),
                           unary(FOp::cos_op,
                                 add(constant(5.424), mul(constant(2.377), v("idim_ratio"))))))});
    // F1_in(RF) = 7.66*rho - 1.822 - 5.266*rho^2
    eqs.push_back({"eq5_F1_in_RF", "F1_in", "forest",
                   sub(sub(mul(constant(7.66), v("rho")), constant(1.822)),
                       mul(constant(5.266), mul(v("rho"), v("rho"))))});
    // F1_out(RF) = 0.818 + (1.237*rho - 0.767) * erfc(4.65*rho - 2.883)
    eqs.push_back({"eq6_F1_out_RF", "F1_out", "forest",
                   add(constant(0.818),
                       mul(sub(mul(constant(1.237), v("rho")), constant(0.767)),
                           unary(FOp::erfc_op, sub(mul(constant(4.65), v("rho")), constant(2.883)))))});
    // T_in = 0.46 + 0.42 * erf(4.65*rho - 2.20 - 2.98*noise)
    eqs.push_back({"eq7_T_in", "T_in", "",
                   add(constant(0.46),
                       mul(constant(0.42),
                           unary(FOp::erf_op, sub(sub(mul(constant(4.65), v("rho")), constant(2.20)),
                                                  mul(constant(2.98), v("noise"))))))});
    return eqs;
}

struct FixedEquationReport {
    std::string name;
    std::string target_column;
    std::string classifier;
    std::size_t n_rows = 0;
    std::optional<double> r2;
    std::vector<double> predictions;
    std::vector<double> observed;
    std::string note;
};

/// Evaluate each reference formula row-wise on the matching rows and report
/// R^2 against the observed target. Equations whose classifier has no rows
/// come back with a note instead of a score.
inline std::vector<FixedEquationReport> eval_fixed_equations(const MetaTable& t) {
    std::vector<FixedEquationReport> reports;
    for (const auto& eq : fixed_equations(t)) {
        FixedEquationReport rep;
        rep.name = eq.name;
        rep.target_column = eq.target_column;
        rep.classifier = eq.classifier;

        const std::size_t target = t.col_index(eq.target_column);
        std::set<std::string> seen_datasets;
        for (std::size_t i = 0; i < t.n_rows(); ++i) {
            if (!eq.classifier.empty() && t.classifiers[i] != eq.classifier) continue;
            if (eq.classifier.empty() && !seen_datasets.insert(t.dataset_ids[i]).second) continue;
            const double obs = t.values(i, target);
            const double pred = eq.formula.eval(t.values.row(i));
            if (std::isnan(obs) || std::isnan(pred)) continue;
            rep.observed.push_back(obs);
            rep.predictions.push_back(pred);
        }
        rep.n_rows = rep.observed.size();
        if (rep.n_rows < 2) {
            rep.note = "not enough rows for this classifier";
        } else {
            try {
                rep.r2 = r_squared(rep.observed, rep.predictions);
            } catch (const std::invalid_argument&) {
                rep.note = "constant observed target";
            }
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

// --- Pareto front -----------------------------------------------------------

struct ScoredFormula {
    Formula formula;
    double complexity = 0.0;
    double r2 = -std::numeric_limits<double>::infinity();
};

using ParetoFront = std::vector<ScoredFormula>;

/// Keep the mutually non-dominated candidates, ordered by complexity
/// ascending; duplicates of a (complexity, r2) point collapse to the first.
inline ParetoFront pareto_filter(const ParetoFront& candidates) {
    ParetoFront sorted = candidates;
    std::stable_sort(sorted.begin(), sorted.end(), [](const ScoredFormula& a, const ScoredFormula& b) {
        if (a.complexity != b.complexity) return a.complexity < b.complexity;
        return a.r2 > b.r2;
    });
    ParetoFront front;
    double best = -std::numeric_limits<double>::infinity();
    for (auto& s : sorted) {
        if (s.r2 > best) {
            best = s.r2;
            front.push_back(std::move(s));
        }
    }
    return front;
}

// --- symbolic regression ------------------------------------------------------

struct SrConfig {
    std::size_t population = 400;
    std::size_t generations = 200;
    std::uint64_t seed = 0;
    std::size_t max_nodes = 48;
    std::size_t max_depth = 8;
    std::size_t tournament = 4;
    double early_stop_r2 = 0.999;
    std::vector<std::string> feature_columns;  // empty = all except target
};

namespace detail {

struct SrContext {
    Matrix rows;                 // feature matrix (meta-table column order)
    std::vector<double> target;
    std::vector<std::size_t> usable_vars;  // column indices allowed as terminals
    double target_mean = 0.0;
    double ss_tot = 0.0;
};

inline const std::vector<FOp>& sr_unary_ops() {
    static const std::vector<FOp> ops = {FOp::cos_op, FOp::sin_op, FOp::exp_op, FOp::log_op,
                                         FOp::erf_op, FOp::erfc_op, FOp::step_op};
    return ops;
}

inline const std::vector<FOp>& sr_binary_ops() {
    static const std::vector<FOp> ops = {FOp::add, FOp::sub, FOp::mul, FOp::div};
    return ops;
}

inline FormulaNode random_terminal(const SrContext& ctx, Rng& rng) {
    if (rng.uniform() < 0.5) {
        const std::size_t pick = static_cast<std::size_t>(rng.below(ctx.usable_vars.size()));
        return {FOp::variable, 0.0, ctx.usable_vars[pick]};
    }
    return {FOp::constant, rng.uniform(-2.0, 2.0), 0};
}

inline void random_subtree(const SrContext& ctx, Rng& rng, std::size_t depth, bool full,
                           std::vector<FormulaNode>& out) {
    if (depth == 0 || (!full && rng.uniform() < 0.3)) {
        out.push_back(random_terminal(ctx, rng));
        return;
    }
    const double roll = rng.uniform();
    if (roll < 0.70) {
        const auto& ops = sr_binary_ops();
        out.push_back({ops[rng.below(ops.size())], 0.0, 0});
        random_subtree(ctx, rng, depth - 1, full, out);
        random_subtree(ctx, rng, depth - 1, full, out);
    } else {
        const auto& ops = sr_unary_ops();
        out.push_back({ops[rng.below(ops.size())], 0.0, 0});
        random_subtree(ctx, rng, depth - 1, full, out);
    }
}

inline Formula random_formula(const SrContext& ctx, Rng& rng, std::size_t max_depth, bool full) {
    Formula f;
    random_subtree(ctx, rng, 1 + rng.below(max_depth), full, f.nodes);
    return f;
}

inline std::size_t formula_depth(const Formula& f, std::size_t at = 0) {
    const int arity = f_arity(f.nodes[at].op);
    if (arity == 0) return 1;
    std::size_t child = at + 1;
    std::size_t depth = 0;
    for (int k = 0; k < arity; ++k) {
        depth = std::max(depth, formula_depth(f, child));
        child = f.subtree_end(child);
    }
    return depth + 1;
}

/// R^2 of the formula on the context rows; any non-finite prediction sinks
/// the candidate with a large penalty instead of propagating NaN.
inline double sr_fitness(const Formula& f, const SrContext& ctx) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < ctx.rows.rows(); ++i) {
        const double pred = f.eval(ctx.rows.row(i));
        if (!std::isfinite(pred)) return -std::numeric_limits<double>::infinity();
        const double r = ctx.target[i] - pred;
        ss_res += r * r;
    }
    return 1.0 - ss_res / ctx.ss_tot;
}

inline Formula splice(const Formula& host, std::size_t from, std::size_t to, const Formula& graft,
                      std::size_t g_from, std::size_t g_to) {
    Formula out;
    out.nodes.reserve(host.nodes.size() - (to - from) + (g_to - g_from));
    out.nodes.insert(out.nodes.end(), host.nodes.begin(), host.nodes.begin() + static_cast<std::ptrdiff_t>(from));
    out.nodes.insert(out.nodes.end(), graft.nodes.begin() + static_cast<std::ptrdiff_t>(g_from),
                     graft.nodes.begin() + static_cast<std::ptrdiff_t>(g_to));
    out.nodes.insert(out.nodes.end(), host.nodes.begin() + static_cast<std::ptrdiff_t>(to), host.nodes.end());
    return out;
}

inline Formula crossover(const Formula& a, const Formula& b, Rng& rng) {
    const std::size_t pa = static_cast<std::size_t>(rng.below(a.nodes.size()));
    const std::size_t pb = static_cast<std::size_t>(rng.below(b.nodes.size()));
    return splice(a, pa, a.subtree_end(pa), b, pb, b.subtree_end(pb));
}

inline Formula mutate_subtree(const Formula& a, const SrContext& ctx, Rng& rng) {
    const std::size_t p = static_cast<std::size_t>(rng.below(a.nodes.size()));
    Formula graft;
    random_subtree(ctx, rng, 1 + rng.below(3), false, graft.nodes);
    return splice(a, p, a.subtree_end(p), graft, 0, graft.nodes.size());
}

inline Formula jitter_constants(const Formula& a, Rng& rng) {
    Formula out = a;
    bool any = false;
    for (auto& n : out.nodes) {
        if (n.op != FOp::constant) continue;
        any = true;
        if (rng.uniform() < 0.5) {
            n.value *= 1.0 + 0.2 * rng.normal();
        } else {
            n.value += 0.1 * rng.normal();
        }
    }
    if (!any && !out.nodes.empty()) {
        // nothing to tune: wrap the root in an affine shell instead
        Formula shifted = fbuild::add(fbuild::constant(0.1 * rng.normal()), out);
        return shifted;
    }
    return out;
}

inline Formula affine_wrap(const Formula& a, Rng& rng) {
    const std::size_t p = static_cast<std::size_t>(rng.below(a.nodes.size()));
    const std::size_t end = a.subtree_end(p);
    Formula inner;
    inner.nodes.assign(a.nodes.begin() + static_cast<std::ptrdiff_t>(p),
                       a.nodes.begin() + static_cast<std::ptrdiff_t>(end));
    Formula wrapped = fbuild::add(fbuild::mul(fbuild::constant(1.0 + 0.3 * rng.normal()), inner),
                                  fbuild::constant(0.2 * rng.normal()));
    return splice(a, p, end, wrapped, 0, wrapped.nodes.size());
}

/// Deterministic random-restart coordinate search over the constants.
inline void polish_constants(Formula& f, double& fitness, const SrContext& ctx, Rng& rng,
                             std::size_t trials) {
    std::vector<std::size_t> const_pos;
    for (std::size_t i = 0; i < f.nodes.size(); ++i)
        if (f.nodes[i].op == FOp::constant) const_pos.push_back(i);
    if (const_pos.empty()) return;
    double sigma = 0.5;
    for (std::size_t t = 0; t < trials; ++t) {
        Formula trial = f;
        for (std::size_t p : const_pos)
            if (rng.uniform() < 0.7) trial.nodes[p].value += sigma * rng.normal();
        const double fit = sr_fitness(trial, ctx);
        if (fit > fitness) {
            f = std::move(trial);
            fitness = fit;
        }
        sigma *= 0.97;
    }
}

}  // namespace detail

/// Genetic-programming symbolic regression over meta-table columns,
/// maintaining a Pareto archive over (complexity, R^2). Deterministic given
/// the seed.
inline ParetoFront sr_search(const MetaTable& t, const std::string& target_column, const SrConfig& cfg = {}) {
    detail::SrContext ctx;
    const std::size_t target_idx = t.col_index(target_column);

    std::vector<std::size_t> feature_idx;
    if (cfg.feature_columns.empty()) {
        for (std::size_t j = 0; j < t.columns.size(); ++j)
            if (j != target_idx) feature_idx.push_back(j);
    } else {
        for (const auto& name : cfg.feature_columns) {
            const std::size_t j = t.col_index(name);
            if (j == target_idx) throw std::invalid_argument("sr_search: target listed as feature");
            feature_idx.push_back(j);
        }
    }

    // keep rows with a full set of used columns
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        if (std::isnan(t.values(i, target_idx))) continue;
        bool ok = true;
        for (std::size_t j : feature_idx)
            if (std::isnan(t.values(i, j))) {
                ok = false;
                break;
            }
        if (ok) rows.push_back(i);
    }
    if (rows.size() < 10) throw std::invalid_argument("sr_search: need at least 10 complete rows");

    ctx.rows = t.values.take_rows(rows);
    ctx.target.reserve(rows.size());
    for (std::size_t i : rows) ctx.target.push_back(t.values(i, target_idx));
    ctx.usable_vars = feature_idx;
    ctx.target_mean = mean_of(ctx.target);
    ctx.ss_tot = 0.0;
    for (double v : ctx.target) ctx.ss_tot += (v - ctx.target_mean) * (v - ctx.target_mean);
    if (ctx.ss_tot <= 0.0) throw std::invalid_argument("sr_search: constant target");

    Rng rng = make_rng(derive_seed(cfg.seed, 0x5e5e));

    // ramped half-and-half
    std::vector<Formula> pop;
    pop.reserve(cfg.population);
    for (std::size_t i = 0; i < cfg.population; ++i)
        pop.push_back(detail::random_formula(ctx, rng, 1 + i % 4, i % 2 == 0));

    std::vector<double> fitness(pop.size());
    std::map<double, ScoredFormula> archive;  // complexity -> best scorer there

    auto admit = [&](const Formula& f, double fit) {
        if (!std::isfinite(fit)) return;
        const double c = f.complexity();
        auto it = archive.find(c);
        if (it == archive.end() || fit > it->second.r2) archive[c] = {f, c, fit};
    };

    auto evaluate_all = [&] {
        for (std::size_t i = 0; i < pop.size(); ++i) {
            fitness[i] = detail::sr_fitness(pop[i], ctx);
            admit(pop[i], fitness[i]);
        }
    };
    evaluate_all();

    auto tournament = [&]() -> std::size_t {
        std::size_t best = static_cast<std::size_t>(rng.below(pop.size()));
        for (std::size_t k = 1; k < cfg.tournament; ++k) {
            const std::size_t cand = static_cast<std::size_t>(rng.below(pop.size()));
            if (fitness[cand] > fitness[best] ||
                (fitness[cand] == fitness[best] &&
                 pop[cand].complexity() < pop[best].complexity()))
                best = cand;
        }
        return best;
    };

    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        double best_fit = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (fitness[i] > best_fit) {
                best_fit = fitness[i];
                best_idx = i;
            }
        if (best_fit >= cfg.early_stop_r2) break;

        std::vector<Formula> next;
        next.reserve(pop.size());
        next.push_back(pop[best_idx]);  // elite

        while (next.size() < pop.size()) {
            const double roll = rng.uniform();
            Formula child;
            if (roll < 0.60) {
                child = detail::crossover(pop[tournament()], pop[tournament()], rng);
            } else if (roll < 0.80) {
                child = detail::mutate_subtree(pop[tournament()], ctx, rng);
            } else if (roll < 0.93) {
                child = detail::jitter_constants(pop[tournament()], rng);
            } else {
                child = detail::affine_wrap(pop[tournament()], rng);
            }
            if (child.nodes.size() > cfg.max_nodes || detail::formula_depth(child) > cfg.max_depth)
                child = pop[tournament()];
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        evaluate_all();

        if (gen % 10 == 9) {
            double bf = -std::numeric_limits<double>::infinity();
            std::size_t bi = 0;
            for (std::size_t i = 0; i < pop.size(); ++i)
                if (fitness[i] > bf) {
                    bf = fitness[i];
                    bi = i;
                }
            detail::polish_constants(pop[bi], fitness[bi], ctx, rng, 40);
            admit(pop[bi], fitness[bi]);
        }
    }

    // final constant polish on the archive itself
    ParetoFront candidates;
    for (auto& [c, scored] : archive) {
        double fit = scored.r2;
        detail::polish_constants(scored.formula, fit, ctx, rng, 60);
        scored.r2 = fit;
        scored.complexity = scored.formula.complexity();
        candidates.push_back(scored);
    }
    return pareto_filter(candidates);
}

// --- SVG heatmap --------------------------------------------------------------

/// Correlation heatmap as a standalone SVG (blue -1 .. white 0 .. red +1,
/// grey = undefined). Output is byte-deterministic for identical input.
inline std::string correlation_svg(const Matrix& corr, const std::vector<std::string>& names) {
    const std::size_t m = corr.rows();
    const int cell = 34, margin = 110, legend = 50;
    const int size = margin + static_cast<int>(m) * cell;

    std::ostringstream os;
    os.precision(4);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + legend << "\" height=\"" << size
       << "\" font-family=\"monospace\" font-size=\"11\">\n";
    auto color = [](double v) {
        std::ostringstream c;
        if (std::isnan(v)) {
            c << "rgb(180,180,180)";
            return c.str();
        }
        const double t = std::clamp(v, -1.0, 1.0);
        int r = 255, g = 255, b = 255;
        if (t >= 0.0) {
            g = static_cast<int>(255 * (1.0 - t));
            b = g;
        } else {
            r = static_cast<int>(255 * (1.0 + t));
            g = r;
        }
        c << "rgb(" << r << ',' << g << ',' << b << ")";
        return c.str();
    };
    for (std::size_t i = 0; i < m; ++i) {
        os << "<text x=\"" << margin - 6 << "\" y=\"" << margin + static_cast<int>(i) * cell + cell / 2 + 4
           << "\" text-anchor=\"end\">" << names[i] << "</text>\n";
        os << "<text x=\"" << margin + static_cast<int>(i) * cell + cell / 2 << "\" y=\"" << margin - 6
           << "\" text-anchor=\"end\" transform=\"rotate(-60 "
           << margin + static_cast<int>(i) * cell + cell / 2 << ' ' << margin - 6 << ")\">" << names[i]
           << "</text>\n";
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double v = corr(i, j);
            os << "<rect x=\"" << margin + static_cast<int>(j) * cell << "\" y=\""
               << margin + static_cast<int>(i) * cell << "\" width=\"" << cell << "\" height=\"" << cell
               << "\" fill=\"" << color(v) << "\" stroke=\"white\"/>\n";
            if (!std::isnan(v)) {
                os << "<text x=\"" << margin + static_cast<int>(j) * cell + cell / 2 << "\" y=\""
                   << margin + static_cast<int>(i) * cell + cell / 2 + 4
                   << "\" text-anchor=\"middle\">" << std::fixed;
                os.precision(2);
                os << v;
                os.unsetf(std::ios_base::floatfield);
                os.precision(4);
                os << "</text>\n";
            }
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace genhull
