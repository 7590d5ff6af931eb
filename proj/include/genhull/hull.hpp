#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhull/core.hpp"

namespace genhull {

/// Phase-I feasibility problem for convex-hull membership: find y >= 0 with
/// A y = b, where A stacks the training points (transposed) over a row of
/// ones and b stacks the query point over 1. The objective is constant; only
/// feasibility matters.
struct PhaseOneProblem {
    Matrix A;                // (d+1) x n
    std::vector<double> b;   // d+1
    std::vector<double> c;   // n zeros, kept to mirror the LP statement

    std::size_t n_points() const { return A.cols(); }
    std::size_t n_rows() const { return A.rows(); }
};

inline PhaseOneProblem build_phase_one(const Matrix& x_train, std::span<const double> z) {
    const std::size_t n = x_train.rows();
    const std::size_t d = x_train.cols();
    if (n == 0) throw std::invalid_argument("build_phase_one: empty training set");
    if (z.size() != d) throw std::invalid_argument("build_phase_one: dimension mismatch");
    PhaseOneProblem p;
    p.A = Matrix(d + 1, n);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) p.A(j, i) = x_train(i, j);
    for (std::size_t i = 0; i < n; ++i) p.A(d, i) = 1.0;
    p.b.assign(z.begin(), z.end());
    p.b.push_back(1.0);
    p.c.assign(n, 0.0);
    return p;
}

enum class LpStatus { feasible, infeasible, indeterminate };

struct PhaseOneResult {
    LpStatus status = LpStatus::indeterminate;
    double objective = 0.0;   // residual sum at termination, equilibrated scale
    std::size_t iterations = 0;
};

namespace detail {

constexpr double kPivotEps = 1e-11;
constexpr double kEnterEps = 1e-9;

}  // namespace detail

/// Phase-I simplex: minimize the sum of artificial variables for A y = b,
/// y >= 0. Feasible iff the optimum falls at or below `tol` (measured after
/// row equilibration). Dantzig pricing with a permanent switch to Bland's
/// rule once the objective stalls; iterations capped at 50 * (n + d).
inline PhaseOneResult phase1_feasible(const PhaseOneProblem& p, double tol = 1e-7) {
    const std::size_t n = p.n_points();
    std::size_t m = p.n_rows();

    // Equilibrated working copy: scale each row of [A | b] by the row's
    // max |A| entry so `tol` is scale-free. All-zero rows reduce to a direct
    // b check.
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    rows.reserve(m);
    rhs.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        double scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::fabs(p.A(i, j)));
        if (scale == 0.0) {
            if (std::fabs(p.b[i]) > tol) return {LpStatus::infeasible, std::fabs(p.b[i]), 0};
            continue;
        }
        std::vector<double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = p.A(i, j) / scale;
        double b = p.b[i] / scale;
        if (b < 0.0) {
            for (auto& v : r) v = -v;
            b = -b;
        }
        rows.push_back(std::move(r));
        rhs.push_back(b);
    }
    m = rows.size();
    if (m == 0) return {LpStatus::feasible, 0.0, 0};

    // tableau: n structural columns + m artificial columns
    const std::size_t total = n + m;
    std::vector<std::vector<double>> t(m, std::vector<double>(total, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        std::copy(rows[i].begin(), rows[i].end(), t[i].begin());
        t[i][n + i] = 1.0;
    }
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;
    std::vector<char> barred(total, 0);  // artificials may not re-enter

    // reduced costs for minimizing the artificial sum
    std::vector<double> obj(total, 0.0);
    double objval = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        objval += rhs[i];
        for (std::size_t j = 0; j < n; ++j) obj[j] += t[i][j];
    }

    const std::size_t max_iter = 50 * (n + p.n_rows());
    const double stall_eps = 1e-13;
    std::size_t stall_streak = 0;
    bool bland = false;
    PhaseOneResult res;

    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        if (objval <= tol * 1e-3) break;  // already conclusively feasible

        // entering column
        std::size_t enter = total;
        if (bland) {
            for (std::size_t j = 0; j < total; ++j)
                if (!barred[j] && obj[j] > detail::kEnterEps) {
                    enter = j;
                    break;
                }
        } else {
            double best = detail::kEnterEps;
            for (std::size_t j = 0; j < total; ++j)
                if (!barred[j] && obj[j] > best) {
                    best = obj[j];
                    enter = j;
                }
        }
        if (enter == total) break;  // optimal

        // ratio test
        std::size_t leave = m;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (t[i][enter] <= detail::kPivotEps) continue;
            const double ratio = rhs[i] / t[i][enter];
            if (leave == m || ratio < best_ratio - 1e-15 ||
                (std::fabs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave == m) {
            // cannot happen for a bounded Phase-I objective; numerically, bar
            // the column and move on
            barred[enter] = 1;
            obj[enter] = 0.0;
            continue;
        }

        // pivot
        const double prev_obj = objval;
        const double piv = t[leave][enter];
        auto& prow = t[leave];
        for (auto& v : prow) v /= piv;
        rhs[leave] /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            const double f = t[i][enter];
            if (f == 0.0) continue;
            auto& row = t[i];
            for (std::size_t j = 0; j < total; ++j) row[j] -= f * prow[j];
            row[enter] = 0.0;
            rhs[i] -= f * rhs[leave];
            if (rhs[i] < 0.0) rhs[i] = 0.0;  // clamp roundoff
        }
        {
            const double f = obj[enter];
            for (std::size_t j = 0; j < total; ++j) obj[j] -= f * prow[j];
            obj[enter] = 0.0;
            objval -= f * rhs[leave];
        }

        const std::size_t leaving_var = basis[leave];
        basis[leave] = enter;
        if (leaving_var >= n) barred[leaving_var] = 1;  // artificial out for good

        if (prev_obj - objval <= stall_eps * (1.0 + std::fabs(prev_obj))) {
            if (++stall_streak > 2 * m + 10) bland = true;  // degeneracy streak
        } else {
            stall_streak = 0;
        }
    }

    if (res.iterations >= max_iter) {
        res.status = LpStatus::indeterminate;
        res.objective = objval;
        return res;
    }
    res.objective = std::max(objval, 0.0);
    res.status = res.objective <= tol ? LpStatus::feasible : LpStatus::infeasible;
    return res;
}

enum class PrefilterVerdict { definitely_outside, unknown };

/// Axis-aligned bounding-box screen. Flags a query as definitely outside only
/// when some coordinate clears the training box by more than a tolerance
/// margin, so it can never reject a point the LP would accept.
inline PrefilterVerdict bbox_prefilter(const Matrix& x_train, std::span<const double> z, double tol = 1e-7) {
    if (x_train.cols() != z.size()) throw std::invalid_argument("bbox_prefilter: dimension mismatch");
    if (x_train.rows() == 0) return PrefilterVerdict::unknown;
    for (std::size_t j = 0; j < x_train.cols(); ++j) {
        double lo = x_train(0, j), hi = x_train(0, j);
        for (std::size_t i = 1; i < x_train.rows(); ++i) {
            lo = std::min(lo, x_train(i, j));
            hi = std::max(hi, x_train(i, j));
        }
        const double margin = 4.0 * tol * std::max({1.0, std::fabs(lo), std::fabs(hi), std::fabs(z[j])});
        if (z[j] < lo - margin || z[j] > hi + margin) return PrefilterVerdict::definitely_outside;
    }
    return PrefilterVerdict::unknown;
}

enum class Membership { inside, outside };

/// Convex-hull membership of z relative to the rows of x_train, decided by
/// LP Phase-I feasibility. Throws SolverIndeterminate when the simplex hits
/// its iteration cap rather than guessing.
inline Membership point_in_hull(const Matrix& x_train, std::span<const double> z, double tol = 1e-7) {
    if (x_train.rows() < 1) throw std::invalid_argument("point_in_hull: empty training set");
    if (x_train.cols() != z.size()) throw std::invalid_argument("point_in_hull: dimension mismatch");
    if (bbox_prefilter(x_train, z, tol) == PrefilterVerdict::definitely_outside) return Membership::outside;
    const PhaseOneResult r = phase1_feasible(build_phase_one(x_train, z), tol);
    switch (r.status) {
        case LpStatus::feasible: return Membership::inside;
        case LpStatus::infeasible: return Membership::outside;
        default:
            throw SolverIndeterminate("point_in_hull: simplex iteration cap reached (objective " +
                                      std::to_string(r.objective) + ")");
    }
}

/// Partition of a test fold by hull membership.
struct HullSplit {
    std::vector<std::size_t> inside_idx;
    std::vector<std::size_t> outside_idx;
    double t_in = 0.0;
    double t_out = 1.0;
};

/// Classify every test row independently; fan-out across `jobs` threads with
/// an index-ordered merge, so results do not depend on scheduling.
inline HullSplit split_by_hull(const Matrix& x_train, const Matrix& x_test, double tol = 1e-7,
                               unsigned jobs = 1) {
    if (x_train.cols() != x_test.cols()) throw std::invalid_argument("split_by_hull: dimension mismatch");
    if (x_test.rows() == 0) throw std::invalid_argument("split_by_hull: empty test set");

    const std::size_t n = x_test.rows();
    std::vector<char> inside(n, 0);
    std::vector<std::string> errors(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        try {
            inside[i] = point_in_hull(x_train, x_test.row(i), tol) == Membership::inside;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        if (!errors[i].empty()) throw SolverIndeterminate("split_by_hull: row " + std::to_string(i) + ": " + errors[i]);

    HullSplit split;
    for (std::size_t i = 0; i < n; ++i)
        (inside[i] ? split.inside_idx : split.outside_idx).push_back(i);
    split.t_in = static_cast<double>(split.inside_idx.size()) / static_cast<double>(n);
    split.t_out = 1.0 - split.t_in;
    return split;
}

}  // namespace genhull
