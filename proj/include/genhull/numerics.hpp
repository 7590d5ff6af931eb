#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "genhull/core.hpp"

namespace genhull {

struct ErfPair {
    double erf;
    double erfc;
};

/// erf and erfc as a consistent pair: the better-conditioned one is computed
/// and the other derived, so erf + erfc == 1 holds bit-exactly.
inline ErfPair erf_family(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("erf_family: non-finite input");
    if (x > 0.5) {
        const double c = std::erfc(x);
        return {1.0 - c, c};
    }
    const double e = std::erf(x);
    return {e, 1.0 - e};
}

/// Heaviside step with step(0) = 0; the convention used by the association
/// formula evaluator.
inline double step(double x) { return x > 0.0 ? 1.0 : 0.0; }

namespace detail {

inline double digamma(double x) {
    if (x <= 0.0 && x == std::floor(x))
        throw std::invalid_argument("digamma: non-positive integer");
    double result = 0.0;
    // reflection for negative arguments
    if (x < 0.0) {
        const double pi = 3.14159265358979323846;
        result -= pi / std::tan(pi * x);
        x = 1.0 - x;
    }
    while (x < 8.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

// Continued fraction for the regularized incomplete beta, evaluated with
// Lentz's algorithm.
inline double inc_beta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("reg_inc_beta: a, b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("reg_inc_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                            (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double front = std::exp(ln_front);
    // switch regimes at the continued fraction's sweet spot
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::inc_beta_cf(a, b, x) / a;
    return 1.0 - front * detail::inc_beta_cf(b, a, 1.0 - x) / b;
}

/// P(F <= f) for an F distribution with (d1, d2) degrees of freedom.
inline double f_cdf(double f, double d1, double d2) {
    if (f <= 0.0) return 0.0;
    return reg_inc_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
}

/// P(F > f); computed directly through the mirrored incomplete beta to avoid
/// cancellation for large statistics.
inline double f_sf(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

/// Dense symmetric matrix; construction checks symmetry.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(Matrix m, double rel_tol = 1e-12) : m_(std::move(m)) {
        if (m_.rows() != m_.cols())
            throw std::invalid_argument("SymmetricMatrix: not square");
        double scale = 0.0;
        for (double v : m_.data()) scale = std::max(scale, std::fabs(v));
        const double tol = rel_tol * std::max(scale, 1.0);
        for (std::size_t i = 0; i < m_.rows(); ++i)
            for (std::size_t j = i + 1; j < m_.cols(); ++j)
                if (std::fabs(m_(i, j) - m_(j, i)) > tol)
                    throw std::invalid_argument("SymmetricMatrix: input not symmetric");
    }

    std::size_t order() const { return m_.rows(); }
    const Matrix& dense() const { return m_; }

private:
    Matrix m_;
};

struct EigenResult {
    std::vector<double> values;  // sorted descending
    Matrix vectors;              // column i pairs with values[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
inline EigenResult sym_eigen(const SymmetricMatrix& s) {
    const std::size_t n = s.order();
    Matrix a = s.dense();
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
    if (n == 0) return {{}, v};

    double norm = 0.0;
    for (double x : a.data()) norm += x * x;
    norm = std::sqrt(norm);
    const double stop = std::max(norm, 1.0) * 1e-14;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= stop) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= stop / (2.0 * static_cast<double>(n))) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::fabs(theta) > 1e12) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                const double tau = sn / (1.0 + c);

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = a(p, k) = akp - sn * (akq + tau * akp);
                    a(k, q) = a(q, k) = akq + sn * (akp - tau * akq);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp - sn * (vkq + tau * vkp);
                    v(k, q) = vkq + sn * (vkp - tau * vkq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

/// Lower-triangular Cholesky factor of a PSD matrix; rank-deficient pivots
/// within tolerance collapse to zero columns instead of failing.
inline Matrix cholesky_psd(const Matrix& a, double tol = 1e-10) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_psd: not square");
    const std::size_t n = a.rows();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a(i, i)));
    const double eps = tol * std::max(scale, 1.0);

    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= eps) {
            if (d < -eps) throw std::invalid_argument("cholesky_psd: matrix not PSD");
            continue;  // zero column: rank-deficient direction
        }
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

}  // namespace genhull
