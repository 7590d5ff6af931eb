#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhull/core.hpp"
#include "genhull/dataset.hpp"
#include "genhull/numerics.hpp"

namespace genhull {

/// Parameters of an equicorrelated multivariate normal cloud.
struct GaussianSpec {
    std::size_t n = 100;
    std::size_t d = 2;
    double rho = 0.0;   // pairwise correlation, [0, 1]
    double mu = 0.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_spec(const GaussianSpec& spec) {
    if (spec.n == 0 || spec.d == 0) throw std::invalid_argument("gaussian_cloud: n and d must be positive");
    if (!(spec.rho >= 0.0 && spec.rho <= 1.0))
        throw std::invalid_argument("gaussian_cloud: rho outside [0, 1] gives a non-PSD correlation matrix");
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("gaussian_cloud: sigma must be positive");
}

inline Matrix equicorrelation_factor(std::size_t d, double rho) {
    Matrix c(d, d, rho);
    for (std::size_t i = 0; i < d; ++i) c(i, i) = 1.0;
    return cholesky_psd(c);
}

}  // namespace detail

/// Sample n rows from the equicorrelated normal N(mu, sigma^2 * C(rho)).
inline Matrix gaussian_cloud(const GaussianSpec& spec) {
    detail::check_spec(spec);
    const Matrix l = detail::equicorrelation_factor(spec.d, spec.rho);
    Rng rng = make_rng(spec.seed);
    Matrix x(spec.n, spec.d);
    std::vector<double> z(spec.d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.d; ++j) z[j] = rng.normal();
        for (std::size_t j = 0; j < spec.d; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k <= j; ++k) v += l(j, k) * z[k];
            x(i, j) = spec.mu + spec.sigma * v;
        }
    }
    return x;
}

/// Balanced two-class problem: class 0 at mu, class 1 shifted by delta on
/// every coordinate, both with the same equicorrelated covariance.
inline Dataset two_class_gaussians(const GaussianSpec& spec, double delta) {
    detail::check_spec(spec);
    if (delta < 0.0) throw std::invalid_argument("two_class_gaussians: delta must be >= 0");
    const std::size_t n0 = spec.n / 2;

    GaussianSpec base = spec;
    base.n = spec.n;
    const Matrix cloud = gaussian_cloud(base);

    Dataset ds;
    ds.id = "two_class_gaussians(n=" + std::to_string(spec.n) + ",d=" + std::to_string(spec.d) + ")";
    ds.X = cloud;
    ds.y.assign(spec.n, 0);
    for (std::size_t i = n0; i < spec.n; ++i) {
        ds.y[i] = 1;
        for (std::size_t j = 0; j < spec.d; ++j) ds.X(i, j) += delta;
    }
    for (std::size_t j = 0; j < spec.d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    ds.class_labels = {"0", "1"};
    return ds;
}

/// Fraction of rows whose every coordinate lies in [center - radius, center + radius].
inline double interval_mass_fraction(const Matrix& samples, double center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("interval_mass_fraction: radius must be positive");
    if (samples.rows() == 0) throw std::invalid_argument("interval_mass_fraction: empty sample set");
    const double lo = center - radius;
    const double hi = center + radius;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        bool all_in = true;
        for (std::size_t j = 0; j < samples.cols(); ++j) {
            const double v = samples(i, j);
            if (v < lo || v > hi) {
                all_in = false;
                break;
            }
        }
        if (all_in) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples.rows());
}

}  // namespace genhull
