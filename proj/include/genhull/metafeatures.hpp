#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "genhull/core.hpp"
#include "genhull/dataset.hpp"
#include "genhull/numerics.hpp"

namespace genhull {

/// Per-dataset meta-feature record.
struct MetricVector {
    std::size_t n = 0;        // samples
    std::size_t d = 0;        // features
    std::size_t c = 0;        // classes
    double lambda = 0.0;      // mean Levene p-value
    double rho = 0.0;         // mean class-wise |Pearson|
    double gamma = 0.0;       // mean class-wise skewness
    double kappa = 0.0;       // mean class-wise kurtosis (normal -> 3)
    double eta = 0.0;         // mean feature-target mutual information, nats
    std::size_t idim = 0;     // principal components for 90% variance
    double idim_ratio = 0.0;  // idim / d
    double noise = 0.0;       // 1 - idim_ratio
    double mean_dist = 0.0;   // mean pairwise distance
    double std_dist = 0.0;    // std of pairwise distance
    double ci = 0.0;          // class imbalance
};

struct SimpleMetrics {
    std::size_t n, d, c;
};

inline SimpleMetrics simple_metrics(const Dataset& ds) {
    return {ds.n_samples(), ds.n_features(), ds.n_classes()};
}

namespace detail {

inline std::vector<std::vector<double>> group_by_class(const Dataset& ds, std::size_t feature) {
    std::vector<std::vector<double>> groups(ds.n_classes());
    for (std::size_t i = 0; i < ds.n_samples(); ++i)
        groups[static_cast<std::size_t>(ds.y[i])].push_back(ds.X(i, feature));
    return groups;
}

inline void warn(std::vector<std::string>* sink, std::string msg) {
    if (sink) sink->push_back(std::move(msg));
}

}  // namespace detail

/// Mean-centered Levene p-value for one feature across class groups, or
/// nan when the statistic is undefined (feature constant inside every class).
inline double levene_feature_pvalue(const std::vector<std::vector<double>>& groups) {
    const std::size_t c = groups.size();
    std::size_t total = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw std::invalid_argument("levene: every class needs >= 2 samples");
        total += g.size();
    }
    if (c < 2) throw std::invalid_argument("levene: need >= 2 groups");

    std::vector<std::vector<double>> z(c);
    double grand = 0.0;
    std::vector<double> zbar(c, 0.0);
    double zscale = 0.0;
    for (std::size_t g = 0; g < c; ++g) {
        const double m = mean_of(groups[g]);
        z[g].reserve(groups[g].size());
        for (double v : groups[g]) {
            const double dev = std::fabs(v - m);
            z[g].push_back(dev);
            zbar[g] += dev;
            grand += dev;
            zscale = std::max(zscale, dev);
        }
        zbar[g] /= static_cast<double>(groups[g].size());
    }
    grand /= static_cast<double>(total);

    if (zscale == 0.0) return std::numeric_limits<double>::quiet_NaN();  // 0/0

    double num = 0.0, den = 0.0;
    for (std::size_t g = 0; g < c; ++g) {
        num += static_cast<double>(groups[g].size()) * (zbar[g] - grand) * (zbar[g] - grand);
        for (double v : z[g]) den += (v - zbar[g]) * (v - zbar[g]);
    }
    const double d1 = static_cast<double>(c - 1);
    const double d2 = static_cast<double>(total - c);
    if (den <= 0.0) return num <= 0.0 ? 1.0 : 0.0;  // all spread between groups
    const double w = (d2 / d1) * (num / den);
    return f_sf(w, d1, d2);
}

/// lambda: mean over features of the Levene homoscedasticity p-value.
inline double levene_lambda(const Dataset& ds, std::vector<std::string>* warnings = nullptr) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        const double p = levene_feature_pvalue(detail::group_by_class(ds, j));
        if (std::isnan(p)) {
            detail::warn(warnings, "levene: feature '" + ds.feature_names[j] +
                                       "' constant within every class; skipped");
            continue;
        }
        sum += p;
        ++used;
    }
    if (used == 0) throw std::runtime_error("levene_lambda: no feature produced a defined statistic");
    return sum / static_cast<double>(used);
}

namespace detail {

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

/// rho: |Pearson| averaged over feature pairs within each class, then over
/// classes.
inline double classwise_correlation(const Dataset& ds, std::vector<std::string>* warnings = nullptr) {
    const std::size_t d = ds.n_features();
    if (d < 2) throw std::invalid_argument("classwise_correlation: needs d >= 2 (no feature pairs)");

    double class_sum = 0.0;
    std::size_t classes_used = 0;
    for (std::size_t cls = 0; cls < ds.n_classes(); ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.n_samples(); ++i)
            if (static_cast<std::size_t>(ds.y[i]) == cls) idx.push_back(i);
        if (idx.size() < 2) throw std::invalid_argument("classwise_correlation: class with < 2 samples");

        std::vector<std::vector<double>> cols(d);
        for (std::size_t j = 0; j < d; ++j) {
            cols[j].reserve(idx.size());
            for (std::size_t i : idx) cols[j].push_back(ds.X(i, j));
        }
        double pair_sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t l = j + 1; l < d; ++l) {
                const double r = detail::pearson(cols[j], cols[l]);
                if (std::isnan(r)) {
                    detail::warn(warnings, "classwise_correlation: constant feature in class '" +
                                               ds.class_labels[cls] + "'; pair (" + std::to_string(j) + "," +
                                               std::to_string(l) + ") skipped");
                    continue;
                }
                pair_sum += std::fabs(r);
                ++pairs;
            }
        }
        if (pairs == 0) {
            detail::warn(warnings, "classwise_correlation: no usable pairs in class '" + ds.class_labels[cls] + "'");
            continue;
        }
        class_sum += pair_sum / static_cast<double>(pairs);
        ++classes_used;
    }
    if (classes_used == 0) throw std::runtime_error("classwise_correlation: no class produced a defined value");
    return class_sum / static_cast<double>(classes_used);
}

struct MomentPair {
    double gamma;  // skewness
    double kappa;  // kurtosis, non-excess
};

/// gamma, kappa: per class, the plain mean over features of the Fisher-Pearson
/// skewness / non-excess kurtosis (population moments); classes are then
/// combined with class-proportion weights. Signed skewness is averaged as is.
inline MomentPair classwise_moments(const Dataset& ds, std::vector<std::string>* warnings = nullptr) {
    const std::size_t c = ds.n_classes();
    const auto counts = ds.class_counts();

    double gamma_acc = 0.0, kappa_acc = 0.0;
    double gamma_weight = 0.0, kappa_weight = 0.0;
    for (std::size_t cls = 0; cls < c; ++cls) {
        const std::size_t m = counts[cls];
        if (m < 3) {
            detail::warn(warnings, "classwise_moments: class '" + ds.class_labels[cls] +
                                       "' too small for skewness; skipped");
            continue;
        }
        double skew_sum = 0.0, kurt_sum = 0.0;
        std::size_t used = 0;
        for (std::size_t j = 0; j < ds.n_features(); ++j) {
            std::vector<double> v;
            v.reserve(m);
            for (std::size_t i = 0; i < ds.n_samples(); ++i)
                if (static_cast<std::size_t>(ds.y[i]) == cls) v.push_back(ds.X(i, j));
            const double mean = mean_of(v);
            double m2 = 0.0, m3 = 0.0, m4 = 0.0;
            for (double x : v) {
                const double dxx = x - mean;
                m2 += dxx * dxx;
                m3 += dxx * dxx * dxx;
                m4 += dxx * dxx * dxx * dxx;
            }
            const double inv = 1.0 / static_cast<double>(m);
            m2 *= inv;
            m3 *= inv;
            m4 *= inv;
            if (m2 <= 0.0) {
                detail::warn(warnings, "classwise_moments: feature '" + ds.feature_names[j] +
                                           "' degenerate in class '" + ds.class_labels[cls] + "'; skipped");
                continue;
            }
            skew_sum += m3 / std::pow(m2, 1.5);
            kurt_sum += m4 / (m2 * m2);
            ++used;
        }
        if (used == 0) continue;
        const double w = static_cast<double>(m);
        gamma_acc += w * (skew_sum / static_cast<double>(used));
        gamma_weight += w;
        if (m >= 4) {
            kappa_acc += w * (kurt_sum / static_cast<double>(used));
            kappa_weight += w;
        } else {
            detail::warn(warnings, "classwise_moments: class '" + ds.class_labels[cls] +
                                       "' too small for kurtosis; skipped");
        }
    }
    if (gamma_weight == 0.0 || kappa_weight == 0.0)
        throw std::runtime_error("classwise_moments: no class produced defined moments");
    return {gamma_acc / gamma_weight, kappa_acc / kappa_weight};
}

namespace detail {

// k-th nearest-neighbour distance of w[pos] within the sorted vector w,
// excluding the point itself. Window expansion: the k nearest in 1D are
// contiguous around pos.
inline double kth_neighbour_distance(const std::vector<double>& w, std::size_t pos, std::size_t k) {
    std::size_t lo = pos, hi = pos;
    double dist = 0.0;
    for (std::size_t step = 0; step < k; ++step) {
        const double left = lo > 0 ? w[pos] - w[lo - 1] : std::numeric_limits<double>::infinity();
        const double right = hi + 1 < w.size() ? w[hi + 1] - w[pos] : std::numeric_limits<double>::infinity();
        if (left <= right) {
            dist = left;
            --lo;
        } else {
            dist = right;
            ++hi;
        }
    }
    return dist;
}

// Plugin MI over equal-width bins; the fallback when a class is too small for
// the neighbour estimator.
inline double binned_mi(const std::vector<double>& x, const std::vector<int>& y, std::size_t n_classes) {
    const std::size_t n = x.size();
    const std::size_t bins = std::max<std::size_t>(2, std::min<std::size_t>(10, n / 2));
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return 0.0;
    const double width = (hi - lo) / static_cast<double>(bins);

    std::vector<std::vector<double>> joint(bins, std::vector<double>(n_classes, 0.0));
    std::vector<double> pb(bins, 0.0), pc(n_classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = static_cast<std::size_t>((x[i] - lo) / width);
        if (b >= bins) b = bins - 1;
        const auto cls = static_cast<std::size_t>(y[i]);
        joint[b][cls] += 1.0;
        pb[b] += 1.0;
        pc[cls] += 1.0;
    }
    double mi = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t b = 0; b < bins; ++b)
        for (std::size_t cls = 0; cls < n_classes; ++cls) {
            if (joint[b][cls] == 0.0) continue;
            const double pbc = joint[b][cls] * inv_n;
            mi += pbc * std::log(pbc / (pb[b] * inv_n * pc[cls] * inv_n));
        }
    return std::max(0.0, mi);
}

// Nearest-neighbour MI between one continuous feature and the discrete
// target (Kozachenko-Leonenko style, k neighbours within the same class,
// counts over the pooled sample).
inline double knn_mi_feature(std::vector<double> x, const std::vector<int>& y, std::size_t n_classes,
                             std::size_t k, Rng& rng) {
    const std::size_t n = x.size();
    double scale = 0.0;
    for (double v : x) scale += std::fabs(v);
    scale = scale > 0.0 ? scale / static_cast<double>(n) : 1.0;
    for (double& v : x) v += 1e-10 * scale * rng.normal();  // seeded tie-breaking jitter

    // same-class sorted views
    std::vector<std::vector<double>> by_class(n_classes);
    std::vector<std::size_t> class_count(n_classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        by_class[static_cast<std::size_t>(y[i])].push_back(x[i]);
        ++class_count[static_cast<std::size_t>(y[i])];
    }
    for (auto& v : by_class) std::sort(v.begin(), v.end());

    std::vector<double> all = x;
    std::sort(all.begin(), all.end());

    double psi_label = 0.0, psi_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto cls = static_cast<std::size_t>(y[i]);
        const auto& w = by_class[cls];
        const auto pos = static_cast<std::size_t>(std::lower_bound(w.begin(), w.end(), x[i]) - w.begin());
        const double r = kth_neighbour_distance(w, pos, k);

        // count points strictly closer than the k-th same-class neighbour;
        // comparisons are on distances, interval endpoints would round the
        // strictness away
        std::size_t m = 0;
        if (r > 0.0) {
            auto lo = std::lower_bound(all.begin(), all.end(), x[i] - r);
            while (lo != all.begin() && std::fabs(*(lo - 1) - x[i]) < r) --lo;
            while (lo != all.end() && std::fabs(*lo - x[i]) >= r) ++lo;
            auto hi = std::upper_bound(all.begin(), all.end(), x[i] + r);
            while (hi != all.end() && std::fabs(*hi - x[i]) < r) ++hi;
            while (hi != lo && std::fabs(*(hi - 1) - x[i]) >= r) --hi;
            m = static_cast<std::size_t>(hi - lo) - 1;  // minus self
        }
        psi_label += digamma(static_cast<double>(class_count[cls]));
        psi_m += digamma(static_cast<double>(m + 1));
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double mi = digamma(static_cast<double>(n)) + digamma(static_cast<double>(k)) -
                      psi_label * inv_n - psi_m * inv_n;
    return std::max(0.0, mi);
}

}  // namespace detail

/// eta: mean over features of the feature-target mutual information (nats),
/// nearest-neighbour estimator with k = 3. Classes smaller than k + 1 push
/// the feature onto a binned fallback.
inline double mutual_information(const Dataset& ds, std::uint64_t seed = 0,
                                 std::vector<std::string>* warnings = nullptr, std::size_t k = 3) {
    const auto counts = ds.class_counts();
    const bool need_fallback =
        std::any_of(counts.begin(), counts.end(), [&](std::size_t m) { return m < k + 1; });
    if (need_fallback)
        detail::warn(warnings, "mutual_information: class smaller than k+1; using binned estimator");

    double sum = 0.0;
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        const auto x = ds.X.col(j);
        if (need_fallback) {
            sum += detail::binned_mi(x, ds.y, ds.n_classes());
        } else {
            Rng rng = make_rng(derive_seed(seed, 0x6d69 + j));
            sum += detail::knn_mi_feature(x, ds.y, ds.n_classes(), k, rng);
        }
    }
    return sum / static_cast<double>(ds.n_features());
}

struct IntrinsicDim {
    std::size_t idim;
    double idim_ratio;
    double noise;
};

/// Principal components needed to reach `threshold` of the variance of the
/// z-scored feature matrix. For wide matrices (d > 512, n < d) the spectrum
/// comes from the n x n Gram matrix, which shares the nonzero eigenvalues.
inline IntrinsicDim intrinsic_dimensionality(const Dataset& ds, double threshold = 0.90) {
    const std::size_t n = ds.n_samples();
    const std::size_t d = ds.n_features();
    if (n < 2) throw std::invalid_argument("intrinsic_dimensionality: need n >= 2");

    const ScalerStats stats = fit_scaler(ds.X);
    if (std::all_of(stats.constant_column.begin(), stats.constant_column.end(), [](bool b) { return b; }))
        throw std::invalid_argument("intrinsic_dimensionality: all features constant");
    const Matrix xs = apply_scaler(ds.X, stats);

    std::vector<double> eig;
    const bool gram_trick = d > 512 && n < d;
    if (!gram_trick) {
        Matrix cov(d, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += xs(i, a) * xs(i, b);
                cov(a, b) = cov(b, a) = s / static_cast<double>(n);
            }
        eig = sym_eigen(SymmetricMatrix(std::move(cov))).values;
    } else {
        Matrix gram(n, n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < n; ++b) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += xs(a, j) * xs(b, j);
                gram(a, b) = gram(b, a) = s / static_cast<double>(n);
            }
        eig = sym_eigen(SymmetricMatrix(std::move(gram))).values;
        eig.resize(d, 0.0);  // remaining spectrum is exactly zero
    }

    double total = 0.0;
    for (double& v : eig) {
        if (v < 0.0) v = 0.0;  // roundoff
        total += v;
    }
    std::size_t idim = d;
    double cum = 0.0;
    for (std::size_t m = 0; m < eig.size(); ++m) {
        cum += eig[m];
        if (cum >= threshold * total) {
            idim = m + 1;
            break;
        }
    }
    const double ratio = static_cast<double>(idim) / static_cast<double>(d);
    return {idim, ratio, 1.0 - ratio};
}

struct DistanceStats {
    double mean;
    double std_dev;
};

/// Mean and population std of Euclidean pairwise distances; exact up to
/// 2000 samples, seeded random pairs (2e6) beyond that.
inline DistanceStats distance_stats(const Matrix& x, std::uint64_t seed = 0) {
    const std::size_t n = x.rows();
    if (n < 2) throw std::invalid_argument("distance_stats: need n >= 2");

    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t f = 0; f < x.cols(); ++f) {
            const double dv = x(i, f) - x(j, f);
            s += dv * dv;
        }
        return std::sqrt(s);
    };

    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    if (n <= 2000) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dv = dist(i, j);
                sum += dv;
                sum2 += dv * dv;
                ++count;
            }
    } else {
        Rng rng = make_rng(derive_seed(seed, 0xd157));
        constexpr std::size_t budget = 2'000'000;
        for (std::size_t t = 0; t < budget; ++t) {
            const auto i = static_cast<std::size_t>(rng.below(n));
            auto j = static_cast<std::size_t>(rng.below(n - 1));
            if (j >= i) ++j;
            const double dv = dist(i, j);
            sum += dv;
            sum2 += dv * dv;
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum2 / static_cast<double>(count) - mean * mean);
    return {mean, std::sqrt(var)};
}

inline DistanceStats distance_stats(const Dataset& ds, std::uint64_t seed = 0) {
    return distance_stats(ds.X, seed);
}

/// CI = 1 - H(p)/ln(c) over the classes present in `labels`; a single class
/// counts as fully imbalanced by convention.
inline double class_imbalance(const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("class_imbalance: empty input");
    std::vector<std::size_t> counts;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("class_imbalance: negative label code");
        if (static_cast<std::size_t>(l) >= counts.size()) counts.resize(static_cast<std::size_t>(l) + 1, 0);
        ++counts[static_cast<std::size_t>(l)];
    }
    std::size_t present = 0;
    for (std::size_t ct : counts)
        if (ct > 0) ++present;
    if (present == 1) return 1.0;

    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (std::size_t ct : counts) {
        if (ct == 0) continue;
        const double p = static_cast<double>(ct) / n;
        h -= p * std::log(p);
    }
    return 1.0 - h / std::log(static_cast<double>(present));
}

inline std::string profile_csv_header() {
    return "dataset_id,n,d,c,lambda,rho,gamma,kappa,eta,idim,idim_ratio,noise,mean_dist,std_dist,ci";
}

inline std::string profile_csv_row(const std::string& dataset_id, const MetricVector& m) {
    std::ostringstream os;
    os.precision(17);
    os << dataset_id << ',' << m.n << ',' << m.d << ',' << m.c << ',' << m.lambda << ',' << m.rho << ','
       << m.gamma << ',' << m.kappa << ',' << m.eta << ',' << m.idim << ',' << m.idim_ratio << ','
       << m.noise << ',' << m.mean_dist << ',' << m.std_dist << ',' << m.ci;
    return os.str();
}

/// Read back a CSV written with profile_csv_header/profile_csv_row.
inline std::map<std::string, MetricVector> read_profiles_csv(std::istream& in) {
    std::map<std::string, MetricVector> out;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_profiles_csv: empty input");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 15)
            throw std::runtime_error("read_profiles_csv: expected 15 fields on line " + std::to_string(line_no));
        MetricVector m;
        m.n = std::stoull(fields[1]);
        m.d = std::stoull(fields[2]);
        m.c = std::stoull(fields[3]);
        m.lambda = std::stod(fields[4]);
        m.rho = std::stod(fields[5]);
        m.gamma = std::stod(fields[6]);
        m.kappa = std::stod(fields[7]);
        m.eta = std::stod(fields[8]);
        m.idim = std::stoull(fields[9]);
        m.idim_ratio = std::stod(fields[10]);
        m.noise = std::stod(fields[11]);
        m.mean_dist = std::stod(fields[12]);
        m.std_dist = std::stod(fields[13]);
        m.ci = std::stod(fields[14]);
        out[fields[0]] = m;
    }
    return out;
}

/// Full Table-style profile. Scale-sensitive metrics (distances, PCA) see the
/// z-scored matrix; the rest are scale-invariant either way.
inline MetricVector profile(const Dataset& ds, std::uint64_t seed = 0,
                            std::vector<std::string>* warnings = nullptr) {
    const auto [std_ds, stats] = standardize(ds);

    MetricVector mv;
    const auto sm = simple_metrics(ds);
    mv.n = sm.n;
    mv.d = sm.d;
    mv.c = sm.c;
    mv.lambda = levene_lambda(std_ds, warnings);
    mv.rho = classwise_correlation(std_ds, warnings);
    const auto moments = classwise_moments(std_ds, warnings);
    mv.gamma = moments.gamma;
    mv.kappa = moments.kappa;
    mv.eta = mutual_information(std_ds, seed, warnings);
    const auto id = intrinsic_dimensionality(std_ds);
    mv.idim = id.idim;
    mv.idim_ratio = id.idim_ratio;
    mv.noise = id.noise;
    const auto dstats = distance_stats(std_ds.X, seed);
    mv.mean_dist = dstats.mean;
    mv.std_dist = dstats.std_dev;
    mv.ci = class_imbalance(ds.y);
    return mv;
}

}  // namespace genhull
