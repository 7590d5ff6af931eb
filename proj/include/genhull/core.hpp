#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace genhull {

/// Dense row-major matrix of doubles; the carrier type for samples x features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw std::invalid_argument("Matrix::from_rows: ragged input");
            std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * m.cols_));
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> col(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, c);
        return out;
    }

    Matrix take_rows(const std::vector<std::size_t>& idx) const {
        Matrix m(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= rows_) throw std::out_of_range("Matrix::take_rows: index out of range");
            std::copy(row(idx[i]).begin(), row(idx[i]).end(), m.row(i).begin());
        }
        return m;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Matrix& o) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Seeded PRNG with fully pinned-down sampling algorithms (mt19937_64 stream,
/// Marsaglia polar normals, rejection-sampled bounded ints) so identical seeds
/// give identical streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1].
    double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t bound = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
        std::uint64_t x;
        do { x = engine_(); } while (x >= bound);
        return x % n;
    }

    /// Standard normal via the polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    /// Independent child stream; used to hand each parallel task its own seed.
    Rng derive(std::uint64_t tag) const {
        return Rng(detail::splitmix64(seed_mix_ ^ detail::splitmix64(tag)));
    }

    static Rng with_mix(std::uint64_t seed) {
        Rng r(detail::splitmix64(seed));
        r.seed_mix_ = seed;
        return r;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_mix_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Make the canonical project RNG for a user-facing seed.
inline Rng make_rng(std::uint64_t seed) { return Rng(detail::splitmix64(seed)); }

/// Derive a fresh seed for subtask `tag` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return detail::splitmix64(detail::splitmix64(seed) ^ (0x517cc1b727220a95ULL * (tag + 1)));
}

struct ParseError : std::runtime_error {
    ParseError(std::string msg, std::size_t line, std::size_t column)
        : std::runtime_error(std::move(msg) + " (line " + std::to_string(line) +
                             ", column " + std::to_string(column) + ")"),
          line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

struct HttpError : std::runtime_error {
    HttpError(std::string msg, int status)
        : std::runtime_error(std::move(msg) + " (HTTP status " + std::to_string(status) + ")"),
          status(status) {}
    int status;
};

/// Raised when the LP solver hits its iteration cap; a membership query must
/// surface this instead of guessing a side.
struct SolverIndeterminate : std::runtime_error {
    explicit SolverIndeterminate(std::string msg) : std::runtime_error(std::move(msg)) {}
};

/// Run fn(i) for i in [0, n); results land wherever fn writes them, so output
/// is identical for any job count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (n == 0) return;
    if (jobs <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += jobs) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline double mean_of(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean_of: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Population variance (divide by n).
inline double population_variance(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace genhull
