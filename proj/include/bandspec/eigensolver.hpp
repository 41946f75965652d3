#pragma once

/// @file
/// Symmetric banded eigensolver.
///
/// The band is reduced to tridiagonal form by Givens rotations with bulge
/// chasing (an orthogonal similarity), after which eigenvalues come either
/// from Sturm-sequence bisection (selected indices) or from implicit QL with
/// Wilkinson-type shifts (full spectrum).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bandspec/band_matrix.hpp"
#include "bandspec/errors.hpp"
#include "bandspec/model.hpp"
#include "bandspec/parallel.hpp"

namespace bandspec {

struct Tridiagonal {
    std::vector<double> diag;  ///< N entries
    std::vector<double> off;   ///< N-1 entries, off[i] couples i and i+1 (0-based)

    std::size_t size() const noexcept { return diag.size(); }
};

struct SpectralSummary {
    std::vector<double> eigenvalues;  ///< ascending
    std::string method;
    /// Relative a priori accuracy of the solver, in units of the matrix norm.
    double residual_bound = 0.0;
    /// 1-based index of eigenvalues.front() within the full spectrum.
    Index first_index = 1;
};

/// Inclusive 1-based range of eigenvalue indices.
struct IndexRange {
    Index first = 1;
    Index last = 1;
};

namespace detail {

/// Lower-band workspace with one extra band to hold the chased bulge.
class BandWorkspace {
public:
    explicit BandWorkspace(const SymmetricBandMatrix& m)
        : n_(m.order()), width_(m.bandwidth() + 1),
          data_(static_cast<std::size_t>((width_ + 1) * n_), 0.0) {
        for (int k = 0; k <= m.bandwidth(); ++k) {
            const auto& band = m.band(k);
            for (std::size_t j = 0; j < band.size(); ++j) at(static_cast<Index>(j) + k, static_cast<Index>(j)) = band[j];
        }
    }

    /// Reference to entry (r, c), 0-based, 0 <= r - c <= width.
    double& at(Index r, Index c) { return data_[static_cast<std::size_t>((r - c) * n_ + c)]; }

    double get(Index r, Index c) const {
        if (r < c) std::swap(r, c);
        if (r - c > width_ || r >= n_ || c < 0) return 0.0;
        return data_[static_cast<std::size_t>((r - c) * n_ + c)];
    }

    /// Similarity by the plane rotation G acting on rows/columns p and p+1:
    /// row_p <- c row_p + s row_q, row_q <- -s row_p + c row_q.
    void rotate(Index p, double c, double s) {
        const Index q = p + 1;
        for (Index x = std::max<Index>(0, q - width_); x < p; ++x) {
            const double u = p - x <= width_ ? at(p, x) : 0.0;
            const double v = at(q, x);
            if (p - x <= width_) at(p, x) = c * u + s * v;
            at(q, x) = -s * u + c * v;
        }
        for (Index x = q + 1; x <= std::min(n_ - 1, p + width_); ++x) {
            const double u = at(x, p);
            const double v = x - q <= width_ ? at(x, q) : 0.0;
            at(x, p) = c * u + s * v;
            if (x - q <= width_) at(x, q) = -s * u + c * v;
        }
        const double app = at(p, p), aqq = at(q, q), aqp = at(q, p);
        at(p, p) = c * c * app + 2.0 * c * s * aqp + s * s * aqq;
        at(q, q) = s * s * app - 2.0 * c * s * aqp + c * c * aqq;
        at(q, p) = (c * c - s * s) * aqp + c * s * (aqq - app);
    }

    /// Rotates in plane (r-1, r) so that entry (r, col) becomes zero.
    void annihilate(Index r, Index col) {
        const double u = at(r - 1, col), v = at(r, col);
        const double h = std::hypot(u, v);
        if (h == 0.0) return;
        rotate(r - 1, u / h, v / h);
        at(r, col) = 0.0;
    }

    Index order() const noexcept { return n_; }

private:
    Index n_;
    Index width_;
    std::vector<double> data_;
};

}  // namespace detail

/// Orthogonal similarity reduction of a symmetric band matrix to tridiagonal form.
inline Tridiagonal reduce_to_tridiagonal(const SymmetricBandMatrix& matrix) {
    const Index n = matrix.order();
    const int m = matrix.bandwidth();
    Tridiagonal t;
    if (m <= 1) {
        t.diag = matrix.band(0);
        t.off = m == 1 ? matrix.band(1) : std::vector<double>(static_cast<std::size_t>(n - 1), 0.0);
        return t;
    }
    detail::BandWorkspace w(matrix);
    for (Index col = 0; col + 2 < n; ++col) {
        for (Index dist = std::min<Index>(m, n - 1 - col); dist >= 2; --dist) {
            Index r = col + dist;
            if (w.at(r, col) == 0.0) continue;
            w.annihilate(r, col);
            // The rotation in plane (r-1, r) leaves a bulge at (r+m, r-1); chase it off the end.
            Index bulge_col = r - 1;
            Index bulge_row = r + m;
            while (bulge_row < n) {
                if (w.at(bulge_row, bulge_col) == 0.0) break;
                w.annihilate(bulge_row, bulge_col);
                bulge_col = bulge_row - 1;
                bulge_row += m;
            }
        }
    }
    t.diag.resize(static_cast<std::size_t>(n));
    t.off.resize(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        t.diag[static_cast<std::size_t>(i)] = w.at(i, i);
        if (i + 1 < n) t.off[static_cast<std::size_t>(i)] = w.at(i + 1, i);
    }
    return t;
}

/// Sturm-sequence counter: number of eigenvalues of T strictly below x.
class SturmCounter {
public:
    explicit SturmCounter(const Tridiagonal& t) : t_(&t), off2_(t.off.size()) {
        double max_off2 = 1.0;
        for (std::size_t i = 0; i < t.off.size(); ++i) {
            off2_[i] = t.off[i] * t.off[i];
            max_off2 = std::max(max_off2, off2_[i]);
        }
        pivmin_ = std::numeric_limits<double>::min() * max_off2;
    }

    Index operator()(double x) const {
        const auto& d = t_->diag;
        Index count = 0;
        double q = d[0] - x;
        if (q == 0.0) q = -pivmin_;
        if (q < 0.0) ++count;
        for (std::size_t i = 1; i < d.size(); ++i) {
            q = (d[i] - x) - off2_[i - 1] / q;
            if (q == 0.0) q = -pivmin_;
            if (q < 0.0) ++count;
        }
        return count;
    }

private:
    const Tridiagonal* t_;
    std::vector<double> off2_;
    double pivmin_;
};

inline std::pair<double, double> gershgorin(const Tridiagonal& t) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.off[i]) : 0.0);
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
    const double pad = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) +
                       std::numeric_limits<double>::min();
    return {lo - pad, hi + pad};
}

/// Bisection iteration cap; never reached for finite input (each step
/// halves the bracket and doubles have finite resolution).
inline constexpr int kBisectionCap = 4096;

/// k-th smallest eigenvalue (1-based) of T, bisected down to adjacent
/// floating-point neighbours. A zero pivot counts as negative, so count(x)
/// includes an eigenvalue sitting exactly at x and `hi` lands on it whenever
/// the count is exact (a diagonal T returns its entries bit for bit).
inline double bisect_eigenvalue(const SturmCounter& count, Index k, double lo, double hi) {
    for (int it = 0; it < kBisectionCap; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (!(mid > lo && mid < hi)) return hi;
        if (count(mid) >= k) hi = mid;
        else lo = mid;
    }
    throw NumericalError("bisect_eigenvalue: iteration cap exceeded for index " + std::to_string(k),
                         {lo, hi});
}

/// Eigenvalues first..last (1-based, ascending) of T by bisection.
inline std::vector<double> tridiagonal_bisection(const Tridiagonal& t, IndexRange range,
                                                 unsigned threads = 1) {
    const Index n = static_cast<Index>(t.size());
    if (range.first < 1 || range.last > n || range.first > range.last) {
        throw PreconditionError("eigenvalues: index range [" + std::to_string(range.first) + ", " +
                                std::to_string(range.last) + "] outside 1.." + std::to_string(n));
    }
    const SturmCounter count(t);
    const auto [lo, hi] = gershgorin(t);
    const auto total = static_cast<std::size_t>(range.last - range.first + 1);
    std::vector<double> out(total);
    // Every index starts from the same Gershgorin bracket, so the result does
    // not depend on how indices are split across threads.
    parallel_for(total, threads, [&](std::size_t i) {
        out[i] = bisect_eigenvalue(count, range.first + static_cast<Index>(i), lo, hi);
    });
    return out;
}

inline constexpr int kQlIterationsPerEigenvalue = 50;

/// All eigenvalues of T by implicit QL, ascending.
inline std::vector<double> tridiagonal_ql(const Tridiagonal& t) {
    const std::size_t n = t.size();
    std::vector<double> d = t.diag;
    std::vector<double> e(n, 0.0);
    std::copy(t.off.begin(), t.off.end(), e.begin());
    constexpr double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t l = 0; l < n; ++l) {
        int iterations = 0;
        std::size_t mm = l;
        do {
            for (mm = l; mm + 1 < n; ++mm) {
                const double dd = std::abs(d[mm]) + std::abs(d[mm + 1]);
                if (std::abs(e[mm]) <= eps * dd) break;
            }
            if (mm == l) break;
            if (++iterations > kQlIterationsPerEigenvalue) {
                std::vector<double> partial(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(l));
                std::sort(partial.begin(), partial.end());
                throw NumericalError("tridiagonal_ql: no convergence for eigenvalue " +
                                         std::to_string(l + 1) + " after " +
                                         std::to_string(kQlIterationsPerEigenvalue) + " iterations",
                                     std::move(partial));
            }
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[mm] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool underflow = false;
            for (std::size_t i = mm; i-- > l;) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        } while (mm != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

/// Full spectrum of a symmetric band matrix.
inline SpectralSummary eigenvalues(const SymmetricBandMatrix& matrix) {
    const Tridiagonal t = reduce_to_tridiagonal(matrix);
    SpectralSummary out;
    out.eigenvalues = tridiagonal_ql(t);
    out.method = matrix.bandwidth() > 1 ? "band-to-tridiagonal (Givens) + implicit QL"
                                        : "tridiagonal implicit QL";
    out.residual_bound = static_cast<double>(matrix.order()) * std::numeric_limits<double>::epsilon();
    return out;
}

/// Eigenvalues with indices in `range` (1-based, ascending).
inline SpectralSummary eigenvalues(const SymmetricBandMatrix& matrix, IndexRange range,
                                   unsigned threads = 1) {
    const Tridiagonal t = reduce_to_tridiagonal(matrix);
    SpectralSummary out;
    out.eigenvalues = tridiagonal_bisection(t, range, threads);
    out.first_index = range.first;
    out.method = matrix.bandwidth() > 1 ? "band-to-tridiagonal (Givens) + Sturm bisection"
                                        : "tridiagonal Sturm bisection";
    out.residual_bound = 4.0 * std::numeric_limits<double>::epsilon() *
                         std::max<double>(1.0, static_cast<double>(matrix.bandwidth()));
    return out;
}

/// Largest |eigenvalue|.
inline double spectral_norm(const SymmetricBandMatrix& matrix) {
    const Tridiagonal t = reduce_to_tridiagonal(matrix);
    const auto n = static_cast<Index>(t.size());
    const auto lo = tridiagonal_bisection(t, {1, 1});
    const auto hi = tridiagonal_bisection(t, {n, n});
    return std::max(std::abs(lo.front()), std::abs(hi.front()));
}

struct StabilityResult {
    bool stable = false;
    double delta = 0.0;
    double lambda = 0.0;  ///< lambda_n(A_N)
};

inline bool stable_pair(double at_n, double at_2n, double rel_tol) {
    return std::abs(at_2n - at_n) <= rel_tol * (1.0 + std::abs(at_n));
}

/// Compares lambda_n of the sections of order N and 2N.
inline StabilityResult truncation_stability(const BandModel& model, Index n, Index order,
                                            double rel_tol = 1e-8) {
    if (n < 1 || 2 * n > order) {
        throw PreconditionError("truncation_stability: need 1 <= n <= N/2, got n = " +
                                std::to_string(n) + ", N = " + std::to_string(order));
    }
    const double small = eigenvalues(truncate(model, order), {n, n}).eigenvalues.front();
    const double large = eigenvalues(truncate(model, 2 * order), {n, n}).eigenvalues.front();
    return {stable_pair(small, large, rel_tol), std::abs(large - small), small};
}

/// lambda_first..lambda_last of A_N together with per-index stability flags
/// from the doubling test.
struct StableEigenvalues {
    Index first = 1;
    std::vector<double> lambda;         ///< from A_N
    std::vector<double> lambda_double;  ///< from A_2N
    std::vector<bool> stable;
};

inline StableEigenvalues stable_eigenvalues(const BandModel& model, IndexRange range, Index order,
                                            double rel_tol = 1e-8, unsigned threads = 1) {
    if (range.first < 1 || 2 * range.last > order) {
        throw PreconditionError("stable_eigenvalues: need max index <= N/2, got " +
                                std::to_string(range.last) + " with N = " + std::to_string(order));
    }
    StableEigenvalues out;
    out.first = range.first;
    out.lambda = eigenvalues(truncate(model, order), range, threads).eigenvalues;
    out.lambda_double = eigenvalues(truncate(model, 2 * order), range, threads).eigenvalues;
    out.stable.resize(out.lambda.size());
    for (std::size_t i = 0; i < out.lambda.size(); ++i) {
        out.stable[i] = stable_pair(out.lambda[i], out.lambda_double[i], rel_tol);
    }
    return out;
}

}  // namespace bandspec
