#pragma once

/// @file
/// Dense workspaces: symmetric matrices, the cyclic Jacobi eigenvalue oracle,
/// spectral norms of general square matrices, and the orthogonal exponential
/// of a banded skew-symmetric generator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bandspec/band_matrix.hpp"
#include "bandspec/eigensolver.hpp"
#include "bandspec/errors.hpp"

namespace bandspec {

class DenseSymmetricMatrix {
public:
    explicit DenseSymmetricMatrix(Eigen::MatrixXd entries) : a_(std::move(entries)) {
        if (a_.rows() != a_.cols()) throw PreconditionError("DenseSymmetricMatrix: not square");
        if (!a_.allFinite()) throw NumericalError("DenseSymmetricMatrix: non-finite entry");
        const double scale = a_.size() == 0 ? 0.0 : a_.cwiseAbs().maxCoeff();
        const double asym = a_.size() == 0 ? 0.0 : (a_ - a_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * scale) {
            throw PreconditionError("DenseSymmetricMatrix: asymmetry " + std::to_string(asym) +
                                    " exceeds 1e-12 * max|entry|");
        }
    }

    explicit DenseSymmetricMatrix(const SymmetricBandMatrix& band)
        : DenseSymmetricMatrix(band.to_dense()) {}

    Index order() const noexcept { return a_.rows(); }
    const Eigen::MatrixXd& entries() const noexcept { return a_; }

private:
    Eigen::MatrixXd a_;
};

inline constexpr int kJacobiSweepCap = 100;

/// Eigenvalues by cyclic two-sided Jacobi rotations, iterated until the
/// off-diagonal Frobenius mass is at most 1e-14 ||M||_F. Shares no code with
/// the banded solver.
inline SpectralSummary eigenvalues_dense_oracle(const DenseSymmetricMatrix& matrix) {
    const Index n = matrix.order();
    if (n > 2000) throw PreconditionError("eigenvalues_dense_oracle: order above 2000");
    Eigen::MatrixXd a = matrix.entries();
    const double norm_f = a.norm();
    const double target = 1e-14 * norm_f;

    auto off_mass = [&] {
        double s = 0.0;
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    while (off_mass() > target) {
        if (++sweep > kJacobiSweepCap) {
            std::vector<double> partial(static_cast<std::size_t>(n));
            for (Index i = 0; i < n; ++i) partial[static_cast<std::size_t>(i)] = a(i, i);
            std::sort(partial.begin(), partial.end());
            throw NumericalError("eigenvalues_dense_oracle: sweep cap exceeded", std::move(partial));
        }
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::abs(theta) > 1e150
                                     ? 0.5 / theta
                                     : std::copysign(1.0, theta) /
                                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (Index k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double g = a(k, p), h = a(k, q);
                    a(k, p) = a(p, k) = c * g - s * h;
                    a(k, q) = a(q, k) = s * g + c * h;
                }
            }
        }
    }
    SpectralSummary out;
    out.eigenvalues.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out.eigenvalues[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
    out.method = "cyclic Jacobi";
    out.residual_bound = 1e-14;
    return out;
}

/// Ascending eigenvalues of a dense symmetric matrix (Eigen's self-adjoint solver).
inline std::vector<double> dense_symmetric_eigenvalues(const Eigen::MatrixXd& symmetric) {
    if (symmetric.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("dense_symmetric_eigenvalues: solver did not converge");
    }
    const auto& v = solver.eigenvalues();
    return {v.data(), v.data() + v.size()};
}

inline double spectral_norm(const DenseSymmetricMatrix& matrix) {
    const auto ev = dense_symmetric_eigenvalues(matrix.entries());
    return ev.empty() ? 0.0 : std::max(std::abs(ev.front()), std::abs(ev.back()));
}

/// Spectral norm of an arbitrary square matrix: sqrt of the top eigenvalue
/// of its Gram matrix.
inline double spectral_norm_general(const Eigen::MatrixXd& matrix) {
    if (matrix.size() == 0) return 0.0;
    const double scale = matrix.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    // Scaling keeps the Gram matrix away from overflow.
    const Eigen::MatrixXd x = matrix / scale;
    const Eigen::MatrixXd gram = x.transpose() * x;
    const auto ev = dense_symmetric_eigenvalues(0.5 * (gram + gram.transpose()));
    return scale * std::sqrt(std::max(0.0, ev.back()));
}

/// Real skew-symmetric generator of bandwidth <= m in lower-band storage:
/// K[j+l][j] stored, K[j][j+l] = -K[j+l][j], zero diagonal.
class SkewSymmetricGenerator {
public:
    SkewSymmetricGenerator(Index order, int bandwidth) : n_(order), m_(bandwidth) {
        if (bandwidth < 1 || order <= bandwidth) {
            throw PreconditionError("SkewSymmetricGenerator: need order > bandwidth >= 1");
        }
        bands_.resize(static_cast<std::size_t>(m_));
        for (int l = 1; l <= m_; ++l) bands_[static_cast<std::size_t>(l - 1)].assign(
            static_cast<std::size_t>(n_ - l), 0.0);
    }

    Index order() const noexcept { return n_; }
    int bandwidth() const noexcept { return m_; }

    /// Lower entry K[j+l][j], 1-based j.
    double lower(int l, Index j) const {
        return bands_.at(static_cast<std::size_t>(l - 1)).at(static_cast<std::size_t>(j - 1));
    }
    void set_lower(int l, Index j, double value) {
        if (!std::isfinite(value)) {
            throw NumericalError("SkewSymmetricGenerator: non-finite entry at (l, j) = (" +
                                 std::to_string(l) + ", " + std::to_string(j) + ")");
        }
        bands_.at(static_cast<std::size_t>(l - 1)).at(static_cast<std::size_t>(j - 1)) = value;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n_, n_);
        for (int l = 1; l <= m_; ++l) {
            for (Index j = 1; j + l <= n_; ++j) {
                const double v = lower(l, j);
                k(j + l - 1, j - 1) = v;
                k(j - 1, j + l - 1) = -v;
            }
        }
        return k;
    }

private:
    Index n_;
    int m_;
    std::vector<std::vector<double>> bands_;
};

inline double orthogonality_defect(const Eigen::MatrixXd& q) {
    const Eigen::MatrixXd defect = q.transpose() * q - Eigen::MatrixXd::Identity(q.rows(), q.cols());
    const double frob = defect.norm();
    // Frobenius bounds the spectral norm from above; refine only when it matters.
    return frob <= 1e-13 ? frob : spectral_norm_general(defect);
}

/// Q = exp(-K) by scaling and squaring: the generator is scaled by 2^-s so
/// that its Frobenius norm is at most 0.5, exponentiated by a Taylor series
/// truncated at machine precision, and squared s times.
inline Eigen::MatrixXd orthogonal_exponential(const SkewSymmetricGenerator& generator) {
    const Index n = generator.order();
    if (n > 2000) throw PreconditionError("orthogonal_exponential: order above 2000");
    Eigen::MatrixXd x = -generator.to_dense();
    const double norm = x.norm();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    x /= std::ldexp(1.0, squarings);

    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int k = 1; k <= 30; ++k) {
        term = term * x / static_cast<double>(k);
        q += term;
        if (term.norm() <= eps) break;
    }
    for (int i = 0; i < squarings; ++i) q = q * q;

    const double defect = orthogonality_defect(q);
    if (!(defect <= 1e-12)) {
        throw NumericalError("orthogonal_exponential: orthogonality defect " +
                             std::to_string(defect) + " exceeds 1e-12");
    }
    return q;
}

}  // namespace bandspec
