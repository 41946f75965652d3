#pragma once

/// @file
/// Near-diagonalizing conjugation on finite sections.
///
/// The off-diagonal part splits as A' = A_n + Ã_n (near and far from the
/// window around n). The generator K with K[j+l][j] = a_{n,l}(j) / d'_l(j),
/// d'_l(j) = d(j+l) - d(j), solves the commutator equation A_n = [D, K]; the
/// Hermitian generator is P_n = iK and the unitary e^{iP_n} is the real
/// orthogonal matrix exp(-K). The conjugated matrix is
/// B_n = exp(K) A exp(-K), and the module measures how far B_n is from
/// D + Ã_n against the commutator bounds.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bandspec/band_matrix.hpp"
#include "bandspec/cutoff.hpp"
#include "bandspec/dense.hpp"
#include "bandspec/eigensolver.hpp"
#include "bandspec/errors.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

/// Default section order for lab runs: n + 2 tau_n + 8m.
inline Index lab_order(const BandModel& model, Index n, const TauPolicy& tau) {
    return n + 2 * tau(n) + 8 * static_cast<Index>(model.bandwidth());
}

struct SplitPair {
    Eigen::MatrixXd near;  ///< A_n
    Eigen::MatrixXd far;   ///< Ã_n
    Index n = 0;
    Index tau_n = 0;
    Index order = 0;
};

namespace detail {

inline void require_window(const BandModel& model, Index n, Index tau_n, Index order,
                           const char* op) {
    if (order < n + 2 * tau_n + model.bandwidth()) {
        throw PreconditionError(std::string(op) + ": order " + std::to_string(order) +
                                " < n + 2 tau_n + m = " +
                                std::to_string(n + 2 * tau_n + model.bandwidth()));
    }
}

}  // namespace detail

inline SplitPair split_offdiagonal(const BandModel& model, Index n, const TauPolicy& tau,
                                   const CutoffFunction& chi, Index order) {
    SplitPair out;
    out.n = n;
    out.tau_n = tau(n);
    out.order = order;
    detail::require_window(model, n, out.tau_n, order, "split_offdiagonal");
    out.near = Eigen::MatrixXd::Zero(order, order);
    out.far = Eigen::MatrixXd::Zero(order, order);
    for (int l = 1; l <= model.bandwidth(); ++l) {
        for (Index j = 1; j + l <= order; ++j) {
            const auto [near, far] = cutoff_weights(model.a(l, j), chi, out.tau_n, n, j);
            out.near(j + l - 1, j - 1) = out.near(j - 1, j + l - 1) = near;
            out.far(j + l - 1, j - 1) = out.far(j - 1, j + l - 1) = far;
        }
    }
    return out;
}

/// D + Ã_n as a band matrix of order N.
inline SymmetricBandMatrix far_band_matrix(const BandModel& model, Index n, const TauPolicy& tau,
                                           const CutoffFunction& chi, Index order) {
    const Index tau_n = tau(n);
    SymmetricBandMatrix out(order, model.bandwidth());
    for (Index j = 1; j <= order; ++j) out.set(0, j, model.d(j));
    for (int l = 1; l <= model.bandwidth(); ++l) {
        for (Index j = 1; j + l <= order; ++j) {
            out.set(l, j, cutoff_weights(model.a(l, j), chi, tau_n, n, j).second);
        }
    }
    return out;
}

/// Entry K[j+l][j] = a_{n,l}(j) / d'_l(j) for the infinite operator, 0 where a_{n,l}(j) = 0.
inline double generator_entry(const BandModel& model, double near, int l, Index j) {
    if (near == 0.0) return 0.0;
    const double gap = model.d(j + l) - model.d(j);
    if (gap == 0.0) {
        throw DegenerateGapError("generator: d(j+l) - d(j) = 0 at (l, j) = (" + std::to_string(l) +
                                 ", " + std::to_string(j) + ")");
    }
    return near / gap;
}

inline SkewSymmetricGenerator generator(const BandModel& model, Index n, const TauPolicy& tau,
                                        const CutoffFunction& chi, Index order) {
    const Index tau_n = tau(n);
    detail::require_window(model, n, tau_n, order, "generator");
    SkewSymmetricGenerator k(order, model.bandwidth());
    for (int l = 1; l <= model.bandwidth(); ++l) {
        for (Index j = 1; j + l <= order; ++j) {
            const double near = cutoff_weights(model.a(l, j), chi, tau_n, n, j).first;
            k.set_lower(l, j, generator_entry(model, near, l, j));
        }
    }
    return k;
}

/// ||A_n - [D, K]||; zero up to rounding when K solves the commutator equation.
inline double commutator_residual(const Eigen::MatrixXd& near, const Eigen::VectorXd& diagonal,
                                  const SkewSymmetricGenerator& k) {
    const Eigen::MatrixXd kd = k.to_dense();
    const Eigen::MatrixXd commutator = diagonal.asDiagonal() * kd - kd * diagonal.asDiagonal();
    return spectral_norm_general(near - commutator);
}

/// Residual of the commutator equation; throws when it exceeds 1e-12 (1 + ||A_n||).
inline double verify_commutator_equation(const Eigen::MatrixXd& near,
                                         const Eigen::VectorXd& diagonal,
                                         const SkewSymmetricGenerator& k) {
    const double residual = commutator_residual(near, diagonal, k);
    const double allowed = 1e-12 * (1.0 + spectral_norm_general(near));
    if (!(residual <= allowed)) {
        throw NumericalError("verify_commutator_equation: residual " + std::to_string(residual) +
                             " exceeds " + std::to_string(allowed) + " (construction bug)");
    }
    return residual;
}

/// Window maxima over the near entries a_{n,l} and generator entries p_{n,l}
/// (|p_{n,l}| = |K[j+l][j]|), with the zero extension at indices <= 0.
///   alpha_{n,s}(j)  = max_{l,|i|<=s} |a_{n,l}(j+i)|      beta_{n,s}(j)  likewise for p
///   alpha'_{n,s}(j) = max_{l,|i|<=s} |(Δa_{n,l})(j+i)|   beta'_{n,s}(j) likewise for p
///   rho_{n,s}(j)    = alpha_{n,s} beta'_{n,s} + alpha'_{n,s} beta_{n,s}
class CommutatorStats {
public:
    CommutatorStats(BandModel model, Index n, const TauPolicy& tau, CutoffFunction chi, Index s)
        : model_(std::move(model)), n_(n), tau_n_(tau(n)), chi_(std::move(chi)), s_(s) {
        if (s < 0) throw PreconditionError("commutator_stats: s must be >= 0");
    }

    Index n() const noexcept { return n_; }
    Index s() const noexcept { return s_; }
    Index tau_n() const noexcept { return tau_n_; }

    double near(int l, Index j) const {
        if (j < 1) return 0.0;
        return cutoff_weights(model_.a(l, j), chi_, tau_n_, n_, j).first;
    }
    double p(int l, Index j) const {
        if (j < 1) return 0.0;
        return generator_entry(model_, near(l, j), l, j);
    }

    double alpha(Index j) const { return window_max(j, [&](int l, Index x) { return near(l, x); }); }
    double beta(Index j) const { return window_max(j, [&](int l, Index x) { return p(l, x); }); }
    double alpha_prime(Index j) const {
        return window_max(j, [&](int l, Index x) { return near(l, x + 1) - near(l, x); });
    }
    double beta_prime(Index j) const {
        return window_max(j, [&](int l, Index x) { return p(l, x + 1) - p(l, x); });
    }

    static double combine(double alpha, double beta, double alpha_prime, double beta_prime) {
        return alpha * beta_prime + alpha_prime * beta;
    }

    double rho(Index j) const { return combine(alpha(j), beta(j), alpha_prime(j), beta_prime(j)); }

    /// sup of rho over |j - n| <= 2 tau_n + 4m.
    double rho_window_sup() const {
        const Index radius = 2 * tau_n_ + 4 * model_.bandwidth();
        double out = 0.0;
        for (Index j = n_ - radius; j <= n_ + radius; ++j) out = std::max(out, rho(j));
        return out;
    }

private:
    template <class F>
    double window_max(Index j, F value) const {
        double out = 0.0;
        for (Index i = -s_; i <= s_; ++i) {
            for (int l = 1; l <= model_.bandwidth(); ++l) out = std::max(out, std::abs(value(l, j + i)));
        }
        return out;
    }

    BandModel model_;
    Index n_;
    Index tau_n_;
    CutoffFunction chi_;
    Index s_;
};

inline CommutatorStats commutator_stats(const BandModel& model, Index n, const TauPolicy& tau,
                                        const CutoffFunction& chi, Index s) {
    return CommutatorStats(model, n, tau, chi, s);
}

struct ConjugationReport {
    Index n = 0;
    Index order = 0;
    Index tau_n = 0;
    double commutator_residual = 0.0;
    double conj_error = 0.0;  ///< ||B_n - (D + Ã_n)||
    double conj_error_bound = 0.0;  ///< ||[P_n, Ã_n]|| + ||[P_n, A_n]|| / 2
    double comm_norm = 0.0;  ///< ||[A_n, P_n]||
    double comm_bound = 0.0;  ///< 10 m^3 sup rho_{n,4m}
    double lambda_n_of_split = 0.0;  ///< lambda_n(D + Ã_n)
    double d_n = 0.0;
    double norm_a = 0.0;               ///< ||A_N||
    double spectrum_deviation = 0.0;   ///< max_k |lambda_k(B_n) - lambda_k(A_N)|
    double offdiag_mass_a = 0.0;       ///< max row off-diagonal l2 mass of A_N, |j-n| <= tau_n/2
    double offdiag_mass_b = 0.0;       ///< same for B_n

    static constexpr double slack = 1e-9;

    bool conjugation_bound_holds() const { return conj_error <= conj_error_bound + slack * (1.0 + conj_error_bound); }
    bool commutator_bound_holds() const { return comm_norm <= comm_bound + slack * (1.0 + comm_bound); }
};

namespace detail {

inline double window_offdiag_mass(const Eigen::MatrixXd& x, Index n, Index radius) {
    double out = 0.0;
    const Index order = x.rows();
    for (Index j = std::max<Index>(1, n - radius); j <= std::min(order, n + radius); ++j) {
        const double row = x.row(j - 1).squaredNorm() - x(j - 1, j - 1) * x(j - 1, j - 1);
        out = std::max(out, std::sqrt(std::max(0.0, row)));
    }
    return out;
}

}  // namespace detail

/// Conjugates the section of order N and fills every report field without
/// judging the two inequalities.
inline ConjugationReport conjugation_report(const BandModel& model, Index n, const TauPolicy& tau,
                                            const CutoffFunction& chi, Index order) {
    const int m = model.bandwidth();
    ConjugationReport r;
    r.n = n;
    r.order = order;
    r.tau_n = tau(n);
    r.d_n = model.d(n);

    const SplitPair split = split_offdiagonal(model, n, tau, chi, order);
    const SkewSymmetricGenerator k = generator(model, n, tau, chi, order);
    const SymmetricBandMatrix a_band = truncate(model, order);
    const Eigen::MatrixXd a = a_band.to_dense();
    const Eigen::VectorXd diagonal = a.diagonal();

    r.commutator_residual = verify_commutator_equation(split.near, diagonal, k);

    const Eigen::MatrixXd q = orthogonal_exponential(k);  // exp(-K)
    const Eigen::MatrixXd b = q.transpose() * a * q;
    const Eigen::MatrixXd kd = k.to_dense();
    Eigen::MatrixXd d_plus_far = split.far;
    d_plus_far.diagonal() += diagonal;

    r.conj_error = spectral_norm_general(b - d_plus_far);
    r.conj_error_bound = spectral_norm_general(kd * split.far - split.far * kd) +
                0.5 * spectral_norm_general(kd * split.near - split.near * kd);
    r.comm_norm = spectral_norm_general(split.near * kd - kd * split.near);
    r.comm_bound = 10.0 * m * m * m * commutator_stats(model, n, tau, chi, 4 * m).rho_window_sup();

    r.lambda_n_of_split =
        eigenvalues(far_band_matrix(model, n, tau, chi, order), {n, n}).eigenvalues.front();

    const auto spec_a = eigenvalues(a_band).eigenvalues;
    const auto spec_b = dense_symmetric_eigenvalues(0.5 * (b + b.transpose()));
    for (std::size_t i = 0; i < spec_a.size(); ++i) {
        r.spectrum_deviation = std::max(r.spectrum_deviation, std::abs(spec_a[i] - spec_b[i]));
    }
    r.norm_a = std::max(std::abs(spec_a.front()), std::abs(spec_a.back()));

    const Index radius = r.tau_n / 2;
    r.offdiag_mass_a = detail::window_offdiag_mass(a, n, radius);
    r.offdiag_mass_b = detail::window_offdiag_mass(b, n, radius);

    return r;
}

/// As conjugation_report, but throws PropertyViolation if either commutator
/// inequality fails beyond a 1e-9 relative slack.
inline ConjugationReport conjugate_and_report(const BandModel& model, Index n, const TauPolicy& tau,
                                              const CutoffFunction& chi, Index order) {
    const ConjugationReport r = conjugation_report(model, n, tau, chi, order);
    if (!r.conjugation_bound_holds()) {
        throw PropertyViolation("conjugate_and_report: ||B_n - (D + Ã_n)|| = " +
                                std::to_string(r.conj_error) + " exceeds commutator bound " +
                                std::to_string(r.conj_error_bound) + " at n = " + std::to_string(n));
    }
    if (!r.commutator_bound_holds()) {
        throw PropertyViolation("conjugate_and_report: ||[A_n, P_n]|| = " +
                                std::to_string(r.comm_norm) + " exceeds 10 m^3 sup rho_{n,4m} = " +
                                std::to_string(r.comm_bound) + " at n = " + std::to_string(n));
    }
    return r;
}

struct SplitEigenvalueCheck {
    double lambda_n_split = 0.0;  ///< n-th eigenvalue of D + Ã_n
    double d_n = 0.0;
    double gap_to_neighbors = 0.0;  ///< distance from d(n) to the nearest other eigenvalue
};

/// Whether d(n) is the n-th eigenvalue of D + Ã_n on the section of order N.
inline SplitEigenvalueCheck split_eigenvalue_check(const BandModel& model, Index n, const TauPolicy& tau,
                                  const CutoffFunction& chi, Index order) {
    if (n < 1 || n >= order) throw PreconditionError("split_eigenvalue_check: need 1 <= n < N");
    const Index first = std::max<Index>(1, n - 1);
    const auto ev =
        eigenvalues(far_band_matrix(model, n, tau, chi, order), {first, n + 1}).eigenvalues;
    SplitEigenvalueCheck out;
    out.d_n = model.d(n);
    out.lambda_n_split = ev[static_cast<std::size_t>(n - first)];
    out.gap_to_neighbors = std::abs(ev.back() - out.d_n);
    if (n > 1) out.gap_to_neighbors = std::min(out.gap_to_neighbors, std::abs(out.d_n - ev.front()));
    return out;
}

}  // namespace bandspec
