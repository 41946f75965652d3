#pragma once

/// @file
/// Residual series lambda_n - d(n), log-log rate fits, rate verdicts for the
/// power-like and special families, and singular values of non-symmetric
/// Jacobi matrices through their pentadiagonal Gram operator J^T J.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bandspec/band_matrix.hpp"
#include "bandspec/dense.hpp"
#include "bandspec/eigensolver.hpp"
#include "bandspec/errors.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

struct ResidualEntry {
    Index n = 0;
    double lambda_n = 0.0;
    double d_n = 0.0;
    double residual = 0.0;  ///< lambda_n - d_n
    bool stable = false;
};

struct ResidualSeries {
    std::vector<ResidualEntry> entries;
    std::string model_label;
    Index order = 0;
};

inline ResidualSeries residual_series(const BandModel& model, Index first, Index last, Index order,
                                      double stability_rel_tol = 1e-8, unsigned threads = 1) {
    if (first < 1 || last < first) throw PreconditionError("residual_series: invalid index range");
    if (2 * last > order) {
        throw PreconditionError("residual_series: max index " + std::to_string(last) +
                                " exceeds N/2 with N = " + std::to_string(order));
    }
    const auto ev = stable_eigenvalues(model, {first, last}, order, stability_rel_tol, threads);
    ResidualSeries out;
    out.model_label = model.label();
    out.order = order;
    for (std::size_t i = 0; i < ev.lambda.size(); ++i) {
        ResidualEntry e;
        e.n = first + static_cast<Index>(i);
        e.lambda_n = ev.lambda[i];
        e.d_n = model.d(e.n);
        e.residual = e.lambda_n - e.d_n;
        e.stable = ev.stable[i];
        out.entries.push_back(e);
    }
    return out;
}

/// Second-order estimate of lambda_n - d(n):
/// sum_l a_l(n-l)^2 / (d(n) - d(n-l)) + a_l(n)^2 / (d(n) - d(n+l)).
inline double perturbation_oracle(const BandModel& model, Index n) {
    double out = 0.0;
    const double dn = model.d(n);
    for (int l = 1; l <= model.bandwidth(); ++l) {
        auto term = [&](double a, Index other) {
            if (a == 0.0) return 0.0;
            const double gap = dn - model.d(other);
            if (gap == 0.0) {
                throw DegenerateGapError("perturbation_oracle: zero gap between n = " +
                                         std::to_string(n) + " and " + std::to_string(other));
            }
            return a * a / gap;
        };
        if (n - l >= 1) out += term(model.a(l, n - l), n - l);
        out += term(model.a(l, n), n + l);
    }
    return out;
}

enum class FitKind { pure_power, power_with_log };
enum class Magnitude { absolute, relative };

inline const char* to_string(FitKind k) {
    return k == FitKind::pure_power ? "pure_power" : "power_with_log";
}

struct RateFit {
    double exponent = 0.0;      ///< slope against ln n
    double log_constant = 0.0;  ///< intercept
    double log_exponent = 0.0;  ///< slope against ln ln n (power_with_log only)
    Index window_first = 0;
    Index window_last = 0;
    double r_squared = 0.0;
    Index used_count = 0;
    Index excluded_count = 0;  ///< stable points in the window below the floor
    FitKind fit_kind = FitKind::pure_power;
};

inline constexpr double kDefaultResidualFloor = 1e-13;
inline constexpr Index kMinFitPoints = 8;

/// Value fitted for an entry: |lambda_n - d_n| or |lambda_n / d_n - 1|.
inline double fit_value(const ResidualEntry& e, Magnitude magnitude) {
    return magnitude == Magnitude::absolute ? std::abs(e.residual) : std::abs(e.residual / e.d_n);
}

/// Points that a fit over [first, last] would use and the count excluded by the floor.
inline std::pair<std::vector<const ResidualEntry*>, Index> usable_points(
    const ResidualSeries& series, Index first, Index last, Magnitude magnitude,
    double floor_rel = kDefaultResidualFloor) {
    std::vector<const ResidualEntry*> used;
    Index excluded = 0;
    for (const auto& e : series.entries) {
        if (e.n < first || e.n > last || !e.stable) continue;
        double floor = floor_rel * (1.0 + std::abs(e.d_n));
        if (magnitude == Magnitude::relative) floor /= std::abs(e.d_n);
        if (fit_value(e, magnitude) > floor && e.n >= 2) used.push_back(&e);
        else ++excluded;
    }
    return {std::move(used), excluded};
}

/// Least-squares fit of ln|value| against ln n (plus ln ln n for power_with_log).
inline RateFit fit_rate(const ResidualSeries& series, Index first, Index last, FitKind kind,
                        Magnitude magnitude = Magnitude::absolute,
                        double floor_rel = kDefaultResidualFloor) {
    auto [used, excluded] = usable_points(series, first, last, magnitude, floor_rel);
    const auto count = static_cast<Index>(used.size());
    if (count < kMinFitPoints) {
        throw NumericalError("fit_rate: only " + std::to_string(count) +
                             " usable points in [" + std::to_string(first) + ", " +
                             std::to_string(last) + "], need " + std::to_string(kMinFitPoints));
    }
    const Eigen::Index cols = kind == FitKind::pure_power ? 2 : 3;
    Eigen::MatrixXd x(count, cols);
    Eigen::VectorXd y(count);
    for (Index i = 0; i < count; ++i) {
        const double ln = std::log(static_cast<double>(used[i]->n));
        x(i, 0) = 1.0;
        x(i, 1) = ln;
        if (cols == 3) x(i, 2) = std::log(ln);
        y(i) = std::log(fit_value(*used[i], magnitude));
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd fitted = x * beta;
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    const double ss_res = (y - fitted).squaredNorm();

    RateFit fit;
    fit.log_constant = beta(0);
    fit.exponent = beta(1);
    fit.log_exponent = cols == 3 ? beta(2) : 0.0;
    fit.window_first = first;
    fit.window_last = last;
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    fit.used_count = count;
    fit.excluded_count = excluded;
    fit.fit_kind = kind;
    return fit;
}

inline constexpr double kDefaultRateSlack = 0.15;

struct RateVerdict {
    double predicted_exponent = 0.0;
    std::string predicted;  ///< human-readable predicted rate
    std::optional<RateFit> fit;
    bool pass = false;
};

/// Power-like rate check: pass iff the fitted exponent of |lambda_n - d(n)|
/// is at most delta - kappa + slack. A series whose residuals all sit below
/// the floor passes without a fit.
inline RateVerdict verify_power_rate(const PowerLikeParams& params, const ResidualSeries& series,
                                    Index first, Index last, double slack = kDefaultRateSlack) {
    if (!(params.kappa() > 0.0)) {
        throw PreconditionError("verify_power_rate: kappa = delta0 - delta must be > 0");
    }
    RateVerdict v;
    v.predicted_exponent = params.delta - params.kappa();
    v.predicted = "n^(" + std::to_string(v.predicted_exponent) + ")";
    if (usable_points(series, first, last, Magnitude::absolute).first.empty()) {
        v.pass = true;
        return v;
    }
    v.fit = fit_rate(series, first, last, FitKind::pure_power);
    v.pass = v.fit->exponent <= v.predicted_exponent + slack;
    return v;
}

/// Fit used for a special family: the log families carry a (ln n) factor in
/// their predicted rate, the stretched exponential does not.
inline FitKind family_fit_kind(FamilyKind kind) {
    return kind == FamilyKind::stretched_exp ? FitKind::pure_power : FitKind::power_with_log;
}

/// Special-family check on the relative residual |lambda_n / d(n) - 1|; pass
/// iff the power exponent is at most -2 kappa + slack (and, for kappa = 0,
/// the log exponent is at most the predicted one + slack).
inline RateVerdict verify_family_rate(const SpecialFamilyParams& params, const ResidualSeries& series,
                                    Index first, Index last, double slack = kDefaultRateSlack) {
    RateVerdict v;
    v.predicted_exponent = -2.0 * params.kappa;
    std::optional<double> predicted_log;
    const std::string k = std::to_string(params.kappa), kp = std::to_string(params.kappa_prime);
    switch (params.kind) {
        case FamilyKind::log_power:
            v.predicted = "n^(-2*" + k + ") (ln n)^(-2*" + kp + ")";
            predicted_log = -2.0 * params.kappa_prime;
            break;
        case FamilyKind::pure_log:
            v.predicted = "n^(-2*" + k + ") (ln n)^(1-" + kp + ")";
            predicted_log = 1.0 - params.kappa_prime;
            break;
        case FamilyKind::stretched_exp:
            v.predicted = "n^(-2*" + k + ")";
            break;
    }
    if (usable_points(series, first, last, Magnitude::relative).first.empty()) {
        v.pass = true;
        return v;
    }
    v.fit = fit_rate(series, first, last, family_fit_kind(params.kind), Magnitude::relative);
    v.pass = v.fit->exponent <= v.predicted_exponent + slack;
    if (params.kappa == 0.0 && predicted_log) {
        v.pass = v.pass && v.fit->log_exponent <= *predicted_log + slack;
    }
    return v;
}

/// Non-symmetric tridiagonal J with J[n+1][n] = sub(n), J[n][n] = diag(n),
/// J[n][n+1] = super(n), and the pentadiagonal model of J^T J:
///   G[i][i]   = super(i-1)^2 + diag(i)^2 + sub(i)^2
///   G[i+1][i] = super(i) diag(i) + diag(i+1) sub(i)
///   G[i+2][i] = super(i+1) sub(i)
struct GramJacobi {
    EntrySequence sub;
    EntrySequence diag;
    EntrySequence super;
    BandModel gram;
};

inline Eigen::MatrixXd jacobi_dense(const GramJacobi& j, Index order) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(order, order);
    for (Index i = 1; i <= order; ++i) {
        out(i - 1, i - 1) = j.diag(i);
        if (i < order) {
            out(i, i - 1) = j.sub(i);
            out(i - 1, i) = j.super(i);
        }
    }
    return out;
}

/// J_N^T J_N as a band matrix: the gram model's section with the corner
/// entry corrected for the column of J cut off at N.
inline SymmetricBandMatrix gram_section(const GramJacobi& j, Index order) {
    SymmetricBandMatrix g = truncate(j.gram, order);
    const double cut = j.sub(order);
    g.set(0, order, g(order, order) - cut * cut);
    return g;
}

inline GramJacobi gram_of_jacobi(EntrySequence sub, EntrySequence diag, EntrySequence super,
                                 Index check_order = 50) {
    EntrySequence g0([=](Index i) {
        const double a = super(i - 1), b = diag(i), c = sub(i);
        return a * a + b * b + c * c;
    }, "gram diagonal");
    EntrySequence g1([=](Index i) { return super(i) * diag(i) + diag(i + 1) * sub(i); },
                     "gram band 1");
    EntrySequence g2([=](Index i) { return super(i + 1) * sub(i); }, "gram band 2");
    GramJacobi out{sub, diag, super, BandModel(g0, {g1, g2}, "J^T J")};

    const Eigen::MatrixXd jd = jacobi_dense(out, check_order);
    const Eigen::MatrixXd dense = jd.transpose() * jd;
    const Eigen::MatrixXd banded = gram_section(out, check_order).to_dense();
    const double scale = std::max(1.0, dense.cwiseAbs().maxCoeff());
    const double mismatch = (dense - banded).cwiseAbs().maxCoeff();
    if (!(mismatch <= 1e-12 * scale)) {
        throw NumericalError("gram_of_jacobi: band model differs from dense J^T J by " +
                             std::to_string(mismatch) + " (construction bug)");
    }
    return out;
}

/// Ascending singular values of J_N from the eigenvalues of the pentadiagonal J_N^T J_N.
inline std::vector<double> singular_values_via_gram(const GramJacobi& j, Index order) {
    auto ev = eigenvalues(gram_section(j, order)).eigenvalues;
    for (double& x : ev) x = std::sqrt(std::max(0.0, x));
    return ev;
}

/// Oracle: dense J_N^T J_N diagonalized by the Jacobi rotation oracle.
inline std::vector<double> singular_values_dense_oracle(const GramJacobi& j, Index order) {
    const Eigen::MatrixXd jd = jacobi_dense(j, order);
    Eigen::MatrixXd gram = jd.transpose() * jd;
    gram = 0.5 * (gram + gram.transpose());
    auto ev = eigenvalues_dense_oracle(DenseSymmetricMatrix(gram)).eigenvalues;
    for (double& x : ev) x = std::sqrt(std::max(0.0, x));
    return ev;
}

}  // namespace bandspec
