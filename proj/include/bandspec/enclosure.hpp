#pragma once

/// @file
/// Two-sided min-max enclosures d_n^- <= lambda_n(A) <= d_n^+ and the
/// first-order localization radius C0 n^delta.
///
/// With alpha(j) = sum_l (|a_l(j)| + |a_l(j-l)|):
///   d_n^+ = max_{1<=j<=n} d(j) + alpha(j)     (exact, finite)
///   d_n^- = inf_{j>=n}    d(j) - alpha(j)     (searched on a horizon)
/// The infinite infimum is replaced by a finite search plus a check that
/// d - alpha keeps increasing just beyond the horizon.

#include <algorithm>
#include <cmath>
#include <string>

#include "bandspec/errors.hpp"
#include "bandspec/hypotheses.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

/// Minimal admissible alpha(j) (zero extension for j <= l).
inline double alpha_profile(const BandModel& model, Index j) {
    double sum = 0.0;
    for (int l = 1; l <= model.bandwidth(); ++l) {
        sum += std::abs(model.a(l, j)) + std::abs(model.a(l, j - l));
    }
    return sum;
}

struct EnclosureResult {
    Index n = 0;
    double lower = 0.0;
    double upper = 0.0;
    Index arg_lower = 0;
    Index arg_upper = 0;
    bool tail_certified = false;
    std::string certification_note;
};

inline Index default_horizon(Index n) { return std::max<Index>(4 * n, n + 1000); }
inline constexpr Index kDefaultTailCheck = 200;

/// Enclosure of lambda_n. The lower end is the minimum of d - alpha over
/// [n, n + horizon]; it is certified when (Δd)(j) >= |(Δalpha)(j)| on
/// [n + horizon, n + horizon + tail_check]. Ties go to the smallest index.
inline EnclosureResult enclose(const BandModel& model, Index n, Index horizon, Index tail_check) {
    if (n < 1) throw PreconditionError("enclose: n must be >= 1");
    if (horizon < n) {
        throw PreconditionError("enclose: horizon " + std::to_string(horizon) +
                                " must be >= n = " + std::to_string(n));
    }
    if (tail_check < 1) throw PreconditionError("enclose: tail_check must be >= 1");

    EnclosureResult out;
    out.n = n;
    for (Index j = 1; j <= n; ++j) {
        const double v = model.d(j) + alpha_profile(model, j);
        if (j == 1 || v > out.upper) {
            out.upper = v;
            out.arg_upper = j;
        }
    }
    for (Index j = n; j <= n + horizon; ++j) {
        const double v = model.d(j) - alpha_profile(model, j);
        if (j == n || v < out.lower) {
            out.lower = v;
            out.arg_lower = j;
        }
    }

    const Index tail_first = n + horizon, tail_last = n + horizon + tail_check;
    out.tail_certified = true;
    Index failed_at = 0;
    double alpha_j = alpha_profile(model, tail_first);
    for (Index j = tail_first; j <= tail_last; ++j) {
        const double alpha_next = alpha_profile(model, j + 1);
        if (!(forward_difference(model.d(), j) - std::abs(alpha_next - alpha_j) >= 0.0)) {
            out.tail_certified = false;
            failed_at = j;
            break;
        }
        alpha_j = alpha_next;
    }
    const std::string window =
        "[" + std::to_string(tail_first) + ", " + std::to_string(tail_last) + "]";
    out.certification_note =
        out.tail_certified
            ? "d - alpha nondecreasing on " + window +
                  "; searched minimum is the infimum if this persists beyond the horizon"
            : "|Δalpha| > Δd at j = " + std::to_string(failed_at) + " in " + window +
                  "; lower end is only the minimum over [n, n + horizon]";
    return out;
}

inline EnclosureResult enclose(const BandModel& model, Index n) {
    return enclose(model, n, default_horizon(n), kDefaultTailCheck);
}

/// sqrt(2 (a_l(j)^2 + a_l(j-l)^2) / (1 + d(j)^2)); tends to zero when the
/// off-diagonals are relatively bounded by D.
inline double relative_bound_profile(const BandModel& model, int l, Index j) {
    const double a0 = model.a(l, j), a1 = model.a(l, j - l), d = model.d(j);
    return std::sqrt(2.0 * (a0 * a0 + a1 * a1) / (1.0 + d * d));
}

struct LocalizedBound {
    double radius = 0.0;    ///< C0 n^delta
    double constant = 0.0;  ///< C0
    Index arg_sup = 0;      ///< index attaining C0
};

/// Localization radius C0 n^delta with C0 = max_j alpha(j) / j^delta over
/// [window_first, window_last]. The difference and off-diagonal growth
/// conditions are verified on the same window first.
inline LocalizedBound localized_bound(const BandModel& model, const PowerLikeParams& params, Index n,
                                      Index window_first, Index window_last) {
    const HypothesisReport report =
        check_power_hypotheses(model, params.delta, params.kappa(), window_first, window_last);
    for (std::size_t k : {std::size_t{0}, std::size_t{3}}) {
        const auto& c = report.power_box[k];
        if (c.status == ConditionStatus::violated) {
            throw PreconditionError("localized_bound: condition " + c.name + " violated at j = " +
                                    std::to_string(*c.violated_at));
        }
    }
    LocalizedBound out;
    for (Index j = window_first; j <= window_last; ++j) {
        const double r = alpha_profile(model, j) / std::pow(static_cast<double>(j), params.delta);
        if (r > out.constant) {
            out.constant = r;
            out.arg_sup = j;
        }
    }
    out.radius = out.constant * std::pow(static_cast<double>(n), params.delta);
    return out;
}

}  // namespace bandspec
