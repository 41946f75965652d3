#pragma once

/// @file
/// Windowed verification of the structural hypotheses used by the
/// enclosure and certificate modules.
///
/// Limit statements (O(.) bounds, eventual monotonicity) cannot be decided
/// from finitely many values; each check reports what held on the tested
/// index range and where it first failed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bandspec/cutoff.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

enum class ConditionStatus { verified_on_range, violated, untested };

inline const char* to_string(ConditionStatus s) {
    switch (s) {
        case ConditionStatus::verified_on_range: return "verified-on-range";
        case ConditionStatus::violated: return "violated";
        case ConditionStatus::untested: return "untested";
    }
    return "?";
}

struct ConditionCheck {
    std::string name;
    ConditionStatus status = ConditionStatus::untested;
    std::optional<Index> violated_at;
    /// Supremum of the tested ratio over the range (the fitted constant).
    double constant = 0.0;
};

struct HypothesisReport {
    Index range_first = 0;
    Index range_last = 0;
    /// First n from which d(n) < d(n+1) holds through range_last.
    std::optional<Index> monotone_from;
    /// First n from which the gap condition holds for every band through range_last.
    std::optional<Index> gap_from;
    /// Indices where n + m - tau_n < 1, evaluated with the zero extension of d.
    std::vector<Index> zero_extension_indices;
    std::vector<ConditionCheck> power_box;
};

/// Gap condition at one index:
/// 4m max(|a_l(n)|, |a_l(n+m-tau_n)|) <= d(n) - d(n+m-tau_n) for every l.
inline bool gap_condition_holds(const BandModel& model, Index n, Index tau_n) {
    const int m = model.bandwidth();
    const Index back = n + m - tau_n;
    const double gap = model.d(n) - model.d(back);
    for (int l = 1; l <= m; ++l) {
        const double a = std::max(std::abs(model.a(l, n)), std::abs(model.a(l, back)));
        if (!(4.0 * m * a <= gap)) return false;
    }
    return true;
}

/// Scans [first, last] for the strict monotonicity of d and the gap condition.
inline HypothesisReport check_gap_hypotheses(const BandModel& model, const TauPolicy& tau,
                                                 Index first, Index last) {
    if (first < 1 || last < first) {
        throw PreconditionError("check_gap_hypotheses: empty or invalid range");
    }
    tau.check_window(first, last);
    HypothesisReport report;
    report.range_first = first;
    report.range_last = last;
    bool monotone = true, gap = true;
    for (Index n = last; n >= first; --n) {
        monotone = monotone && model.d(n) < model.d(n + 1);
        if (monotone) report.monotone_from = n;
        const Index tau_n = tau(n);
        if (n + model.bandwidth() - tau_n < 1) report.zero_extension_indices.push_back(n);
        gap = gap && gap_condition_holds(model, n, tau_n);
        if (gap) report.gap_from = n;
        if (!monotone && !gap && report.zero_extension_indices.empty()) break;
    }
    std::sort(report.zero_extension_indices.begin(), report.zero_extension_indices.end());
    return report;
}

/// Growth factor separating "bounded" from "growing" windowed ratios: the
/// supremum over the upper half of the range may exceed the supremum over the
/// lower half by at most this factor.
inline constexpr double kBoundedGrowthFactor = 1.25;

namespace detail {

/// Decides whether ratio(n) stays bounded on [first, last]. A non-finite or
/// negative ratio counts as an immediate violation.
template <class Ratio>
ConditionCheck bounded_ratio(std::string name, Index first, Index last, Ratio ratio) {
    ConditionCheck check;
    check.name = std::move(name);
    const Index mid = first + (last - first) / 2;
    double lower_sup = 0.0;
    for (Index n = first; n <= last; ++n) {
        const double r = ratio(n);
        if (!std::isfinite(r) || r < 0.0) {
            check.status = ConditionStatus::violated;
            check.violated_at = n;
            check.constant = std::numeric_limits<double>::infinity();
            return check;
        }
        check.constant = std::max(check.constant, r);
        if (n <= mid) {
            lower_sup = std::max(lower_sup, r);
        } else if (!check.violated_at && r > kBoundedGrowthFactor * lower_sup) {
            check.violated_at = n;
        }
    }
    check.status = check.violated_at ? ConditionStatus::violated : ConditionStatus::verified_on_range;
    return check;
}

}  // namespace detail

/// Power-type hypotheses with p = delta + kappa - 1:
///   C^-1 n^p <= (Δd)(n) <= C n^p,  (Δ²d)(n) = O(n^(p-1)),
///   a_l(n) = O(n^delta),           (Δa_l)(n) = O(n^(delta-1)).
/// power_box holds, in order: "diff-lower", "diff-upper", "second-diff",
/// "offdiag", "offdiag-diff". The fitted C is max of the first two constants.
inline HypothesisReport check_power_hypotheses(const BandModel& model, double delta, double kappa,
                                               Index first, Index last) {
    if (first < 1 || last < first) {
        throw PreconditionError("check_power_hypotheses: empty or invalid range");
    }
    HypothesisReport report;
    report.range_first = first;
    report.range_last = last;
    const double p = delta + kappa - 1.0;
    auto pw = [](Index n, double e) { return std::pow(static_cast<double>(n), e); };
    const int m = model.bandwidth();

    report.power_box.push_back(detail::bounded_ratio("diff-lower", first, last, [&](Index n) {
        const double dd = forward_difference(model.d(), n);
        return dd > 0.0 ? pw(n, p) / dd : std::numeric_limits<double>::infinity();
    }));
    report.power_box.push_back(detail::bounded_ratio("diff-upper", first, last, [&](Index n) {
        return forward_difference(model.d(), n) / pw(n, p);
    }));
    report.power_box.push_back(detail::bounded_ratio("second-diff", first, last, [&](Index n) {
        return std::abs(second_difference(model.d(), n)) / pw(n, p - 1.0);
    }));
    report.power_box.push_back(detail::bounded_ratio("offdiag", first, last, [&](Index n) {
        double r = 0.0;
        for (int l = 1; l <= m; ++l) r = std::max(r, std::abs(model.a(l, n)));
        return r / pw(n, delta);
    }));
    report.power_box.push_back(detail::bounded_ratio("offdiag-diff", first, last, [&](Index n) {
        double r = 0.0;
        for (int l = 1; l <= m; ++l) r = std::max(r, std::abs(forward_difference(model.a(l), n)));
        return r / pw(n, delta - 1.0);
    }));
    return report;
}

/// Fitted two-sided constant C of the difference condition.
inline double fitted_difference_constant(const HypothesisReport& report) {
    if (report.power_box.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::max(report.power_box[0].constant, report.power_box[1].constant);
}

}  // namespace bandspec
