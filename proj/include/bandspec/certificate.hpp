#pragma once

/// @file
/// Quantitative error certificate |lambda_n - d(n)| <= 15 m^3 sup rho_n.
///
/// Window quantities around an index j (shifts with j + i <= 0 are skipped):
///   alpha_s(j)        = max_{l, |i|<=s}   |a_l(j+i)|
///   alpha~_{n,s}(j)   = 2 alpha_s(j) / tau_n + max_{l, |i|<=s} |(Δa_l)(j+i)|
///   gamma_s(j)        = min_{|i|<=s+1}    (Δd)(j+i)
///   gamma~_s(j)       = max_{|i|<=s}      |(Δ²d)(j+i)|
///   rho_n(j)          = 2 alpha~_{n,4m} alpha_{4m} / gamma_{4m}
///                       + m gamma~_{5m} alpha_{4m}^2 / gamma_{4m}^2
/// and the bound takes the supremum of rho_n over |j - n| <= 2 tau_n + 4m.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "bandspec/cutoff.hpp"
#include "bandspec/errors.hpp"
#include "bandspec/hypotheses.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

inline double alpha_s(const BandModel& model, Index j, Index s) {
    double out = 0.0;
    for (Index i = -s; i <= s; ++i) {
        if (j + i < 1) continue;
        for (int l = 1; l <= model.bandwidth(); ++l) out = std::max(out, std::abs(model.a(l, j + i)));
    }
    return out;
}

/// Variant taking tau_n directly.
inline double alpha_tilde(const BandModel& model, Index j, Index s, Index tau_n) {
    if (tau_n < 1) throw PreconditionError("alpha_tilde: tau_n must be >= 1");
    double diff = 0.0;
    for (Index i = -s; i <= s; ++i) {
        if (j + i < 1) continue;
        for (int l = 1; l <= model.bandwidth(); ++l) {
            diff = std::max(diff, std::abs(forward_difference(model.a(l), j + i)));
        }
    }
    return 2.0 * alpha_s(model, j, s) / static_cast<double>(tau_n) + diff;
}

inline double alpha_tilde(const BandModel& model, Index n, Index j, Index s, const TauPolicy& tau) {
    return alpha_tilde(model, j, s, tau(n));
}

inline double gamma_s(const BandModel& model, Index j, Index s) {
    double out = std::numeric_limits<double>::infinity();
    for (Index i = -(s + 1); i <= s + 1; ++i) {
        if (j + i < 1) continue;
        out = std::min(out, forward_difference(model.d(), j + i));
    }
    if (!std::isfinite(out)) throw PreconditionError("gamma_s: no in-range shift");
    return out;
}

inline double gamma_tilde(const BandModel& model, Index j, Index s) {
    double out = 0.0;
    for (Index i = -s; i <= s; ++i) {
        if (j + i < 1) continue;
        out = std::max(out, std::abs(second_difference(model.d(), j + i)));
    }
    return out;
}

/// The four window quantities entering rho_n(j).
struct RhoTerms {
    double alpha_tilde = 0.0;  ///< alpha~_{n,4m}(j)
    double alpha = 0.0;        ///< alpha_{4m}(j)
    double gamma = 0.0;        ///< gamma_{4m}(j)
    double gamma_tilde = 0.0;  ///< gamma~_{5m}(j)
};

inline double rho_from_terms(int m, const RhoTerms& t) {
    if (!(t.gamma > 0.0)) {
        throw InapplicableError("rho: gamma_4m = " + std::to_string(t.gamma) +
                                " is not positive; certificate inapplicable");
    }
    const double ratio = t.alpha / t.gamma;
    return 2.0 * t.alpha_tilde * ratio + static_cast<double>(m) * t.gamma_tilde * ratio * ratio;
}

inline RhoTerms rho_terms(const BandModel& model, Index j, Index tau_n) {
    const Index m = model.bandwidth();
    return {alpha_tilde(model, j, 4 * m, tau_n), alpha_s(model, j, 4 * m), gamma_s(model, j, 4 * m),
            gamma_tilde(model, j, 5 * m)};
}

inline double rho(const BandModel& model, Index n, Index j, const TauPolicy& tau) {
    const Index tau_n = tau(n);
    try {
        return rho_from_terms(model.bandwidth(), rho_terms(model, j, tau_n));
    } catch (const InapplicableError& e) {
        throw InapplicableError(std::string(e.what()) + " at j = " + std::to_string(j));
    }
}

struct CertificateResult {
    Index n = 0;
    Index tau_n = 0;
    Index window_first = 0;
    Index window_last = 0;
    double rho_sup = 0.0;
    double bound = 0.0;  ///< 15 m^3 rho_sup
    Index arg_sup = 0;
    HypothesisReport hypotheses;
    /// Monotonicity and gap conditions verified on the whole window.
    bool hypotheses_hold = false;
};

/// Certified bound for |lambda_n(A) - d(n)|.
inline CertificateResult certify(const BandModel& model, Index n, const TauPolicy& tau) {
    const Index m = model.bandwidth();
    CertificateResult out;
    out.n = n;
    out.tau_n = tau(n);
    out.window_first = n - 2 * out.tau_n - 4 * m;
    out.window_last = n + 2 * out.tau_n + 4 * m;
    if (out.window_first < 1) {
        throw PreconditionError("certify: window [" + std::to_string(out.window_first) + ", " +
                                std::to_string(out.window_last) + "] escapes the index set at n = " +
                                std::to_string(n));
    }
    for (Index j = out.window_first; j <= out.window_last; ++j) {
        double value;
        try {
            value = rho_from_terms(static_cast<int>(m), rho_terms(model, j, out.tau_n));
        } catch (const InapplicableError& e) {
            throw InapplicableError(std::string(e.what()) + " at j = " + std::to_string(j) +
                                    " (n = " + std::to_string(n) + ")");
        }
        if (j == out.window_first || value > out.rho_sup) {
            out.rho_sup = value;
            out.arg_sup = j;
        }
    }
    out.bound = 15.0 * static_cast<double>(m * m * m) * out.rho_sup;
    try {
        out.hypotheses = check_gap_hypotheses(model, tau, out.window_first, out.window_last);
        out.hypotheses_hold = out.hypotheses.monotone_from == out.window_first &&
                              out.hypotheses.gap_from == out.window_first;
    } catch (const PreconditionError&) {
        // tau policy undefined somewhere on the window: hypotheses untested.
        out.hypotheses.range_first = out.window_first;
        out.hypotheses.range_last = out.window_last;
        out.hypotheses_hold = false;
    }
    return out;
}

/// Smallest n in [first, last] from which certify is applicable with its
/// hypotheses verified for every index through `last` (the empirical n_1).
inline std::optional<Index> empirical_threshold(const BandModel& model, const TauPolicy& tau,
                                                Index first, Index last) {
    std::optional<Index> from;
    for (Index n = last; n >= first; --n) {
        try {
            if (!certify(model, n, tau).hypotheses_hold) break;
        } catch (const PreconditionError&) {
            break;
        } catch (const InapplicableError&) {
            break;
        }
        from = n;
    }
    return from;
}

}  // namespace bandspec
