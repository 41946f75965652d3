#pragma once

/// @file
/// Cutoff function chi, window-width policies tau_n, and the resulting
/// near/far split of the off-diagonal entries around a target index n.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>

#include "bandspec/errors.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

/// C^1 function with 0 <= chi <= 1, chi = 1 on [-1,1], chi = 0 outside [-2,2].
struct CutoffFunction {
    std::function<double(double)> evaluator;
    double derivative_bound = 0.0;
    std::string name;

    double operator()(double s) const { return evaluator(s); }

    /// Cubic smoothstep on 1 <= |s| <= 2; sup|chi'| = 1.5.
    static CutoffFunction smoothstep() {
        return {[](double s) {
                    const double r = std::abs(s);
                    if (r <= 1.0) return 1.0;
                    if (r >= 2.0) return 0.0;
                    const double t = r - 1.0;
                    return 1.0 - t * t * (3.0 - 2.0 * t);
                },
                1.5, "smoothstep"};
    }
};

enum class TauKind { quarter, stretched, custom };

class TauPolicy {
public:
    /// tau_n = floor(n/4).
    static TauPolicy quarter() { return TauPolicy(TauKind::quarter); }

    /// tau_n = floor(epsilon0 n^(1-theta)).
    static TauPolicy stretched(double epsilon0, double theta) {
        if (!(epsilon0 > 0.0) || !(theta > 0.0 && theta < 1.0)) {
            throw PreconditionError("stretched tau policy: need epsilon0 > 0 and 0 < theta < 1");
        }
        TauPolicy p(TauKind::stretched);
        p.epsilon0_ = epsilon0;
        p.theta_ = theta;
        return p;
    }

    static TauPolicy custom(std::function<Index(Index)> evaluator) {
        TauPolicy p(TauKind::custom);
        p.custom_ = std::move(evaluator);
        return p;
    }

    TauKind kind() const noexcept { return kind_; }
    double epsilon0() const noexcept { return epsilon0_; }
    double theta() const noexcept { return theta_; }

    std::string describe() const {
        switch (kind_) {
            case TauKind::quarter: return "floor(n/4)";
            case TauKind::stretched: {
                char buf[96];
                std::snprintf(buf, sizeof buf, "floor(%.17g n^(1-%.17g))", epsilon0_, theta_);
                return buf;
            }
            case TauKind::custom: return "custom";
        }
        return "?";
    }

    /// tau_n; throws when the policy yields a value below 1 at this n.
    Index operator()(Index n) const {
        if (n < 1) throw PreconditionError("tau_value: n must be >= 1");
        Index tau = 0;
        switch (kind_) {
            case TauKind::quarter: tau = n / 4; break;
            case TauKind::stretched:
                tau = static_cast<Index>(
                    std::floor(epsilon0_ * std::pow(static_cast<double>(n), 1.0 - theta_)));
                break;
            case TauKind::custom: tau = custom_(n); break;
        }
        if (tau < 1) {
            throw PreconditionError("tau_value: policy " + describe() + " gives tau < 1 at n = " +
                                    std::to_string(n));
        }
        return tau;
    }

    /// Checks monotonicity of tau_n and growth of n - 2 tau_n on [first, last].
    void check_window(Index first, Index last) const {
        const auto& tau = *this;
        Index prev = tau(first);
        for (Index n = first; n < last; ++n) {
            const Index next = tau(n + 1);
            if (next < prev) {
                throw PreconditionError("tau policy " + describe() + " decreases at n = " +
                                        std::to_string(n));
            }
            if (!(n - 2 * prev < (n + 1) - 2 * next + 2)) {
                throw PreconditionError("tau policy " + describe() +
                                        ": n - 2 tau_n drops at n = " + std::to_string(n));
            }
            prev = next;
        }
        if (last > first && last - 2 * tau(last) < first - 2 * tau(first)) {
            throw PreconditionError("tau policy " + describe() + ": n - 2 tau_n not growing on [" +
                                    std::to_string(first) + ", " + std::to_string(last) + "]");
        }
    }

private:
    explicit TauPolicy(TauKind kind) : kind_(kind) {}

    TauKind kind_;
    double epsilon0_ = 0.0;
    double theta_ = 0.0;
    std::function<Index(Index)> custom_;
};

inline Index tau_value(const TauPolicy& policy, Index n) { return policy(n); }

/// Same split for a known entry value and tau_n.
inline std::pair<double, double> cutoff_weights(double value, const CutoffFunction& chi,
                                                Index tau_n, Index n, Index j) {
    const double w = chi(static_cast<double>(j - n) / static_cast<double>(tau_n));
    if (w == 1.0) return {value, 0.0};
    if (w == 0.0) return {0.0, value};
    const double near = value * w;
    return {near, value - near};
}

/// Near and far parts of a_l(j) relative to the window centered at n:
/// near = a_l(j) chi((j-n)/tau_n), far = a_l(j) - near.
/// far vanishes for |j-n| <= tau_n and near vanishes for |j-n| >= 2 tau_n.
inline std::pair<double, double> cutoff_weights(const BandModel& model, const CutoffFunction& chi,
                                                const TauPolicy& tau, Index n, int l, Index j) {
    return cutoff_weights(model.a(l)(j), chi, tau(n), n, j);
}

}  // namespace bandspec
