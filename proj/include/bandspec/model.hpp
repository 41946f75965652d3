#pragma once

/// @file
/// Band models A = D + A' and the parametric entry families used throughout.
///
/// A model of bandwidth m is a diagonal sequence d and off-diagonal sequences
/// a_1..a_m; the symmetric operator has entries A[j][j] = d(j) and
/// A[j+l][j] = A[j][j+l] = a_l(j).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bandspec/errors.hpp"
#include "bandspec/sequence.hpp"

namespace bandspec {

class BandModel {
public:
    BandModel(EntrySequence diagonal, std::vector<EntrySequence> offdiagonals,
              std::string label = "model")
        : d_(std::move(diagonal)), a_(std::move(offdiagonals)), label_(std::move(label)) {
        if (a_.empty()) {
            throw PreconditionError("BandModel: bandwidth m must be at least 1");
        }
    }

    /// Pure diagonal model of bandwidth m (all off-diagonals zero).
    static BandModel diagonal(EntrySequence d, int m = 1, std::string label = "diagonal") {
        return BandModel(std::move(d), std::vector<EntrySequence>(static_cast<std::size_t>(m)),
                         std::move(label));
    }

    int bandwidth() const noexcept { return static_cast<int>(a_.size()); }
    const EntrySequence& d() const noexcept { return d_; }
    double d(Index j) const { return d_(j); }

    /// Off-diagonal sequence a_l, 1 <= l <= m.
    const EntrySequence& a(int l) const {
        if (l < 1 || l > bandwidth()) {
            throw PreconditionError("BandModel::a: band " + std::to_string(l) + " outside 1.." +
                                    std::to_string(bandwidth()));
        }
        return a_[static_cast<std::size_t>(l - 1)];
    }
    double a(int l, Index j) const { return a(l)(j); }

    const std::vector<EntrySequence>& offdiagonals() const noexcept { return a_; }
    const std::string& label() const noexcept { return label_; }

    /// Scales every off-diagonal by t, keeping d.
    BandModel with_offdiagonals_scaled(double t) const {
        std::vector<EntrySequence> scaled;
        scaled.reserve(a_.size());
        for (const auto& x : a_) scaled.push_back(t * x);
        return BandModel(d_, std::move(scaled), label_);
    }

    /// Scales d and every a_l by the same factor t.
    BandModel scaled(double t) const {
        auto out = with_offdiagonals_scaled(t);
        out.d_ = t * d_;
        return out;
    }

    /// First index in [first, last] from which d is strictly increasing
    /// through `last`, or nullopt when d(last) >= d(last+1).
    std::optional<Index> increasing_from(Index first, Index last) const {
        std::optional<Index> from;
        for (Index j = last; j >= first; --j) {
            if (!(d(j) < d(j + 1))) break;
            from = j;
        }
        return from;
    }

private:
    EntrySequence d_;
    std::vector<EntrySequence> a_;
    std::string label_;
};

/// Additive lower-order term together with its declared decay exponent:
/// the caller asserts |term(n)| = O(n^decay_exponent).
struct Perturbation {
    EntrySequence sequence;
    double decay_exponent = 0.0;
};

/// d(n) = c0 n^delta0 + c n^(delta0-1), a_l(n) = c_l n^delta_l.
struct PowerLikeParams {
    double c0 = 1.0;
    double delta0 = 1.0;
    double c = 0.0;
    /// (c_l, delta_l) for l = 1..m.
    std::vector<std::pair<double, double>> offdiag;
    double delta = 0.0;
    std::optional<Perturbation> d_perturbation;
    /// Either empty or exactly m entries.
    std::vector<std::optional<Perturbation>> a_perturbations;

    double kappa() const noexcept { return delta0 - delta; }

    void validate() const {
        if (!(c0 > 0.0)) throw PreconditionError("power-like family: c0 must be > 0");
        if (!(delta0 > 0.0)) throw PreconditionError("power-like family: delta0 must be > 0");
        if (offdiag.empty()) throw PreconditionError("power-like family: need at least one band");
        for (std::size_t l = 0; l < offdiag.size(); ++l) {
            if (offdiag[l].second > delta) {
                throw PreconditionError("power-like family: delta < delta_" +
                                        std::to_string(l + 1));
            }
        }
        if (d_perturbation && d_perturbation->decay_exponent > delta0 - 2.0) {
            throw PreconditionError("power-like family: diagonal perturbation decays slower "
                                    "than n^(delta0-2)");
        }
        if (!a_perturbations.empty() && a_perturbations.size() != offdiag.size()) {
            throw PreconditionError("power-like family: a_perturbations must have m entries");
        }
        for (std::size_t l = 0; l < a_perturbations.size(); ++l) {
            if (a_perturbations[l] && a_perturbations[l]->decay_exponent > delta - 1.0) {
                throw PreconditionError("power-like family: perturbation of a_" +
                                        std::to_string(l + 1) +
                                        " decays slower than n^(delta-1)");
            }
        }
    }
};

inline BandModel make_power_like(const PowerLikeParams& params, std::string label = "power-like") {
    params.validate();
    const double c0 = params.c0, delta0 = params.delta0, c = params.c;
    EntrySequence d(
        [=](Index n) {
            const double x = static_cast<double>(n);
            return c0 * std::pow(x, delta0) + c * std::pow(x, delta0 - 1.0);
        },
        "c0 n^delta0 + c n^(delta0-1)");
    if (params.d_perturbation) d = d + params.d_perturbation->sequence;

    std::vector<EntrySequence> a;
    for (std::size_t l = 0; l < params.offdiag.size(); ++l) {
        const auto [cl, dl] = params.offdiag[l];
        EntrySequence al(
            [cl, dl](Index n) { return cl == 0.0 ? 0.0 : cl * std::pow(static_cast<double>(n), dl); },
            "c_l n^delta_l");
        if (l < params.a_perturbations.size() && params.a_perturbations[l]) {
            al = al + params.a_perturbations[l]->sequence;
        }
        a.push_back(std::move(al));
    }
    return BandModel(std::move(d), std::move(a), std::move(label));
}

enum class FamilyKind { log_power, pure_log, stretched_exp };

inline const char* to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::log_power: return "log_power";
        case FamilyKind::pure_log: return "pure_log";
        case FamilyKind::stretched_exp: return "stretched_exp";
    }
    return "?";
}

/// Diagonals growing like omega(n) for the three non-power families:
///   log_power      omega = c0 n^delta0 (ln n)^delta0'
///   pure_log       omega = c0 (ln n)^delta0'
///   stretched_exp  omega = c0 n^delta0 exp(c n^theta)
struct SpecialFamilyParams {
    FamilyKind kind = FamilyKind::log_power;
    double c0 = 1.0;
    double delta0 = 1.0;
    double delta0_prime = 0.0;
    double c = 0.0;
    double kappa = 0.0;
    double kappa_prime = 0.0;
    double theta = 0.5;
    double epsilon0 = 1.0;

    void validate() const {
        if (!(c0 > 0.0)) throw PreconditionError("special family: c0 must be > 0");
        switch (kind) {
            case FamilyKind::log_power:
                if (!(delta0 > 0.0)) throw PreconditionError("log_power: delta0 must be > 0");
                break;
            case FamilyKind::pure_log:
                if (!(delta0_prime > 0.0)) {
                    throw PreconditionError("pure_log: delta0_prime must be > 0");
                }
                break;
            case FamilyKind::stretched_exp:
                if (!(c > 0.0)) throw PreconditionError("stretched_exp: c must be > 0");
                if (!(theta > 0.0 && theta < 1.0)) {
                    throw PreconditionError("stretched_exp: theta must lie in (0,1)");
                }
                if (!(epsilon0 > 0.0)) throw PreconditionError("stretched_exp: epsilon0 must be > 0");
                break;
        }
    }

    double omega(double x) const {
        switch (kind) {
            case FamilyKind::log_power:
                return c0 * std::pow(x, delta0) * std::pow(std::log(x), delta0_prime);
            case FamilyKind::pure_log:
                return c0 * std::pow(std::log(x), delta0_prime);
            case FamilyKind::stretched_exp:
                return c0 * std::pow(x, delta0) * std::exp(c * std::pow(x, theta));
        }
        return 0.0;
    }
};

/// Model with d(n) = omega(n) (+ optional additive perturbation) and
/// caller-supplied off-diagonals a_1..a_m.
inline BandModel make_special_family(const SpecialFamilyParams& params,
                                     std::vector<EntrySequence> offdiagonals,
                                     std::optional<EntrySequence> d_perturbation = std::nullopt,
                                     std::string label = "") {
    params.validate();
    if (offdiagonals.empty()) throw PreconditionError("special family: need at least one band");
    EntrySequence d([params](Index n) { return params.omega(static_cast<double>(n)); },
                     std::string("omega ") + to_string(params.kind));
    if (d_perturbation) d = d + *d_perturbation;
    return BandModel(std::move(d), std::move(offdiagonals),
                     label.empty() ? std::string(to_string(params.kind)) : std::move(label));
}

/// Off-diagonal saturating the family's smallness condition:
///   scale n^-kappa (ln n)^-kappa' omega(n)   (log families; ln n floored at 1)
///   scale n^-kappa omega(n)                  (stretched_exp)
inline EntrySequence family_offdiagonal(const SpecialFamilyParams& params, double scale) {
    params.validate();
    return EntrySequence(
        [params, scale](Index n) {
            const double x = static_cast<double>(n);
            double value = scale * std::pow(x, -params.kappa) * params.omega(x);
            if (params.kind != FamilyKind::stretched_exp) {
                value *= std::pow(std::max(std::log(x), 1.0), -params.kappa_prime);
            }
            return value;
        },
        "family off-diagonal");
}

}  // namespace bandspec
