#pragma once

/// @file
/// Finite symmetric band matrices in lower-band storage and the finite
/// section (truncation) of a band model.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bandspec/errors.hpp"
#include "bandspec/model.hpp"

namespace bandspec {

/// N x N symmetric matrix of bandwidth m. Band k (0 <= k <= m) holds the
/// entries M[j+k][j] for j = 1..N-k; the upper triangle is implied.
class SymmetricBandMatrix {
public:
    SymmetricBandMatrix(Index order, int bandwidth) : n_(order), m_(bandwidth) {
        if (m_ < 0) throw PreconditionError("SymmetricBandMatrix: negative bandwidth");
        if (n_ <= m_) {
            throw PreconditionError("SymmetricBandMatrix: order " + std::to_string(n_) +
                                    " must exceed bandwidth " + std::to_string(m_));
        }
        bands_.resize(static_cast<std::size_t>(m_) + 1);
        for (int k = 0; k <= m_; ++k) bands_[static_cast<std::size_t>(k)].assign(
            static_cast<std::size_t>(n_ - k), 0.0);
    }

    /// From explicit bands; bands[k] must have N-k entries, all finite.
    explicit SymmetricBandMatrix(std::vector<std::vector<double>> bands)
        : SymmetricBandMatrix(bands.empty() ? 0 : static_cast<Index>(bands.front().size()),
                              static_cast<int>(bands.size()) - 1) {
        for (int k = 0; k <= m_; ++k) {
            auto& src = bands[static_cast<std::size_t>(k)];
            if (static_cast<Index>(src.size()) != n_ - k) {
                throw PreconditionError("SymmetricBandMatrix: band " + std::to_string(k) +
                                        " has wrong length");
            }
            for (std::size_t j = 0; j < src.size(); ++j) {
                if (!std::isfinite(src[j])) {
                    throw NumericalError("SymmetricBandMatrix: non-finite entry in band " +
                                         std::to_string(k) + " at j = " + std::to_string(j + 1));
                }
            }
            bands_[static_cast<std::size_t>(k)] = std::move(src);
        }
    }

    Index order() const noexcept { return n_; }
    int bandwidth() const noexcept { return m_; }

    const std::vector<double>& band(int k) const { return bands_.at(static_cast<std::size_t>(k)); }

    /// Entry (i, j), 1-based, any triangle; zero outside the band.
    double operator()(Index i, Index j) const {
        if (i < j) std::swap(i, j);
        const Index k = i - j;
        if (k > m_ || j < 1 || i > n_) return 0.0;
        return bands_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)];
    }

    /// Sets M[j+k][j] (and its mirror).
    void set(int k, Index j, double value) {
        if (!std::isfinite(value)) {
            throw NumericalError("SymmetricBandMatrix: non-finite entry in band " +
                                 std::to_string(k) + " at j = " + std::to_string(j));
        }
        bands_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(j - 1)) = value;
    }

    /// Gershgorin interval containing the spectrum.
    std::pair<double, double> gershgorin() const {
        double lo = 0.0, hi = 0.0;
        for (Index i = 1; i <= n_; ++i) {
            double radius = 0.0;
            for (int k = 1; k <= m_; ++k) {
                radius += std::abs((*this)(i, i - k)) + std::abs((*this)(i + k, i));
            }
            const double c = (*this)(i, i);
            lo = i == 1 ? c - radius : std::min(lo, c - radius);
            hi = i == 1 ? c + radius : std::max(hi, c + radius);
        }
        return {lo, hi};
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
        for (int k = 0; k <= m_; ++k) {
            for (Index j = 1; j + k <= n_; ++j) {
                const double v = bands_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)];
                out(j + k - 1, j - 1) = v;
                out(j - 1, j + k - 1) = v;
            }
        }
        return out;
    }

private:
    Index n_;
    int m_;
    std::vector<std::vector<double>> bands_;
};

/// Finite section A_N: diagonal d(1..N), band l holds a_l(1..N-l).
inline SymmetricBandMatrix truncate(const BandModel& model, Index order) {
    const int m = model.bandwidth();
    if (order <= m) {
        throw PreconditionError("truncate: order " + std::to_string(order) +
                                " must exceed bandwidth " + std::to_string(m));
    }
    SymmetricBandMatrix out(order, m);
    for (int l = 0; l <= m; ++l) {
        const EntrySequence& seq = l == 0 ? model.d() : model.a(l);
        for (Index j = 1; j + l <= order; ++j) {
            const double v = seq(j);
            if (!std::isfinite(v)) {
                throw NumericalError("truncate: non-finite entry at (l, j) = (" + std::to_string(l) +
                                     ", " + std::to_string(j) + ") of " + model.label());
            }
            out.set(l, j, v);
        }
    }
    return out;
}

}  // namespace bandspec
