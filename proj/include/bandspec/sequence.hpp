#pragma once

/// @file
/// Real sequences indexed by the positive integers, with the zero extension
/// x(j) = 0 for j <= 0, and their finite differences.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bandspec {

/// 1-based index. Signed so that shifted indices j - l may run below 1.
using Index = std::int64_t;

class EntrySequence {
public:
    using Evaluator = std::function<double(Index)>;

    EntrySequence() : EntrySequence(zero()) {}

    EntrySequence(Evaluator evaluator, std::string label)
        : evaluator_(std::make_shared<const Evaluator>(std::move(evaluator))),
          label_(std::move(label)) {}

    /// Value at j; exactly 0 for j <= 0.
    double operator()(Index j) const { return j <= 0 ? 0.0 : (*evaluator_)(j); }

    const std::string& label() const noexcept { return label_; }

    static EntrySequence zero() {
        return EntrySequence([](Index) { return 0.0; }, "0");
    }

    static EntrySequence constant(double value) {
        return EntrySequence([value](Index) { return value; }, "const");
    }

    /// x(j) = values[j-1] for 1 <= j <= values.size(), 0 beyond.
    static EntrySequence table(std::vector<double> values, std::string label = "table") {
        auto shared = std::make_shared<const std::vector<double>>(std::move(values));
        return EntrySequence(
            [shared](Index j) {
                const auto k = static_cast<std::size_t>(j - 1);
                return k < shared->size() ? (*shared)[k] : 0.0;
            },
            std::move(label));
    }

    /// Pointwise sum; used to attach lower-order perturbations.
    friend EntrySequence operator+(const EntrySequence& x, const EntrySequence& y) {
        return EntrySequence([x, y](Index j) { return x(j) + y(j); },
                             x.label() + " + " + y.label());
    }

    /// Pointwise scaling.
    friend EntrySequence operator*(double t, const EntrySequence& x) {
        return EntrySequence([t, x](Index j) { return t * x(j); }, "scaled " + x.label());
    }

private:
    std::shared_ptr<const Evaluator> evaluator_;
    std::string label_;
};

/// (Δx)(n) = x(n+1) - x(n).
inline double forward_difference(const EntrySequence& x, Index n) { return x(n + 1) - x(n); }

/// (Δ²x)(n) = x(n+2) - 2 x(n+1) + x(n).
inline double second_difference(const EntrySequence& x, Index n) {
    return x(n + 2) - 2.0 * x(n + 1) + x(n);
}

}  // namespace bandspec
