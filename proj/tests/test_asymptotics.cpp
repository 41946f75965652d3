#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bandspec/asymptotics.hpp"

using namespace bandspec;

namespace {

BandModel m1() {
    PowerLikeParams p;
    p.delta0 = 2, p.offdiag = {{1.0, 0.5}}, p.delta = 0.5;
    return make_power_like(p, "M1");
}

ResidualSeries synthetic(Index first, Index last, double (*f)(double)) {
    ResidualSeries s;
    for (Index n = first; n <= last; ++n) {
        const double d = double(n * n);
        s.entries.push_back({n, d + f(double(n)), d, f(double(n)), true});
    }
    return s;
}

}  // namespace

TEST(ResidualSeries, PureDiagonalIsZero) {
    const auto model = BandModel::diagonal(EntrySequence([](Index j) { return double(j); }, "j"));
    const auto s = residual_series(model, 1, 20, 40);
    for (const auto& e : s.entries) {
        EXPECT_EQ(e.residual, 0.0);
        EXPECT_TRUE(e.stable);
    }
    EXPECT_THROW(residual_series(model, 1, 21, 40), PreconditionError);
}

TEST(ResidualSeries, M1ResidualsNegativeAndDecaying) {
    const auto s = residual_series(m1(), 50, 400, 1600);
    for (const auto& e : s.entries) {
        EXPECT_TRUE(e.stable);
        EXPECT_LT(e.residual, 0.0);
        EXPECT_LT(std::abs(e.residual), 1.0 / e.n);
    }
}

TEST(PerturbationOracle, TwoByTwoClosedForm) {
    const BandModel model(EntrySequence::table({1, 4}), {EntrySequence::table({1})});
    EXPECT_NEAR(perturbation_oracle(model, 1), -1.0 / 3.0, 1e-15);
    const double exact = (5 - std::sqrt(13.0)) / 2 - 1;
    EXPECT_NEAR(exact, -0.302776, 1e-6);
    EXPECT_LT(std::abs(perturbation_oracle(model, 1) - exact), 0.11 * std::abs(exact));
}

TEST(PerturbationOracle, AgreesWithM1AtTwoHundred) {
    const double lambda = eigenvalues(truncate(m1(), 800), {200, 200}).eigenvalues.front();
    const double residual = lambda - m1().d(200);
    EXPECT_LT(std::abs(perturbation_oracle(m1(), 200) - residual), 0.2 * std::abs(residual));
    EXPECT_EQ(perturbation_oracle(BandModel::diagonal(EntrySequence::constant(1.0)), 5), 0.0);
}

TEST(PerturbationOracle, ZeroGapIsDegenerate) {
    const BandModel flat(EntrySequence::constant(1.0), {EntrySequence::constant(1.0)});
    EXPECT_THROW(perturbation_oracle(flat, 3), DegenerateGapError);
}

TEST(FitRate, ExactPowerLaw) {
    const auto s = synthetic(10, 200, [](double n) { return 5.0 / n; });
    const auto f = fit_rate(s, 10, 200, FitKind::pure_power);
    EXPECT_NEAR(f.exponent, -1.0, 1e-10);
    EXPECT_NEAR(f.log_constant, std::log(5.0), 1e-9);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_EQ(f.used_count, 191);
}

TEST(FitRate, NoisyPowerLaw) {
    const auto s = synthetic(100, 1000, [](double n) { return (1 + 0.1 * std::sin(n)) / (n * n); });
    EXPECT_NEAR(fit_rate(s, 100, 1000, FitKind::pure_power).exponent, -2.0, 0.05);
}

TEST(FitRate, PowerWithLog) {
    const auto s = synthetic(20, 2000, [](double n) { return 3.0 * std::pow(n, -0.5) * std::pow(std::log(n), -1.5); });
    const auto f = fit_rate(s, 20, 2000, FitKind::power_with_log);
    EXPECT_NEAR(f.exponent, -0.5, 1e-8);
    EXPECT_NEAR(f.log_exponent, -1.5, 1e-8);
}

TEST(FitRate, RelativeMagnitude) {
    ResidualSeries s;
    for (Index n = 10; n <= 100; ++n) {
        const double d = std::exp(std::sqrt(double(n)));
        s.entries.push_back({n, d * (1 + 1.0 / n), d, d / n, true});
    }
    EXPECT_NEAR(fit_rate(s, 10, 100, FitKind::pure_power, Magnitude::relative).exponent, -1.0, 1e-8);
}

TEST(FitRate, AllBelowFloorIsError) {
    const auto s = synthetic(10, 100, [](double) { return 0.0; });
    EXPECT_THROW(fit_rate(s, 10, 100, FitKind::pure_power), NumericalError);
    const auto few = synthetic(10, 15, [](double n) { return 1 / n; });
    EXPECT_THROW(fit_rate(few, 10, 15, FitKind::pure_power), NumericalError);
}

TEST(FitRate, UnstableAndFloorPointsExcluded) {
    auto s = synthetic(10, 60, [](double n) { return 1 / n; });
    s.entries[0].stable = false;
    s.entries[1].residual = 1e-20;
    const auto f = fit_rate(s, 10, 60, FitKind::pure_power);
    EXPECT_EQ(f.used_count, 49);
    EXPECT_EQ(f.excluded_count, 1);  // unstable points are not candidates at all
}

TEST(Verdict, M1PowerLikeRate) {
    PowerLikeParams p;
    p.delta0 = 2, p.offdiag = {{1.0, 0.5}}, p.delta = 0.5;
    const auto s = residual_series(m1(), 100, 400, 1600);
    const auto v = verify_power_rate(p, s, 100, 400);
    EXPECT_EQ(v.predicted_exponent, -1.0);
    ASSERT_TRUE(v.fit.has_value());
    EXPECT_TRUE(v.pass);
    EXPECT_LE(v.fit->exponent, -0.85);
}

TEST(Verdict, PureDiagonalPassesTrivially) {
    PowerLikeParams p;
    p.delta0 = 2, p.offdiag = {{0.0, 0.5}}, p.delta = 0.5;
    const auto s = residual_series(make_power_like(p), 10, 50, 100);
    const auto v = verify_power_rate(p, s, 10, 50);
    EXPECT_TRUE(v.pass);
    EXPECT_FALSE(v.fit.has_value());
    p.delta = 2.0;
    EXPECT_THROW(verify_power_rate(p, s, 10, 50), PreconditionError);
}

TEST(Verdict, StretchedExponentialFamily) {
    SpecialFamilyParams p;
    p.kind = FamilyKind::stretched_exp, p.c0 = 1, p.delta0 = 0, p.c = 1, p.theta = 0.5, p.kappa = 0.5;
    const auto model = make_special_family(p, {family_offdiagonal(p, 0.01)});
    const auto s = residual_series(model, 40, 200, 400);
    const auto v = verify_family_rate(p, s, 50, 200);
    EXPECT_EQ(v.predicted_exponent, -1.0);
    ASSERT_TRUE(v.fit.has_value());
    EXPECT_TRUE(v.pass) << v.fit->exponent;
}

TEST(Verdict, ZeroOffdiagonalsGiveZeroRelativeResidual) {
    SpecialFamilyParams p;
    p.kind = FamilyKind::stretched_exp, p.c = 1, p.theta = 0.5, p.kappa = 0.5;
    const auto model = make_special_family(p, {EntrySequence::zero()});
    const auto s = residual_series(model, 5, 30, 60);
    for (const auto& e : s.entries) EXPECT_EQ(fit_value(e, Magnitude::relative), 0.0);
    EXPECT_TRUE(verify_family_rate(p, s, 5, 30).pass);
}

TEST(Gram, IdentityLike) {
    const auto j = gram_of_jacobi(EntrySequence::zero(), EntrySequence::constant(1.0), EntrySequence::zero());
    const auto g = gram_section(j, 10);
    for (Index i = 1; i <= 10; ++i) EXPECT_EQ(g(i, i), 1.0);
    EXPECT_EQ(g(2, 1), 0.0);
    EXPECT_EQ(g(3, 1), 0.0);
}

TEST(Gram, BidiagonalHandExample) {
    // J = [[1, 1, 0], [0, 2, 1], [0, 0, 3]]: J^T J = [[1, 1, 0], [1, 5, 2], [0, 2, 10]].
    const auto j = gram_of_jacobi(EntrySequence::zero(), EntrySequence::table({1, 2, 3}),
                                  EntrySequence::table({1, 1}));
    const auto g = gram_section(j, 3);
    EXPECT_EQ(g(1, 1), 1.0);
    EXPECT_EQ(g(2, 1), 1.0);
    EXPECT_EQ(g(2, 2), 5.0);
    EXPECT_EQ(g(3, 2), 2.0);
    EXPECT_EQ(g(3, 1), 0.0);
    EXPECT_EQ(g(3, 3), 10.0);
    const Eigen::MatrixXd jd = jacobi_dense(j, 3);
    EXPECT_EQ((jd.transpose() * jd - g.to_dense()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gram, SingularValuesMatchOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<double> a(51), b(51), c(51);
    for (auto* v : {&a, &b, &c})
        for (double& x : *v) x = u(rng);
    const auto j = gram_of_jacobi(EntrySequence::table(c), EntrySequence::table(b), EntrySequence::table(a));
    const auto x = singular_values_via_gram(j, 50);
    const auto y = singular_values_dense_oracle(j, 50);
    const Eigen::VectorXd svd = Eigen::JacobiSVD<Eigen::MatrixXd>(jacobi_dense(j, 50)).singularValues();
    const double scale = y.back();
    for (std::size_t k = 0; k < x.size(); ++k) {
        EXPECT_NEAR(x[k], y[k], 1e-8 * scale);
        EXPECT_NEAR(x[k], svd(static_cast<Eigen::Index>(x.size() - 1 - k)), 1e-8 * scale);
    }
}
