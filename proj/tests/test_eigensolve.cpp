#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "boundkit/eigensolve.hpp"
#include "corpus.hpp"

using namespace boundkit;

namespace {
// Independent oracles: roots of the closed-form secular equations, computed
// once at high precision and frozen here.
constexpr double kSquareHalf = 0.15396079635180626;   // g = 0.5, whole line
constexpr double kDipole03 = 8.253517454893171e-4;    // g = 0.3
constexpr double kDipole1 = 0.05584938790037384;      // g = 1

double square_secular(double g, double E) {
    // even state of a width-2 well: sqrt(g-E) tan(sqrt(g-E)) = sqrt(E)
    const double q = std::sqrt(g - E);
    return q * std::tan(q) - std::sqrt(E);
}
}  // namespace

TEST(Eigensolve, SquareWellMatchesOracle) {
    const auto v = Potential::square(0.5);
    const auto l = merged_spectrum(v, {-3000.0, 3000.0}, BoundaryCondition::dirichlet(), 1e-6, 1e-12);
    ASSERT_EQ(l.size(), 1u);
    EXPECT_EQ(l.entries[0].sign, 1);
    EXPECT_NEAR(l.entries[0].E, kSquareHalf, 1e-10);
    EXPECT_NEAR(square_secular(0.5, l.entries[0].E), 0.0, 1e-9);
}

TEST(Eigensolve, DeepSquareWellHasThreeLevels) {
    // g = 20 on (-20, 20) Dirichlet: three bound states
    const auto v = Potential::square(20.0);
    const auto s = negative_spectrum(v, {-20.0, 20.0}, BoundaryCondition::dirichlet(), 1e-6, 1e-12);
    ASSERT_EQ(s.eigenvalues.size(), 3u);
    EXPECT_NEAR(s.eigenvalues[0], -18.3605198523, 1e-8);
    EXPECT_NEAR(s.eigenvalues[1], -13.5581200428, 1e-8);
    EXPECT_NEAR(s.eigenvalues[2], -6.10846701767, 1e-8);
    // the even levels solve the even secular equation
    EXPECT_NEAR(square_secular(20.0, -s.eigenvalues[0]), 0.0, 1e-6);
    EXPECT_NEAR(square_secular(20.0, -s.eigenvalues[2]), 0.0, 1e-6);
}

TEST(Eigensolve, DipolePairIsSymmetric) {
    for (auto [g, oracle] : {std::pair{0.3, kDipole03}, std::pair{1.0, kDipole1}}) {
        const auto l = merged_spectrum(Potential::dipole(g), {-3000.0, 3000.0}, BoundaryCondition::dirichlet(),
                                       1e-9, 1e-12);
        ASSERT_EQ(l.size(), 2u) << g;
        EXPECT_NE(l.entries[0].sign, l.entries[1].sign);
        EXPECT_NEAR(l.entries[0].E, oracle, 1e-9 * std::max(1.0, oracle) + 1e-8 * oracle);
        EXPECT_NEAR(l.entries[1].E, oracle, 1e-8 * oracle);
    }
}

TEST(Eigensolve, ZeroPotentialHasNoSpectrum) {
    const auto l = merged_spectrum(Potential::zero(), {-50.0, 50.0}, BoundaryCondition::dirichlet(), 1e-6);
    EXPECT_TRUE(l.empty());
    EXPECT_EQ(moment_sum(l, 0.5), 0.0);
}

TEST(Eigensolve, SquareBumpOnlyPlusTagged) {
    const auto l = merged_spectrum(Potential::square(3.0), {-100.0, 100.0}, BoundaryCondition::dirichlet(), 1e-6);
    ASSERT_FALSE(l.empty());
    for (const auto& e : l.entries) EXPECT_EQ(e.sign, 1);
    for (std::size_t i = 1; i < l.size(); ++i) EXPECT_GE(l.entries[i - 1].E, l.entries[i].E);
}

TEST(Eigensolve, WholeLineCountUsesExactTails) {
    EXPECT_EQ(count_below_whole_line(Potential::square(0.5), -0.1), 1);
    EXPECT_EQ(count_below_whole_line(Potential::square(0.5), -0.2), 0);
    EXPECT_EQ(count_below_whole_line(Potential::zero(), -1e-9), 0);
}

TEST(Eigensolve, NeumannBelowDirichlet) {
    const auto v = Potential::square(0.5, 2.0);
    const auto n = lowest_eigenvalue(v, {0.0, 400.0}, BoundaryCondition::neumann());
    const auto d = lowest_eigenvalue(v, {0.0, 400.0}, BoundaryCondition::dirichlet());
    ASSERT_TRUE(n && d);
    EXPECT_LT(*n, *d);
}

TEST(Eigensolve, MomentSumCountsAtZero) {
    EigenvalueList l;
    l.entries = {{0.25, 1, 10}, {0.04, -1, 10}};
    EXPECT_DOUBLE_EQ(moment_sum(l, 0.0), 2.0);
    EXPECT_DOUBLE_EQ(moment_sum(l, 0.5), 0.7);
}

TEST(Eigenfunction, FreeBoxGivesSine) {
    const double pi = std::numbers::pi;
    const auto ef = solve_eigenfunction(Potential::zero(), 1.0, {0.0, pi}, BoundaryCondition::dirichlet());
    const double c = std::sqrt(2.0 / pi);
    for (double x : {0.3, 1.0, 2.0, 3.0}) EXPECT_NEAR(std::abs(ef(x)[0]), c * std::sin(x), 1e-7);
    EXPECT_THROW(solve_eigenfunction(Potential::zero(), 1.2, {0.0, pi}, BoundaryCondition::dirichlet()),
                 NotAnEigenvalue);
}

TEST(Eigenfunction, SquareGroundStateTails) {
    const auto v = Potential::square(0.5);
    const Interval box{-60.0, 60.0};
    const auto e = lowest_eigenvalue(v, box, BoundaryCondition::dirichlet(), 1e-13);
    ASSERT_TRUE(e);
    const auto ef = solve_eigenfunction(v, *e, box, BoundaryCondition::dirichlet());
    const double kap = std::sqrt(-*e);
    // even and single-signed
    EXPECT_NEAR(ef(-0.7)[0], ef(0.7)[0], 1e-7);
    for (double x = -40.0; x <= 40.0; x += 0.5) EXPECT_GT(ef(x)[0] * ef(0.0)[0], 0.0);
    // log-slope of the tail is -sqrt(E)
    const double s = (std::log(std::abs(ef(20.0)[0])) - std::log(std::abs(ef(10.0)[0]))) / 10.0;
    EXPECT_NEAR(s, -kap, 1e-5);
}

TEST(Eigenfunction, JacobiIdentity) {
    // int (phi f)'^2 + V (phi f)^2 - int phi'^2 f^2 - lambda int phi^2 f^2 = 0
    const auto v = Potential::square(0.5);
    const Interval box{-40.0, 40.0};
    const double lam = *lowest_eigenvalue(v, box, BoundaryCondition::dirichlet(), 1e-13);
    const auto ef = solve_eigenfunction(v, lam, box, BoundaryCondition::dirichlet());
    struct Tent { double a, c, b; };
    for (const Tent t : {Tent{-3.0, 0.2, 2.5}, Tent{-1.5, -0.4, 6.0}, Tent{0.5, 1.0, 1.7}}) {
        auto phi = [&](double x) { return x < t.c ? (x - t.a) / (t.c - t.a) : (t.b - x) / (t.b - t.c); };
        auto dphi = [&](double x) { return x < t.c ? 1.0 / (t.c - t.a) : -1.0 / (t.b - t.c); };
        double lhs = 0.0, scale = 0.0;
        for (auto [a, b] : {std::pair{t.a, t.c}, std::pair{t.c, t.b}}) {
            const double kin = ef.integrate([&](double x, double f, double df) {
                const double g = dphi(x) * f + phi(x) * df;
                return g * g;
            }, a, b);
            const double pot = ef.integrate([&](double x, double f, double) { return v(x) * phi(x) * phi(x) * f * f; }, a, b);
            const double dp = ef.integrate([&](double x, double f, double) { return dphi(x) * dphi(x) * f * f; }, a, b);
            const double en = ef.integrate([&](double x, double f, double) { return phi(x) * phi(x) * f * f; }, a, b);
            lhs += kin + pot - dp - lam * en;
            scale += kin + std::abs(pot) + dp + std::abs(lam * en);
        }
        EXPECT_LE(std::abs(lhs), 1e-6 * scale);
    }
}

TEST(Domain, ResolveAddsDecayLength) {
    const auto rd = resolve_domain(Domain::whole_line(), Potential::square(0.5), 1e-4);
    EXPECT_DOUBLE_EQ(rd.interval.hi, 1.0 + 10.0 / 1e-2);
    EXPECT_DOUBLE_EQ(rd.interval.lo, -rd.interval.hi);
    EXPECT_THROW(resolve_domain(Domain::half_dirichlet(), Potential::square(0.5), 1e-4), InvalidArgument);
}
