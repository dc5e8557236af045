#include <gtest/gtest.h>

#include <cmath>
#include <tuple>

#include "boundkit/scattering.hpp"
#include "corpus.hpp"

using namespace boundkit;

TEST(Scattering, SquareWellReflectance) {
    // |r|^2 = g^2 sin^2(2k') / (g^2 sin^2(2k') + 4 k^2 k'^2), k'^2 = k^2 + g
    for (double k : {0.2, 0.7, 2.5}) {
        const double g = 1.0, kp = std::sqrt(k * k + g), s2 = std::pow(std::sin(2.0 * kp), 2);
        const auto d = scattering_data(Potential::square(g), k);
        EXPECT_NEAR(std::norm(d.r()), g * g * s2 / (g * g * s2 + 4.0 * k * k * kp * kp), 1e-10);
        EXPECT_NEAR(d.flux(), 1.0, 1e-10);
    }
}

TEST(Scattering, ZeroPotentialIsTransparent) {
    EXPECT_EQ(std::abs(reflection_coefficient(Potential::zero(), 1.0)), 0.0);
    EXPECT_THROW(reflection_coefficient(Potential::zero(), 0.0), InvalidArgument);
}

TEST(Scattering, FactoredAgreesWithExpanded) {
    // a piecewise-constant W: W' + W^2 is W^2 plus delta spikes; compare flux only
    const auto w = corpus::w_profile(0);
    for (double k : {0.3, 1.0, 4.0}) {
        const auto d = factored_scattering(w, k);
        EXPECT_NEAR(d.flux(), 1.0, 1e-9);
        EXPECT_LT(std::abs(d.r()), 1.0);
    }
}

TEST(Scattering, FactoredFormHasNoBoundStates) {
    EXPECT_EQ(factored_count_whole_line(corpus::w_profile(0), -1e-10), 0);
    EXPECT_EQ(factored_count_whole_line(corpus::w_profile(1), -1e-10), 0);
}

TEST(TraceFormula, ResidualSmallForSmoothProfiles) {
    for (int which : {0, 1}) {
        const auto r = trace_formula_residual(corpus::w_profile(which), 50.0, 200);
        EXPECT_LE(r.residual, 1e-3) << which;
        EXPECT_LE(r.tail_bound, 5e-4) << which;
    }
}

TEST(TraceFormula, ZeroWGivesZero) {
    const auto r = trace_formula_residual(GridFunction::constant(-1.0, 1.0, 0.0), 10.0, 10);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(AngleScan, FreeDecompositionHasNoError) {
    // W = Q = 0 on a dyadic partition
    Decomposition d;
    d.domain = {-8.0, 8.0};
    d.families.push_back({});
    d.families[0].n = 1;
    d.families[0].core = {-1.0, 1.0};
    for (auto [lo, hi, k] : {std::tuple{-8.0, -4.0, -2}, std::tuple{-4.0, -1.0, -1}, std::tuple{-1.0, 1.0, 0},
                             std::tuple{1.0, 4.0, 1}, std::tuple{4.0, 8.0, 2}})
        d.partition.push_back({{lo, hi}, {1, k}, true});
    d.W = GridFunction({-8.0, 8.0}, {0.0, 0.0}, Interp::PiecewiseLinear);
    d.Q = GridFunction::constant(-8.0, 8.0, 0.0);
    for (const auto& row : angle_increment_scan(d, {0.5, 2.0})) {
        EXPECT_NEAR(row.error, 0.0, 1e-9);
        EXPECT_EQ(row.bound, 0.0);
    }
    EXPECT_THROW(angle_increment_scan(d, {0.0}), InvalidArgument);
}

TEST(AngleScan, FreePotentialDecompositionWithinBound) {
    const auto d = run_decomposition(Potential::zero(), Domain::whole_line(), 1e-2);
    for (const auto& row : angle_increment_scan(d, {0.5, 2.0})) EXPECT_LE(std::abs(row.error), row.bound + 1e-8);
}

TEST(AngleScan, ErrorsWithinBoundOnCorpus) {
    for (const auto& m : corpus::members()) {
        const auto d = corpus::decompose(m);
        for (const auto& row : angle_increment_scan(d, {0.5, 1.0, 3.0}))
            EXPECT_LE(std::abs(row.error), row.bound + 1e-8) << m.name << " k=" << row.k << " n=" << row.index;
    }
}

TEST(MaximalFunction, ConstantWClosedForm) {
    // |int_0^c e^{2ikx}| = |sin(k c)| / k, maximized at k c = pi/2 when reachable
    const double k = 2.0;
    EXPECT_NEAR(maximal_function(GridFunction::constant(0.0, 1.0, 1.0), {0.0, 1.0}, k), 1.0 / k, 1e-12);
    EXPECT_NEAR(maximal_function(GridFunction::constant(0.0, 1.0, 1.0), {0.0, 1.0}, 0.5), std::sin(0.5) / 0.5, 1e-12);
}

TEST(MaximalFunction, BoundedByL1Norm) {
    const auto w = corpus::w_profile(1);
    for (double k : {0.1, 1.0, 10.0}) {
        const double m = maximal_function(w, {-1.0, 1.0}, k);
        EXPECT_LE(m, w.integral_abs(-1.0, 1.0) + 1e-12);
        EXPECT_GT(m, 0.0);
    }
}
