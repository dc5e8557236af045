#include <gtest/gtest.h>

#include <cmath>

#include "boundkit/inequalities.hpp"
#include "corpus.hpp"

using namespace boundkit;

TEST(Ilt, ZeroPotentialGivesZeros) {
    const auto r = ilt_check_a(Potential::zero(), 0.5, Domain::whole_line(), 1e-4);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
    ASSERT_TRUE(r.ratio);
    EXPECT_EQ(*r.ratio, 0.0);
}

TEST(Ilt, SquareRatioIsFinite) {
    const auto r = ilt_check_a(Potential::square(0.5), 0.5, Domain::whole_line(), 1e-6);
    EXPECT_NEAR(r.lhs, 1.0, 1e-14);
    ASSERT_TRUE(r.ratio);
    EXPECT_NEAR(r.rhs, std::sqrt(0.15396079635180626), 1e-8);
    EXPECT_TRUE(std::isfinite(*r.ratio));
}

TEST(Ilt, RatioIsRescaleInvariantAtHalf) {
    // g^2 V(g x) scales both sides by g at p = 1/2
    const auto v = Potential::square(0.5);
    const auto a = ilt_check_a(v, 0.5, Domain::whole_line(), 1e-6);
    const auto b = ilt_check_a(rescale(v, 2.0), 0.5, Domain::whole_line(), 1e-6);
    EXPECT_NEAR(*a.ratio, *b.ratio, 1e-6 * *a.ratio);
}

TEST(Ilt, VariantARejectsSignIndefinite) {
    EXPECT_THROW(ilt_check_a(Potential::dipole(0.3), 0.5, Domain::whole_line(), 1e-4), InvalidArgument);
    EXPECT_THROW(ilt_check_a(Potential::square(0.3), 0.7, Domain::whole_line(), 1e-4), InvalidArgument);
}

TEST(Ilt, VariantBChecksGroundState) {
    const auto v = Potential::square(0.5);
    const auto r = ilt_check_b(v, 0.5, 1.0, Domain::whole_line(), 1e-6);
    // two unit cells with |V| integral 0.5 each
    EXPECT_NEAR(r.lhs, 2.0 * 0.5, 1e-14);
    EXPECT_THROW(ilt_check_b(v, 0.5, 0.1, Domain::whole_line(), 1e-6), InvalidArgument);
}

TEST(Positivity, FactoredOperatorOnCorpus) {
    for (const auto& m : corpus::members()) {
        const auto d = corpus::decompose(m);
        const auto r = positivity_check(d.W, d.domain);
        EXPECT_TRUE(r.nonneg) << m.name;
        EXPECT_GE(r.ground, -1e-7) << m.name;
    }
}

TEST(Positivity, FreeBoxGroundState) {
    const double L = 10.0;
    const auto r = positivity_check(GridFunction(), {0.0, L});
    const double pi = std::numbers::pi;
    EXPECT_NEAR(r.ground, pi * pi / (L * L), 1e-4 * pi * pi / (L * L) + 1e-10);
}

TEST(Correction, ReconstructsCellAverages) {
    // slope(W) + avg(W^2) + V0 = avg(V) on every cell
    for (const auto& name : {"square", "dipole"}) {
        corpus::Member m;
        for (const auto& c : corpus::members())
            if (c.name == name) m = c;
        const auto d = corpus::decompose(m);
        const auto c = correction_potential(d);
        EXPECT_TRUE(std::isfinite(c.l1_norm)) << name;
        const auto xs = d.W.breakpoints();
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const auto w = d.W.piece(i);
            double iv = 0.0;
            for (const auto& p : m.V.pieces(w.a, w.b)) iv += 0.5 * p.width() * (p.va + p.vb);
            const double lhs = w.slope() + integral_sq(w) / w.width() + c.V0.values()[i];
            ASSERT_NEAR(lhs, iv / w.width(), 1e-9 * (1.0 + std::abs(w.slope()))) << name << " cell " << i;
        }
    }
}

TEST(LengthMoment, ConstantAndDiagnostic) {
    EXPECT_NEAR(length_moment_constant(0.5), 4.0 * 4.0 * 2.0 / 0.5, 1e-12);
    corpus::Member m = corpus::members()[1];
    const auto d = corpus::decompose(m);
    const auto spec = decomposition_spectrum(m.V, d);
    const auto r = length_moment_diag(d, spec, 0.5);
    EXPECT_GT(r.sum_L, 0.0);
    EXPECT_TRUE(r.holds);
    EXPECT_THROW(length_moment_diag(d, spec, 0.0), InvalidArgument);
}
