#include <gtest/gtest.h>

#include "boundkit/potential.hpp"

using namespace boundkit;

TEST(Potential, SquareValuesAndSupport) {
    const auto v = Potential::square(0.5, 2.0);
    EXPECT_DOUBLE_EQ(v(2.0), -0.5);
    EXPECT_DOUBLE_EQ(v(0.5), 0.0);
    EXPECT_DOUBLE_EQ(v(3.5), 0.0);
    const auto s = v.support();
    ASSERT_TRUE(s);
    EXPECT_DOUBLE_EQ(s->lo, 1.0);
    EXPECT_DOUBLE_EQ(s->hi, 3.0);
    EXPECT_TRUE(is_nonpositive(v));
}

TEST(Potential, DipoleIsSignIndefinite) {
    const auto v = Potential::dipole(0.3);
    EXPECT_DOUBLE_EQ(v(-0.5), 0.3);
    EXPECT_DOUBLE_EQ(v(0.5), -0.3);
    EXPECT_FALSE(is_nonpositive(v));
    EXPECT_NEAR(interval_norm(v, {-5.0, 5.0}, NormKind::L1), 0.6, 1e-15);
}

TEST(Potential, ZeroHasNoSupport) {
    const auto v = Potential::zero();
    EXPECT_TRUE(v.is_zero());
    EXPECT_FALSE(v.support());
    EXPECT_EQ(v.max_abs(), 0.0);
}

TEST(Potential, RejectsNonpositiveStrength) {
    EXPECT_THROW(Potential::square(0.0), InvalidArgument);
    EXPECT_THROW(Potential::dipole(-1.0), InvalidArgument);
}

TEST(Potential, SparseNeedsDisjointSupports) {
    EXPECT_THROW(Potential::sparse({{BumpKind::Square, 0.1, 0.0}, {BumpKind::Square, 0.1, 1.5}}), InvalidArgument);
    const auto v = Potential::sparse({{BumpKind::Square, 0.2, 10.0}, {BumpKind::Dipole, 0.1, 0.0}});
    EXPECT_EQ(v.nonzero_regions().size(), 2u);
    EXPECT_NEAR(interval_norm(v, {-1.0, 11.0}, NormKind::L1), 0.4 + 0.2, 1e-14);
}

TEST(Potential, RescaleLaw) {
    // g^2 V(g x): the L1 norm scales by g
    const auto v = Potential::square(0.5);
    const auto w = rescale(v, 2.0);
    EXPECT_DOUBLE_EQ(w(0.25), 4.0 * -0.5);
    EXPECT_DOUBLE_EQ(w(0.75), 0.0);
    EXPECT_NEAR(interval_norm(w, {-1.0, 1.0}, NormKind::L1), 2.0, 1e-14);
}

TEST(Potential, NegateTwiceIsIdentity) {
    const auto v = Potential::dipole(0.3);
    const auto n = negate(v);
    EXPECT_DOUBLE_EQ(n(-0.5), -0.3);
    EXPECT_DOUBLE_EQ(negate(n)(-0.5), 0.3);
}

TEST(Potential, SampledKeepsJumps) {
    const auto g = sample(Potential::square(1.0), {-2.0, 2.0}, 0.1);
    EXPECT_EQ(g.interp(), Interp::PiecewiseConstant);
    EXPECT_DOUBLE_EQ(g(0.0), -1.0);
    EXPECT_DOUBLE_EQ(g(-1.0), -1.0);  // right limit
    EXPECT_DOUBLE_EQ(g(1.0), 0.0);
}
