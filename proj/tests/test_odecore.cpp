#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "boundkit/odecore.hpp"
#include "corpus.hpp"

using namespace boundkit;

TEST(Transfer, FreeMatchesClosedForm) {
    const double k = 1.3, L = 2.0;
    const auto t = transfer_matrix(Potential::zero(), k * k, 0.0, L);
    EXPECT_NEAR(t.m11, std::cos(k * L), 1e-12);
    EXPECT_NEAR(t.m12, std::sin(k * L) / k, 1e-12);
    EXPECT_NEAR(t.m21, -k * std::sin(k * L), 1e-12);
    EXPECT_NEAR(t.m22, std::cos(k * L), 1e-12);
}

TEST(Transfer, DeterminantIsOne) {
    for (const auto& m : corpus::members()) {
        for (double e : {-0.2, -1e-3, 0.0, 0.5, 4.0}) {
            const auto t = transfer_matrix(m.V, e, -3.0, 200.0);
            const double scale = std::max(1.0, std::abs(t.m11 * t.m22));
            EXPECT_NEAR(t.det(), 1.0, 1e-9 * scale) << m.name << " E=" << e;
        }
    }
}

TEST(Transfer, ComposesOverSplit) {
    const auto v = Potential::dipole(0.7);
    const auto a = transfer_matrix(v, 0.3, -2.0, 0.2);
    const auto b = transfer_matrix(v, 0.3, 0.2, 3.0);
    const auto c = transfer_matrix(v, 0.3, -2.0, 3.0);
    const auto ab = b * a;
    EXPECT_NEAR(ab.m11, c.m11, 1e-10);
    EXPECT_NEAR(ab.m12, c.m12, 1e-10);
    EXPECT_NEAR(ab.m21, c.m21, 1e-10);
    EXPECT_NEAR(ab.m22, c.m22, 1e-10);
}

TEST(Integrate, SineOnFreeLine) {
    const auto tr = integrate_schrodinger(Potential::zero(), 1.0, {0.0, 10.0}, 0.0, 1.0, 1e-12);
    for (double x : {0.5, 3.0, 7.7, 10.0}) {
        EXPECT_NEAR(tr.at(x)[0], std::sin(x), 1e-9);
        EXPECT_NEAR(tr.at(x)[1], std::cos(x), 1e-9);
    }
}

TEST(Integrate, OverflowPolicyThrows) {
    EXPECT_THROW(integrate_schrodinger(Potential::zero(), -100.0, {0.0, 100.0}, 0.0, 1.0, 1e-10, Overflow::Throw),
                 IntegrationOverflow);
    const auto tr = integrate_schrodinger(Potential::zero(), -100.0, {0.0, 100.0}, 0.0, 1.0);
    // y ~ sinh(10 x)/10
    EXPECT_NEAR(tr.log_abs_y(100.0), 1000.0 - std::log(20.0), 1e-6);
}

TEST(ZeroCount, FreeDirichletBox) {
    // sin(k x) on (0, 10) with k = 1 has 3 interior zeros
    EXPECT_EQ(zero_count(Potential::zero(), 1.0, {0.0, 10.0}, 0.0), 3);
    EXPECT_EQ(zero_count(Potential::zero(), -1.0, {0.0, 10.0}, 0.0), 0);
}

TEST(ZeroCount, MonotoneInEnergy) {
    for (const auto& m : corpus::members()) {
        int prev = -1;
        for (int i = 0; i <= 60; ++i) {
            const double e = -0.3 + 0.01 * i;
            const int z = zero_count(m.V, e, {-200.0, 200.0}, 0.0);
            EXPECT_GE(z, prev) << m.name << " E=" << e;
            prev = z;
        }
    }
}

TEST(Riccati, ConstantPotentialIsCoth) {
    // gamma' = V + eps - gamma^2 with a pole at 0 and V = 0: gamma = sqrt(eps) coth(sqrt(eps) x)
    const double eps = 0.25;
    const auto g = riccati_log_derivative(Potential::zero(), 1, eps, {0.0, 4.0}, Side::Left, RiccatiSeed::make_pole());
    for (double x : {0.5, 1.0, 3.0}) EXPECT_NEAR(g(x), 0.5 / std::tanh(0.5 * x), 1e-8);
}

TEST(Riccati, BlowUpSignalsHypothesisViolation) {
    // deep well: -u'' - 4 chi u has energy below -eps on (-1, 1)
    EXPECT_THROW(riccati_log_derivative(Potential::square(4.0), 1, 0.01, {-3.0, 3.0}, Side::Left,
                                        RiccatiSeed::make_pole()),
                 HypothesisViolation);
}

TEST(Prufer, FreeIncrementIsExact) {
    const GridFunction none;
    const auto r = prufer_evolve_tracked(none, none, {0.0, 0.3, 0.0, 1.7}, 5.0);
    EXPECT_NEAR(r.state.psi - 0.3, 2.0 * 1.7 * 5.0, 1e-10);
    EXPECT_NEAR(r.state.logR, 0.0, 1e-12);
}

TEST(Prufer, MatchesDirectSolution) {
    // y = R sin(psi/2), (y' - W y)/k = R cos(psi/2)
    for (const auto& name : {"square", "dipole", "sparse3"}) {
        corpus::Member m;
        for (const auto& c : corpus::members())
            if (c.name == name) m = c;
        const auto d = corpus::decompose(m);
        const double k = 0.8;
        const double x0 = d.domain.lo;
        const double y0 = 0.3, dy0 = 0.9;
        const double w0 = d.W(x0);
        const double u0 = (dy0 - w0 * y0) / k;
        PruferState st{0.5 * std::log(y0 * y0 + u0 * u0), 2.0 * std::atan2(y0, u0), x0, k};
        const double x1 = std::min(d.domain.hi, 120.0);
        const auto tr = integrate_schrodinger(m.V, k * k, {x0, x1}, y0, dy0, 1e-12);
        double worst = 0.0, scale = 0.0;
        for (int i = 1; i <= 40; ++i) {
            const double x = x0 + (x1 - x0) * i / 40.0;
            st = prufer_evolve(d.W, d.Q, st, x, 1e-12);
            const double yp = std::exp(st.logR) * std::sin(0.5 * st.psi);
            const double yd = tr.at(x)[0];
            worst = std::max(worst, std::abs(yp - yd));
            scale = std::max(scale, std::abs(yd));
        }
        EXPECT_LE(worst, 1e-6 * scale) << name;
    }
}

TEST(Factored, CountsMatchExpandedPotential) {
    // W' + W^2 has no negative spectrum
    const auto w = corpus::w_profile(1);
    EXPECT_EQ(count_below_factored(w, {-5.0, 5.0}, -1e-9), 0);
    EXPECT_EQ(count_below_factored(w, {0.0, std::numbers::pi}, -1e-9), 0);
    EXPECT_EQ(count_below_factored(GridFunction(), {0.0, std::numbers::pi}, 1.0 + 1e-9), 1);
}

TEST(Dirac, ZAndYSystemsAgree) {
    const auto w = corpus::w_profile(0);
    const double k = 1.1;
    const ComplexPair z0{1.0, 0.25};
    const auto z1 = dirac_evolve_Z(w, k, {-1.0, 1.0}, z0);
    const auto y1 = dirac_evolve_Y(w, k, {-1.0, 1.0}, z_to_y(z0, k, -1.0));
    const auto back = y_to_z(y1, k, 1.0);
    EXPECT_NEAR(std::abs(back[0] - z1[0]), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(back[1] - z1[1]), 0.0, 1e-9);
}
