#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "boundkit/eigensolve.hpp"
#include "boundkit/errors.hpp"
#include "boundkit/odecore.hpp"
#include "boundkit/potential.hpp"

namespace boundkit {

inline std::string to_string(BumpKind k) { return k == BumpKind::Square ? "square" : "dipole"; }

inline Potential make_bump(BumpKind kind, double g, double center = 0.0) {
    return kind == BumpKind::Square ? Potential::square(g, center) : Potential::dipole(g, center);
}

namespace detail {
/// -sqrt(E) u1 - u2 for u = T(-1, 1; -E) (1, sqrt(E)); zero exactly when the
/// solution decaying on the left also decays on the right.
inline double secular(const Potential& bump, double e) {
    const double s = std::sqrt(e);
    const auto t = transfer_matrix(bump, -e, -1.0, 1.0);
    const auto u = t.apply(1.0, s);
    return -s * u[0] - u[1];
}
}  // namespace detail

/// The single bound state -E of a centered bump.
inline double bump_eigenvalue(BumpKind kind, double g) {
    const auto bump = make_bump(kind, g);
    const int n = count_below_whole_line(bump, 0.0);
    if (n == 0) throw Error("bump has no bound state at this resolution (g too small)");
    if (n > 1) throw InvalidArgument("bump has " + std::to_string(n) + " bound states (g too large)");
    double lo = 0.0, hi = g;
    double flo = detail::secular(bump, lo), fhi = detail::secular(bump, hi);
    if (flo == 0.0) throw Error("bound state at threshold");
    if (flo * fhi > 0.0) throw Error("secular function does not change sign on (0, g)");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = detail::secular(bump, mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// g with bump_eigenvalue(kind, g) = E, by bisection in g.
inline double invert_bump(BumpKind kind, double target) {
    if (!(target > 0.0)) throw InvalidArgument("target eigenvalue must be positive");
    double g = kind == BumpKind::Square ? std::sqrt(target) : std::pow(9.0 * target, 0.25);
    auto energy = [&](double x) {
        try {
            return bump_eigenvalue(kind, x);
        } catch (const InvalidArgument&) {
            return kInf;  // past the uniqueness range
        } catch (const Error&) {
            return 0.0;
        }
    };
    double lo = g, hi = g;
    while (energy(lo) > target) lo *= 0.5;
    int guard = 0;
    while (energy(hi) < target) {
        hi *= 1.5;
        if (++guard > 60) throw InvalidArgument("target eigenvalue out of range");
    }
    if (!std::isfinite(energy(hi))) {
        // shrink towards the largest g that still has a single bound state
        double a = lo, b = hi;
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            if (std::isfinite(energy(m))) a = m;
            else b = m;
        }
        if (energy(a) < target) throw InvalidArgument("target eigenvalue out of range");
        hi = a;
    }
    for (int it = 0; it < 300; ++it) {
        const double m = 0.5 * (lo + hi);
        const double e = energy(m);
        if (std::abs(e - target) <= 1e-12 * target || hi - lo <= 1e-16 * hi) return m;
        if (e < target) lo = m;
        else hi = m;
    }
    return 0.5 * (lo + hi);
}

struct Placement {
    int n = 0;
    double x = 0.0;
    double g = 0.0;
    int candidates = 0;  // doubling steps taken
    std::vector<double> eigenvalues;
};

struct SparseBuild {
    Potential V;
    BumpKind kind = BumpKind::Square;
    std::vector<double> targets;
    std::vector<Placement> placements;
    Interval box{0.0, 1.0};  // (0, 2 x_N), Dirichlet at both ends
};

namespace detail {
/// Entries of the merged list per bump (1 square, 2 dipole).
inline int per_bump(BumpKind k) { return k == BumpKind::Square ? 1 : 2; }

inline bool envelope_ok(const EigenvalueList& l, const std::vector<double>& targets, std::size_t n, BumpKind kind,
                        double slack) {
    const std::size_t m = static_cast<std::size_t>(per_bump(kind));
    if (l.entries.size() != n * m || l.below_floor_plus + l.below_floor_minus != 0) return false;
    for (std::size_t i = 0; i < l.entries.size(); ++i) {
        const double e = targets[i / m];
        if (std::abs(l.entries[i].E - 0.5 * e) > slack * e / 4.0) return false;
        if (kind == BumpKind::Square && l.entries[i].sign != 1) return false;
    }
    return true;
}
}  // namespace detail

/// Places bumps one at a time with E(g_n) = e_n / 2; x_n is found by doubling
/// from max(2, rho x_{n-1}) until the spectrum on (0, 2 x_n) has the right
/// count with every eigenvalue within slack e_i / 4 of its target e_i / 2.
inline SparseBuild place_bumps(const std::vector<double>& e, BumpKind kind, double rho = 10.0, double slack = 0.1,
                               double x_cap = 1e6) {
    if (!(rho > 2.0)) throw InvalidArgument("growth ratio must exceed 2");
    if (!(slack > 0.0 && slack < 1.0)) throw InvalidArgument("slack must lie in (0, 1)");
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!(e[i] > 0.0)) throw InvalidArgument("targets must be positive");
        if (i > 0 && !(e[i] < e[i - 1])) throw InvalidArgument("targets must be strictly decreasing");
    }
    SparseBuild out;
    out.kind = kind;
    out.targets = e;
    if (e.empty()) return out;
    std::vector<pot::Bump> bumps;
    double prev = 0.0;
    for (std::size_t n = 0; n < e.size(); ++n) {
        const double g = invert_bump(kind, 0.5 * e[n]);
        double x = std::max(2.0, rho * prev);
        while (x - 1.0 <= 2.0 * prev) x *= 2.0;
        Placement pl;
        pl.n = static_cast<int>(n) + 1;
        pl.g = g;
        for (;;) {
            auto trial = bumps;
            trial.push_back({kind, g, x});
            const auto v = Potential::sparse(trial);
            const Interval box(0.0, 2.0 * x);
            const auto spec = merged_spectrum(v, box, BoundaryCondition::dirichlet(), e[n] / 8.0, 1e-11);
            ++pl.candidates;
            if (detail::envelope_ok(spec, e, n + 1, kind, slack)) {
                for (const auto& en : spec.entries) pl.eigenvalues.push_back(en.E);
                bumps = std::move(trial);
                out.box = box;
                break;
            }
            x *= 2.0;
            if (x > x_cap)
                throw Error("bump " + std::to_string(n + 1) + " could not be placed below x = " + std::to_string(x_cap));
        }
        pl.x = x;
        out.placements.push_back(pl);
        prev = x;
    }
    out.V = Potential::sparse(bumps);
    return out;
}

struct SparseReport {
    bool pass = false;
    std::size_t expected = 0;
    EigenvalueList spectrum;
    std::vector<std::string> problems;
};

/// Merged spectrum on `box`: N entries (square, all plus) or 2N (dipole), and
/// E_i <= e_i for every entry.
inline SparseReport verify_sparse(const Potential& v, const std::vector<double>& e, BumpKind kind,
                                  const Interval& box) {
    SparseReport r;
    const std::size_t m = static_cast<std::size_t>(detail::per_bump(kind));
    r.expected = e.size() * m;
    if (e.empty()) {
        r.pass = true;
        return r;
    }
    const double floor = *std::min_element(e.begin(), e.end()) / 8.0;
    r.spectrum = merged_spectrum(v, box, BoundaryCondition::dirichlet(), floor, 1e-11);
    if (r.spectrum.entries.size() != r.expected)
        r.problems.push_back("found " + std::to_string(r.spectrum.entries.size()) + " eigenvalues, expected " +
                             std::to_string(r.expected));
    for (std::size_t i = 0; i < r.spectrum.entries.size() && i / m < e.size(); ++i) {
        const auto& en = r.spectrum.entries[i];
        if (en.E > e[i / m])
            r.problems.push_back("E_" + std::to_string(i + 1) + " = " + std::to_string(en.E) + " exceeds target");
        if (kind == BumpKind::Square && en.sign != 1)
            r.problems.push_back("minus-tagged eigenvalue for a nonpositive potential");
    }
    r.pass = r.problems.empty();
    return r;
}

}  // namespace boundkit
