#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "boundkit/decompose.hpp"
#include "boundkit/eigensolve.hpp"
#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/odecore.hpp"
#include "boundkit/potential.hpp"

namespace boundkit {

struct IltReport {
    double lhs = 0.0;
    double rhs = 0.0;
    std::optional<double> ratio;  // 0 when both sides vanish, absent when only rhs does
    double p = 0.0;
    EigenvalueList spectrum;
    Interval truncation{0.0, 1.0};
};

namespace detail {
inline IltReport ilt_finish(double lhs, double p, EigenvalueList spec, const Interval& iv) {
    IltReport r;
    r.lhs = lhs;
    r.p = p;
    r.rhs = moment_sum(spec, p);
    if (r.rhs > 0.0) r.ratio = lhs / r.rhs;
    else if (lhs == 0.0) r.ratio = 0.0;
    r.spectrum = std::move(spec);
    r.truncation = iv;
    return r;
}
}  // namespace detail

/// lhs = int |V|^(p + 1/2), rhs = sum E_n^p for V <= 0.
inline IltReport ilt_check_a(const Potential& v, double p, const Domain& domain, double e_floor,
                             double tol = 1e-10) {
    if (!(p > 0.0 && p <= 0.5)) throw InvalidArgument("variant a needs p in (0, 1/2]");
    if (!is_nonpositive(v)) throw InvalidArgument("variant a needs V <= 0");
    double lhs = 0.0;
    if (const auto s = v.support())
        for (const auto& pc : v.pieces(s->lo, s->hi)) lhs += integral_pow_abs(pc, p + 0.5);
    const auto rd = resolve_domain(domain, v, e_floor);
    auto spec = merged_spectrum(v, rd.interval, rd.bc, e_floor, tol);
    return detail::ilt_finish(lhs, p, std::move(spec), rd.interval);
}

/// lhs = sum over unit cells [n, n+1] of (int |V|)^(2p), rhs = sum E_n^p,
/// for V <= 0 whose ground state satisfies E_1 <= E0.
inline IltReport ilt_check_b(const Potential& v, double p, double e0, const Domain& domain, double e_floor,
                             double tol = 1e-10) {
    if (!(p >= 0.5)) throw InvalidArgument("variant b needs p >= 1/2");
    if (!is_nonpositive(v)) throw InvalidArgument("variant b needs V <= 0");
    const auto rd = resolve_domain(domain, v, e_floor);
    auto spec = merged_spectrum(v, rd.interval, rd.bc, e_floor, tol);
    if (!spec.empty() && spec.entries.front().E > e0)
        throw InvalidArgument("E_1 = " + std::to_string(spec.entries.front().E) + " exceeds E0 = " +
                              std::to_string(e0));
    double lhs = 0.0;
    if (const auto s = v.support()) {
        const double a = std::max(std::floor(s->lo), rd.interval.lo);
        for (double n = a; n < s->hi; n += 1.0) {
            const double m = interval_norm(v, {n, n + 1.0}, NormKind::L1);
            if (m > 0.0) lhs += std::pow(m, 2.0 * p);
        }
    }
    return detail::ilt_finish(lhs, p, std::move(spec), rd.interval);
}

struct CorrectionPotential {
    GridFunction V0;  // cell averages of Q - W^2
    double l1_norm = 0.0;
};

namespace detail {
/// int_a^b |c - w(x)^2| for linear w, split at the roots.
inline double abs_const_minus_sq(const LinearPiece& w, double c) {
    auto f = [&](double x) { const double y = w.at(x); return c - y * y; };
    std::vector<double> cuts{w.a, w.b};
    if (c > 0.0 && !w.constant()) {
        const double r = std::sqrt(c);
        for (double t : {r, -r}) {
            const double x = w.a + (t - w.va) / w.slope();
            if (x > w.a && x < w.b) cuts.push_back(x);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) s += std::abs(gauss8(f, cuts[i - 1], cuts[i]));
    return s;
}
}  // namespace detail

/// V0 = Q - W^2, so that V = W' + W^2 + V0.
inline CorrectionPotential correction_potential(const Decomposition& d) {
    const auto xs = d.W.breakpoints();
    const auto qv = d.Q.values();
    std::vector<double> avg(qv.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < qv.size(); ++i) {
        const auto w = d.W.piece(i);
        avg[i] = qv[i] - integral_sq(w) / w.width();
        l1 += detail::abs_const_minus_sq(w, qv[i]);
    }
    return {GridFunction(std::vector<double>(xs.begin(), xs.end()), std::move(avg), Interp::PiecewiseConstant),
            l1};
}

struct PositivityReport {
    double ground = 0.0;
    bool nonneg = false;
};

/// Dirichlet ground state of -d^2 + W' + W^2 on I.
inline PositivityReport positivity_check(const GridFunction& w, const Interval& iv, double threshold = -1e-7) {
    if (!iv.finite()) throw InvalidArgument("positivity_check needs a finite interval");
    PositivityReport r;
    double lo = threshold;
    if (count_below_factored(w, iv, lo) > 0) {
        do lo *= 2.0;
        while (count_below_factored(w, iv, lo) > 0);
    }
    double hi = 1e-6;
    while (count_below_factored(w, iv, hi) == 0) hi *= 4.0;
    for (int it = 0; it < 60 && hi - lo > 1e-4 * std::abs(hi) + 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below_factored(w, iv, mid) > 0) hi = mid;
        else lo = mid;
    }
    r.ground = 0.5 * (lo + hi);
    r.nonneg = count_below_factored(w, iv, threshold) == 0;
    return r;
}

inline double length_moment_constant(double p) {
    return std::pow(4.0, 4.0 * p) * 2.0 / (1.0 - std::pow(4.0, -p));
}

struct LengthMomentReport {
    double sum_L = 0.0;  // sum |J|^(-2p) over intervals of families paired with eigenvalues
    double sum_E = 0.0;
    double C = 0.0;
    bool holds = false;
};

inline LengthMomentReport length_moment_diag(const Decomposition& d, const EigenvalueList& spectrum, double p) {
    if (!(p > 0.0)) throw InvalidArgument("length_moment_diag needs p > 0");
    LengthMomentReport r;
    for (const auto& e : d.partition) {
        const auto& f = d.family(e.label.n);
        if (!f.paired()) continue;
        r.sum_L += std::pow(e.interval.length(), -2.0 * p);
    }
    r.sum_E = moment_sum(spectrum, p);
    r.C = length_moment_constant(p);
    r.holds = r.sum_L <= r.C * r.sum_E;
    return r;
}

}  // namespace boundkit
