#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "boundkit/decompose.hpp"
#include "boundkit/dopri5.hpp"
#include "boundkit/eigensolve.hpp"
#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/odecore.hpp"
#include "boundkit/potential.hpp"

namespace boundkit {

using cplx = std::complex<double>;

/// Left of the support f = a e^{ikx} + b e^{-ikx}; right of it f = e^{ikx}.
struct ScatteringData {
    cplx a, b;
    cplx r() const { return b / a; }
    /// |a|^2 - |b|^2, equal to 1 by flux conservation
    double flux() const { return std::norm(a) - std::norm(b); }
};

namespace detail {
inline ScatteringData scatter_from_transfer(const TransferMatrix& t, double k, double xl, double xr) {
    using namespace std::complex_literals;
    const cplx er = std::exp(1i * k * xr);
    const auto ti = t.inverse();
    const cplx f = ti.m11 * er + ti.m12 * (1i * k * er);
    const cplx df = ti.m21 * er + ti.m22 * (1i * k * er);
    const cplx a = std::exp(-1i * k * xl) * (f + df / (1i * k)) / 2.0;
    const cplx b = std::exp(1i * k * xl) * (f - df / (1i * k)) / 2.0;
    return {a, b};
}
}  // namespace detail

inline ScatteringData scattering_data(const Potential& v, double k) {
    if (!(k > 0.0)) throw InvalidArgument("scattering needs k > 0");
    const auto s = v.support();
    if (!s) return {1.0, 0.0};
    return detail::scatter_from_transfer(transfer_matrix(v, k * k, s->lo, s->hi), k, s->lo, s->hi);
}

inline cplx reflection_coefficient(const Potential& v, double k) { return scattering_data(v, k).r(); }

// ---------------------------------------------------------------- W' + W^2

namespace detail {
inline Interval grid_span(const GridFunction& w) {
    if (w.empty()) throw InvalidArgument("W grid is empty");
    return {w.lo(), w.hi()};
}
}  // namespace detail

/// Transfer matrix of -y'' + (W' + W^2) y = E y across the grid range of W,
/// through y' = W y + z, z' = -E y - W z. Outside the support z = y', so this
/// maps (y, y') to (y, y') even when W jumps at the ends.
inline TransferMatrix factored_transfer(const GridFunction& w, double e, double tol = 1e-12) {
    const auto iv = detail::grid_span(w);
    const auto pieces = detail::w_pieces(w, iv.lo, iv.hi);
    const auto stops = detail::piece_stops(pieces, false);
    auto rhs = [&](std::size_t seg, double x, const Vec<4>& y) -> Vec<4> {
        const double wx = pieces[seg].at(x);
        return {wx * y[0] + y[1], -e * y[0] - wx * y[1], wx * y[2] + y[3], -e * y[2] - wx * y[3]};
    };
    const auto y = dopri5<4>(rhs, iv.lo, Vec<4>{1.0, 0.0, 0.0, 1.0}, stops, Tolerance{tol, tol * 1e-2});
    return {y[0], y[2], y[1], y[3]};
}

inline ScatteringData factored_scattering(const GridFunction& w, double k) {
    if (!(k > 0.0)) throw InvalidArgument("scattering needs k > 0");
    const auto iv = detail::grid_span(w);
    return detail::scatter_from_transfer(factored_transfer(w, k * k), k, iv.lo, iv.hi);
}

/// Bound states of -d^2 + W' + W^2 on the whole line below E < 0 (W compactly
/// supported on its grid range).
inline int factored_count_whole_line(const GridFunction& w, double e) {
    if (!(e < 0.0)) throw InvalidArgument("factored_count_whole_line needs E < 0");
    const auto iv = detail::grid_span(w);
    const double kap = std::sqrt(-e);
    const double th = detail::factored_theta(w, e, iv.lo, iv.hi, std::atan2(1.0, kap));
    return detail::count_from_angles(th, std::atan2(1.0, -kap));
}

struct TraceFormulaReport {
    double lhs = 0.0;  // (1/pi) int_{-kmax}^{kmax} ln(1 - |r|^2) dk
    double rhs = 0.0;  // -int W^2
    double residual = 0.0;
    double tail_bound = 0.0;
    double r_at_kmax = 0.0;
    double r_at_zero = 0.0;
};

/// Composite 8-point Gauss-Legendre over (0, kmax] on n_k panels, doubled by
/// evenness; ln(1 - |r|^2) is evaluated as -2 ln|a|.
inline TraceFormulaReport trace_formula_residual(const GridFunction& w, double kmax, int n_k) {
    if (!(kmax > 0.0) || n_k < 1) throw InvalidArgument("trace formula needs kmax > 0 and n_k >= 1");
    TraceFormulaReport r;
    if (w.empty() || w.max_abs() == 0.0) return r;
    if (factored_count_whole_line(w, -1e-12) > 0) throw Error("negative eigenvalue found for W' + W^2");
    double s = 0.0;
    const double hk = kmax / n_k;
    for (int i = 0; i < n_k; ++i)
        s += detail::gauss8([&](double k) { return -2.0 * std::log(std::abs(factored_scattering(w, k).a)); },
                            i * hk, (i + 1) * hk);
    r.lhs = 2.0 * s / std::numbers::pi;
    r.rhs = -w.integral_sq(w.lo(), w.hi());
    r.residual = std::abs(r.lhs - r.rhs);
    r.r_at_kmax = std::abs(factored_scattering(w, kmax).r());
    r.r_at_zero = std::abs(factored_scattering(w, 1e-8 * kmax).r());
    const double c2 = std::pow(kmax * r.r_at_kmax, 2.0);
    r.tail_bound = c2 < kmax * kmax ? (2.0 / std::numbers::pi) * c2 / kmax / (1.0 - c2 / (kmax * kmax)) : kInf;
    return r;
}

// ---------------------------------------------------------------- Prufer scan

struct AngleRow {
    std::size_t index = 0;  // position of the interval from the left, starting at 1
    IntervalLabel label;
    double k = 0.0;
    double length = 0.0;
    double error = 0.0;  // psi(a_n) - psi(a_{n-1}) - 2 k L_n
    double bound = 0.0;  // 2 ||W||_1 + ||rho||_1 on the interval
};

/// Continuous Prufer evolution across the partition, interval by interval.
inline std::vector<AngleRow> angle_increment_scan(const Decomposition& d, const std::vector<double>& kgrid) {
    std::vector<AngleRow> rows;
    for (double k : kgrid) {
        if (!(k > 0.0)) throw InvalidArgument("k must be positive");
        PruferState st{0.0, 0.0, d.domain.lo, k};
        std::size_t idx = 0;
        for (const auto& p : d.partition) {
            const auto res = prufer_evolve_tracked(d.W, d.Q, st, p.interval.hi);
            AngleRow row;
            row.index = ++idx;
            row.label = p.label;
            row.k = k;
            row.length = p.interval.length();
            row.error = res.state.psi - st.psi - 2.0 * k * row.length;
            row.bound = 2.0 * d.W.integral_abs(p.interval.lo, p.interval.hi) + res.rho_l1;
            rows.push_back(row);
            st = res.state;
        }
    }
    return rows;
}

// ---------------------------------------------------------------- maximal function

namespace detail {
/// int_a^b w(x) e^{i om x} dx for linear w.
inline cplx oscillatory_cell(const LinearPiece& p, double a, double b, double om) {
    using namespace std::complex_literals;
    const double wa = p.at(a), wb = p.at(b);
    const double del = b - a;
    if (om * del < 1e-2) {
        auto re = [&](double x) { return p.at(x) * std::cos(om * x); };
        auto im = [&](double x) { return p.at(x) * std::sin(om * x); };
        return {gauss8(re, a, b), gauss8(im, a, b)};
    }
    const double beta = (wb - wa) / del;
    // local antiderivative in s = x - a: e^{i om s} [(wa + beta s)/(i om) + beta/om^2]
    auto F = [&](double s) { return std::exp(1i * (om * s)) * ((wa + beta * s) / (1i * om) + beta / (om * om)); };
    return std::exp(1i * (om * a)) * (F(del) - F(0.0));
}
}  // namespace detail

/// max over c in I of |int_{lo(I)}^c W(x) e^{2ikx} dx|.
inline double maximal_function(const GridFunction& w, const Interval& iv, double k) {
    if (!iv.finite()) throw InvalidArgument("maximal_function needs a finite interval");
    if (!(k > 0.0)) throw InvalidArgument("maximal_function needs k > 0");
    if (w.empty()) return 0.0;
    const double om = 2.0 * k;
    cplx acc = 0.0;
    double best = 0.0;
    for (const auto& p : w.pieces(iv.lo, iv.hi)) {
        if (p.va == 0.0 && p.vb == 0.0) {
            continue;
        }
        auto partial = [&](double c) { return std::abs(acc + detail::oscillatory_cell(p, p.a, c, om)); };
        constexpr int n = 16;
        int ib = 0;
        double vb = -1.0;
        for (int i = 0; i <= n; ++i) {
            const double c = p.a + p.width() * i / n;
            const double v = partial(c);
            if (v > vb) {
                vb = v;
                ib = i;
            }
        }
        // golden-section refinement around the best sample
        double lo = p.a + p.width() * std::max(0, ib - 1) / n;
        double hi = p.a + p.width() * std::min(n, ib + 1) / n;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = partial(x1), f2 = partial(x2);
        for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = partial(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = partial(x1);
            }
        }
        best = std::max({best, vb, f1, f2});
        acc += detail::oscillatory_cell(p, p.a, p.b, om);
        best = std::max(best, std::abs(acc));
    }
    return best;
}

}  // namespace boundkit
