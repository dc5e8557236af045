#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/odecore.hpp"
#include "boundkit/potential.hpp"

namespace boundkit {

/// y cos(alpha) - y' sin(alpha) = 0 at the left endpoint.
struct BoundaryCondition {
    double alpha = 0.0;

    BoundaryCondition() = default;
    explicit BoundaryCondition(double a) : alpha(a) {
        if (!(a >= 0.0 && a < std::numbers::pi))
            throw InvalidArgument("boundary angle must lie in [0, pi)");
    }
    static BoundaryCondition dirichlet() { return BoundaryCondition(0.0); }
    static BoundaryCondition neumann() { return BoundaryCondition(0.5 * std::numbers::pi); }
    bool is_dirichlet() const noexcept { return alpha == 0.0; }
    bool is_neumann() const noexcept { return alpha == 0.5 * std::numbers::pi; }
};

namespace detail {
inline int count_from_angles(double theta, double beta) {
    if (!(theta > beta)) return 0;
    return static_cast<int>(std::ceil((theta - beta) / std::numbers::pi));
}
}  // namespace detail

/// Eigenvalues of -d^2 + V on I strictly below E (bc at lo, Dirichlet at hi).
inline int count_below(const Potential& v, const Interval& iv, const BoundaryCondition& bc, double e) {
    if (!iv.finite()) throw InvalidArgument("count_below needs a finite interval");
    const double th = detail::prufer_theta(v, e, iv.lo, iv.hi, bc.alpha);
    return detail::count_from_angles(th, std::numbers::pi);
}

/// Eigenvalues below E < 0 on the whole line for compactly supported V. The
/// exterior solutions are exact exponentials, so no truncation is involved.
inline int count_below_whole_line(const Potential& v, double e) {
    if (!(e <= 0.0)) throw InvalidArgument("count_below_whole_line needs E <= 0");
    const auto s = v.support();
    if (!s) return 0;
    const double kap = std::sqrt(-e);
    const double th = detail::prufer_theta(v, e, s->lo, s->hi, std::atan2(1.0, kap));
    return detail::count_from_angles(th, std::atan2(1.0, -kap));
}

namespace detail {

inline double spectral_lower_bound(const Potential& v, const Interval& iv, const BoundaryCondition& bc) {
    double lo = -v.max_abs() - 1.0;
    while (count_below(v, iv, bc, lo) > 0) lo *= 2.0;
    return lo;
}

/// Smallest E with count_below(E) >= j, bisected inside (lo, hi] to relative tol.
inline double bisect_level(const Potential& v, const Interval& iv, const BoundaryCondition& bc, int j,
                           double lo, double hi, double tol) {
    for (int it = 0; it < 400; ++it) {
        if (hi - lo <= tol * std::max(std::abs(lo), std::abs(hi)) || hi - lo < 1e-300) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_below(v, iv, bc, mid) >= j) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Ground state of -d^2 + V on I if it is negative.
inline std::optional<double> lowest_eigenvalue(const Potential& v, const Interval& iv,
                                               const BoundaryCondition& bc, double tol = 1e-10) {
    if (count_below(v, iv, bc, 0.0) == 0) return std::nullopt;
    const double lo = detail::spectral_lower_bound(v, iv, bc);
    return detail::bisect_level(v, iv, bc, 1, lo, 0.0, tol);
}

struct Spectrum {
    std::vector<double> eigenvalues;  // negative, ascending
    int below_floor = 0;              // eigenvalues in [-E_floor, 0) not resolved
};

/// Eigenvalues in (-inf, -E_floor), each bisected between count jumps.
inline Spectrum negative_spectrum(const Potential& v, const Interval& iv, const BoundaryCondition& bc,
                                  double e_floor, double tol = 1e-10) {
    if (!(e_floor > 0.0)) throw InvalidArgument("E_floor must be positive");
    Spectrum out;
    const int total = count_below(v, iv, bc, 0.0);
    if (total == 0) return out;
    const int n = count_below(v, iv, bc, -e_floor);
    out.below_floor = total - n;
    if (n == 0) return out;
    double lo = detail::spectral_lower_bound(v, iv, bc);
    for (int j = 1; j <= n; ++j) {
        const double e = detail::bisect_level(v, iv, bc, j, lo, -e_floor, tol);
        out.eigenvalues.push_back(e);
        lo = e;
    }
    return out;
}

struct EigenvalueEntry {
    double E = 0.0;  // the eigenvalue is -E
    int sign = 1;    // +1 for H+ = -d^2 + V, -1 for H- = -d^2 - V
    int digits = 0;
};

struct EigenvalueList {
    std::vector<EigenvalueEntry> entries;  // E descending
    double floor = 0.0;
    int below_floor_plus = 0;
    int below_floor_minus = 0;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

inline int certified_digits(double tol) {
    return std::max(0, static_cast<int>(std::floor(-std::log10(tol))));
}

/// Negative spectra of H+ and H- merged into one list sorted by E descending.
inline EigenvalueList merged_spectrum(const Potential& v, const Interval& iv, const BoundaryCondition& bc,
                                      double e_floor, double tol = 1e-10) {
    EigenvalueList out;
    out.floor = e_floor;
    const auto plus = negative_spectrum(v, iv, bc, e_floor, tol);
    const auto minus = negative_spectrum(negate(v), iv, bc, e_floor, tol);
    out.below_floor_plus = plus.below_floor;
    out.below_floor_minus = minus.below_floor;
    const int d = certified_digits(tol);
    for (double e : plus.eigenvalues) out.entries.push_back({-e, 1, d});
    for (double e : minus.eigenvalues) out.entries.push_back({-e, -1, d});
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const EigenvalueEntry& a, const EigenvalueEntry& b) {
                         if (a.E != b.E) return a.E > b.E;
                         return a.sign > b.sign;
                     });
    return out;
}

inline double moment_sum(const EigenvalueList& list, double p) {
    if (p < 0.0) throw InvalidArgument("moment_sum needs p >= 0");
    double s = 0.0;
    for (const auto& e : list.entries) s += p == 0.0 ? 1.0 : std::pow(e.E, p);
    return s;
}

// ---------------------------------------------------------------- eigenfunctions

/// L2-normalized eigenfunction built from a left and a right shooting trace
/// matched at a point where both are large.
class Eigenfunction {
public:
    double energy() const noexcept { return e_; }
    const Interval& interval() const noexcept { return iv_; }
    double match_point() const noexcept { return xm_; }
    /// relative log-derivative mismatch at the matching point
    double mismatch() const noexcept { return mismatch_; }

    /// (f, f') at x.
    std::array<double, 2> operator()(double x) const {
        const bool left = x <= xm_;
        const auto& tr = left ? left_ : right_;
        const auto s = tr.scaled_at(x);
        const double f = (left ? sign_l_ : sign_r_) * std::exp(tr.log_scale_at(x) - (left ? logn_l_ : logn_r_));
        return {s[0] * f, s[1] * f};
    }

    /// Step boundaries of both traces, increasing.
    std::vector<double> nodes() const {
        std::vector<double> out;
        for (double x : left_.nodes())
            if (x < xm_) out.push_back(x);
        out.push_back(xm_);
        for (double x : right_.nodes())
            if (x > xm_) out.push_back(x);
        return out;
    }

    /// Gauss-Legendre quadrature of g(x, f, f') over [a, b] on the trace nodes.
    template <class G>
    double integrate(G&& g, double a, double b) const {
        auto ns = nodes();
        std::vector<double> cuts{a, b};
        for (double x : ns)
            if (x > a && x < b) cuts.push_back(x);
        std::sort(cuts.begin(), cuts.end());
        double s = 0.0;
        for (std::size_t i = 1; i < cuts.size(); ++i)
            s += detail::gauss8(
                [&](double x) {
                    const auto y = (*this)(x);
                    return g(x, y[0], y[1]);
                },
                cuts[i - 1], cuts[i]);
        return s;
    }

    /// Piecewise-linear sample with `per_step` points per integration step.
    GridFunction grid(int per_step = 8) const {
        const auto ns = nodes();
        std::vector<double> xs, vs;
        for (std::size_t i = 0; i + 1 < ns.size(); ++i)
            for (int j = 0; j < per_step; ++j) xs.push_back(ns[i] + (ns[i + 1] - ns[i]) * j / per_step);
        xs.push_back(ns.back());
        for (double x : xs) vs.push_back((*this)(x)[0]);
        return GridFunction(std::move(xs), std::move(vs), Interp::PiecewiseLinear);
    }

private:
    friend Eigenfunction solve_eigenfunction(const Potential&, double, const Interval&,
                                             const BoundaryCondition&, double);
    double e_ = 0.0;
    Interval iv_{0.0, 1.0};
    double xm_ = 0.0, mismatch_ = 0.0;
    double logn_l_ = 0.0, logn_r_ = 0.0;  // log of divisor applied to each trace
    double sign_l_ = 1.0, sign_r_ = 1.0;
    SolutionTrace left_, right_;
};

inline Eigenfunction solve_eigenfunction(const Potential& v, double e, const Interval& iv,
                                         const BoundaryCondition& bc, double max_mismatch = 1e-5) {
    if (!iv.finite()) throw InvalidArgument("eigenfunction needs a finite interval");
    Eigenfunction ef;
    ef.e_ = e;
    ef.iv_ = iv;
    ef.left_ = integrate_schrodinger(v, e, iv, std::sin(bc.alpha), std::cos(bc.alpha), 1e-12);
    ef.right_ = integrate_schrodinger(v, e, iv, 0.0, -1.0, 1e-12, Overflow::Renormalize, true);

    // matching point: maximize log|yL| + log|yR| over interior nodes
    std::vector<double> cand;
    for (double x : ef.left_.nodes()) cand.push_back(x);
    for (double x : ef.right_.nodes()) cand.push_back(x);
    std::sort(cand.begin(), cand.end());
    double best = -kInf, xm = iv.center();
    const double margin = 1e-9 * iv.length();
    for (double x : cand) {
        if (x <= iv.lo + margin || x >= iv.hi - margin) continue;
        const double s = ef.left_.log_abs_y(x) + ef.right_.log_abs_y(x);
        if (s > best) {
            best = s;
            xm = x;
        }
    }
    ef.xm_ = xm;
    const auto l = ef.left_.scaled_at(xm);
    const auto r = ef.right_.scaled_at(xm);
    const double gl = l[1] / l[0], gr = r[1] / r[0];
    ef.mismatch_ = std::abs(gl - gr) / (std::abs(gl) + std::abs(gr) + std::sqrt(std::abs(e)) + 1.0 / iv.length());
    if (!(ef.mismatch_ <= max_mismatch))
        throw NotAnEigenvalue("shooting mismatch " + std::to_string(ef.mismatch_) + " at E = " +
                              std::to_string(e));

    // both pieces are positive at xm, then normalize
    ef.sign_l_ = l[0] > 0 ? 1.0 : -1.0;
    ef.sign_r_ = r[0] > 0 ? 1.0 : -1.0;
    ef.logn_l_ = std::log(std::abs(l[0])) + ef.left_.log_scale_at(xm);
    ef.logn_r_ = std::log(std::abs(r[0])) + ef.right_.log_scale_at(xm);
    const double norm2 = ef.integrate([](double, double f, double) { return f * f; }, iv.lo, iv.hi);
    const double ln = 0.5 * std::log(norm2);
    ef.logn_l_ += ln;
    ef.logn_r_ += ln;
    return ef;
}

/// L2-normalized eigenfunction sampled on a grid.
inline GridFunction eigenfunction(const Potential& v, double e, const Interval& iv,
                                  const BoundaryCondition& bc) {
    return solve_eigenfunction(v, e, iv, bc).grid();
}

// ---------------------------------------------------------------- domains

/// Working domain: the whole line or a half-line, truncated at X.
struct Domain {
    enum class Kind { WholeLine, HalfDirichlet, HalfNeumann };
    Kind kind = Kind::WholeLine;
    double X = 0.0;  // user truncation floor

    static Domain whole_line(double x = 0.0) { return {Kind::WholeLine, x}; }
    static Domain half_dirichlet(double x = 0.0) { return {Kind::HalfDirichlet, x}; }
    static Domain half_neumann(double x = 0.0) { return {Kind::HalfNeumann, x}; }

    bool half() const noexcept { return kind != Kind::WholeLine; }
    BoundaryCondition bc() const {
        return kind == Kind::HalfNeumann ? BoundaryCondition::neumann() : BoundaryCondition::dirichlet();
    }
};

inline std::string to_string(Domain::Kind k) {
    switch (k) {
        case Domain::Kind::WholeLine: return "whole";
        case Domain::Kind::HalfDirichlet: return "half_dirichlet";
        case Domain::Kind::HalfNeumann: return "half_neumann";
    }
    return "?";
}

struct ResolvedDomain {
    Interval interval;
    BoundaryCondition bc;
};

/// Truncation X >= max(support radius + pad * E_floor^(-1/2), user X).
inline ResolvedDomain resolve_domain(const Domain& d, const Potential& v, double e_floor, double pad = 10.0) {
    if (!(e_floor > 0.0)) throw InvalidArgument("E_floor must be positive");
    const auto s = v.support();
    if (!s && !v.is_zero() && d.X <= 0.0)
        throw Unsupported("potential without compact support needs an explicit truncation");
    double r = 0.0;
    if (s) r = d.half() ? std::max(0.0, s->hi) : std::max(std::abs(s->lo), std::abs(s->hi));
    if (d.half() && s && s->lo < 0.0) throw InvalidArgument("half-line potential has support below 0");
    const double x = std::max(d.X, r + pad / std::sqrt(e_floor));
    return {d.half() ? Interval(0.0, x) : Interval(-x, x), d.bc()};
}

}  // namespace boundkit
