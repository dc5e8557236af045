#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "boundkit/dopri5.hpp"
#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/potential.hpp"

namespace boundkit {

/// Maps (y, y') at a to (y, y') at b.
struct TransferMatrix {
    double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;

    double det() const noexcept { return m11 * m22 - m12 * m21; }
    std::array<double, 2> apply(double y, double dy) const noexcept {
        return {m11 * y + m12 * dy, m21 * y + m22 * dy};
    }
    /// this * rhs, i.e. apply rhs first.
    TransferMatrix operator*(const TransferMatrix& r) const noexcept {
        return {m11 * r.m11 + m12 * r.m21, m11 * r.m12 + m12 * r.m22,
                m21 * r.m11 + m22 * r.m21, m21 * r.m12 + m22 * r.m22};
    }
    TransferMatrix inverse() const noexcept {
        const double d = det();
        return {m22 / d, -m12 / d, -m21 / d, m11 / d};
    }
};

enum class Overflow { Renormalize, Throw };

inline constexpr double kOverflowThreshold = 1e150;

/// Dense solution of -y'' + V y = E y. Values may be stored rescaled; `at`
/// returns the true values and `log_abs_y` stays finite where `at` would overflow.
class SolutionTrace {
public:
    SolutionTrace() = default;
    explicit SolutionTrace(Trajectory<2> t) : traj_(std::move(t)) {}

    const Trajectory<2>& trajectory() const noexcept { return traj_; }
    double lo() const { return traj_.lo(); }
    double hi() const { return traj_.hi(); }

    std::array<double, 2> at(double x) const {
        const auto& s = traj_.step_at(x);
        const auto v = traj_.scaled(x);
        const double f = std::exp(s.log_scale);
        return {v[0] * f, v[1] * f};
    }
    std::array<double, 2> scaled_at(double x) const {
        const auto v = traj_.scaled(x);
        return {v[0], v[1]};
    }
    double log_scale_at(double x) const { return traj_.log_scale(x); }
    double log_abs_y(double x) const {
        return std::log(std::abs(traj_.scaled(x)[0])) + traj_.log_scale(x);
    }
    std::vector<double> nodes() const { return traj_.nodes(); }

private:
    Trajectory<2> traj_;
};

namespace detail {

inline std::vector<LinearPiece> ordered_pieces(const Potential& v, double a, double b, bool backward) {
    auto p = v.pieces(a, b);
    if (backward) std::reverse(p.begin(), p.end());
    return p;
}

inline std::vector<double> piece_stops(const std::vector<LinearPiece>& p, bool backward) {
    std::vector<double> s;
    s.reserve(p.size());
    for (const auto& q : p) s.push_back(backward ? q.a : q.b);
    return s;
}

struct Renormalizer {
    Overflow policy = Overflow::Renormalize;
    template <std::size_t N>
    double operator()(double x, Vec<N>& y) const {
        double m = 0.0;
        for (double e : y) m = std::max(m, std::abs(e));
        if (!(m > kOverflowThreshold)) {
            if (!std::isfinite(m)) throw IntegrationOverflow(x, "non-finite solution value");
            return 0.0;
        }
        if (policy == Overflow::Throw)
            throw IntegrationOverflow(x, "solution magnitude exceeded 1e150");
        for (double& e : y) e /= m;
        return std::log(m);
    }
};

}  // namespace detail

/// Adaptive RK trace of -y'' + V y = E y across I. With `from_right` the
/// initial data are taken at I.hi and the integration runs leftwards.
inline SolutionTrace integrate_schrodinger(const Potential& v, double e, const Interval& iv, double y0,
                                           double dy0, double tol = 1e-10,
                                           Overflow policy = Overflow::Renormalize,
                                           bool from_right = false) {
    if (!iv.finite()) throw InvalidArgument("integrate_schrodinger needs a finite interval");
    if (y0 == 0.0 && dy0 == 0.0) throw InvalidArgument("initial data must be nonzero");
    const auto pieces = detail::ordered_pieces(v, iv.lo, iv.hi, from_right);
    const auto stops = detail::piece_stops(pieces, from_right);
    auto rhs = [&](std::size_t seg, double x, const Vec<2>& y) -> Vec<2> {
        return {y[1], (pieces[seg].at(x) - e) * y[0]};
    };
    Trajectory<2> traj;
    Tolerance t{tol, tol * 1e-2};
    dopri5<2>(rhs, from_right ? iv.hi : iv.lo, Vec<2>{y0, dy0}, stops, t, &traj,
              detail::Renormalizer{policy});
    return SolutionTrace(std::move(traj));
}

namespace detail {

inline TransferMatrix constant_transfer(double q, double len) {
    // y'' = q y on an interval of length len
    if (q < 0.0) {
        const double k = std::sqrt(-q);
        const double c = std::cos(k * len), s = std::sin(k * len);
        return {c, s / k, -k * s, c};
    }
    if (q > 0.0) {
        const double kap = std::sqrt(q);
        if (kap * len > 700.0) throw IntegrationOverflow(len, "transfer matrix entries overflow");
        const double c = std::cosh(kap * len), s = std::sinh(kap * len);
        return {c, s / kap, kap * s, c};
    }
    return {1.0, len, 0.0, 1.0};
}

}  // namespace detail

/// Transfer matrix of -y'' + V y = E y from a to b. Constant pieces use the
/// closed-form propagator, linear pieces an RK solve of both canonical columns.
inline TransferMatrix transfer_matrix(const Potential& v, double e, double a, double b,
                                      double tol = 1e-13) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        throw InvalidArgument("transfer_matrix needs finite a < b");
    TransferMatrix t;
    for (const auto& p : v.pieces(a, b)) {
        TransferMatrix m;
        if (p.constant()) {
            m = detail::constant_transfer(p.va - e, p.width());
        } else {
            auto rhs = [&](std::size_t, double x, const Vec<4>& y) -> Vec<4> {
                const double q = p.at(x) - e;
                return {y[1], q * y[0], y[3], q * y[2]};
            };
            const double stop = p.b;
            const auto y = dopri5<4>(rhs, p.a, Vec<4>{1.0, 0.0, 0.0, 1.0},
                                     std::span<const double>(&stop, 1), Tolerance{tol, tol * 1e-2},
                                     nullptr, detail::Renormalizer{Overflow::Throw});
            m = {y[0], y[2], y[1], y[3]};
        }
        t = m * t;
        if (!std::isfinite(t.m11 + t.m12 + t.m21 + t.m22) ||
            std::max({std::abs(t.m11), std::abs(t.m12), std::abs(t.m21), std::abs(t.m22)}) >
                kOverflowThreshold)
            throw IntegrationOverflow(p.b, "transfer matrix entries overflow");
    }
    return t;
}

namespace detail {

/// Classical Prufer angle (y = rho sin theta, y' = rho cos theta) across a
/// piece on which E - V = q is constant.
inline double theta_constant(double theta, double q, double len) {
    constexpr double pi = std::numbers::pi;
    const double n = std::floor(theta / pi);
    const double t = theta - n * pi;
    if (q > 0.0) {
        const double k = std::sqrt(q);
        const double phi = n * pi + std::atan2(k * std::sin(t), std::cos(t)) + k * len;
        const double m = std::floor(phi / pi);
        const double r = phi - m * pi;
        return m * pi + std::atan2(std::sin(r), k * std::cos(r));
    }
    const bool at_zero = std::sin(t) == 0.0;
    const double g0 = at_zero ? 0.0 : std::cos(t) / std::sin(t);
    double g1;
    bool cross = false;
    if (q < 0.0) {
        const double kap = std::sqrt(-q);
        const double th = std::tanh(kap * len);
        if (at_zero) {
            g1 = kap / th;
        } else {
            if (g0 < -kap) {
                const double s_star = std::log1p(-2.0 * kap / (g0 + kap)) / (2.0 * kap);
                cross = s_star < len;
            }
            g1 = kap * (g0 + kap * th) / (kap + g0 * th);
        }
    } else {
        if (at_zero) {
            g1 = 1.0 / len;
        } else {
            const double den = 1.0 + g0 * len;
            cross = g0 < 0.0 && den < 0.0;
            g1 = g0 / den;
        }
    }
    return (n + (cross ? 1.0 : 0.0)) * pi + std::atan2(1.0, g1);
}

/// theta(b) for the classical Prufer flow theta' = cos^2 + (E - V) sin^2.
inline double prufer_theta(const Potential& v, double e, double a, double b, double theta0) {
    double theta = theta0;
    for (const auto& p : v.pieces(a, b)) {
        if (p.constant()) {
            theta = theta_constant(theta, e - p.va, p.width());
            continue;
        }
        auto rhs = [&](std::size_t, double x, const Vec<1>& th) -> Vec<1> {
            const double s = std::sin(th[0]), c = std::cos(th[0]);
            return {c * c + (e - p.at(x)) * s * s};
        };
        const double stop = p.b;
        theta = dopri5<1>(rhs, p.a, Vec<1>{theta}, std::span<const double>(&stop, 1),
                          Tolerance{1e-12, 1e-12})[0];
    }
    return theta;
}

}  // namespace detail

/// Interior zeros on I of the solution leaving lo(I) with boundary angle bc_angle.
inline int zero_count(const Potential& v, double e, const Interval& iv, double bc_angle) {
    if (!iv.finite()) throw InvalidArgument("zero_count needs a finite interval");
    const double th = detail::prufer_theta(v, e, iv.lo, iv.hi, bc_angle);
    const double m = std::ceil(th / std::numbers::pi) - 1.0;
    return m > 0.0 ? static_cast<int>(m) : 0;
}

// ---------------------------------------------------------------- Riccati

enum class Side { Left, Right };

/// Seed for a Riccati log-derivative: a pole (the solution vanishes at the
/// starting endpoint) or a prescribed value of u'/u there.
struct RiccatiSeed {
    bool pole = true;
    double value = 0.0;

    static RiccatiSeed make_pole() { return {true, 0.0}; }
    static RiccatiSeed make_value(double v) { return {false, v}; }
};

/// gamma = u'/u for -u'' + sigma V u = -eps u, dense on [lo, hi].
class RiccatiTrace {
public:
    RiccatiTrace() = default;

    double operator()(double x) const {
        if (series_len_ > 0.0) {
            const double s = from_ == Side::Left ? x - start_ : start_ - x;
            if (s < series_len_) {
                if (s <= 0.0) return from_ == Side::Left ? kInf : -kInf;
                const double g = 1.0 / s + c0_ * s / 3.0;
                return from_ == Side::Left ? g : -g;
            }
        }
        if (traj_.empty()) return from_ == Side::Left ? 1.0 / series_len_ : -1.0 / series_len_;
        return traj_.scaled(x)[0];
    }

    Side from() const noexcept { return from_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    /// Where the integration actually stopped (before the far end if the
    /// solution approached a zero there).
    double reached() const noexcept { return reached_; }
    const Trajectory<1>& trajectory() const noexcept { return traj_; }
    double eps() const noexcept { return eps_; }

    /// Nodes of the integration (series segment plus RK steps), increasing.
    std::vector<double> nodes() const {
        std::vector<double> out = traj_.nodes();
        if (series_len_ > 0.0) {
            if (from_ == Side::Left) out.insert(out.begin(), start_);
            else out.push_back(start_);
        }
        return out;
    }

    /// Piecewise-linear sample on the integration nodes.
    GridFunction grid() const {
        std::vector<double> xs, vs;
        for (double x : nodes()) {
            const double v = (*this)(x);
            if (!std::isfinite(v)) continue;
            if (!xs.empty() && !(x > xs.back())) continue;
            xs.push_back(x);
            vs.push_back(v);
        }
        return GridFunction(std::move(xs), std::move(vs), Interp::PiecewiseLinear);
    }

private:
    friend RiccatiTrace riccati_log_derivative(const Potential&, int, double, const Interval&, Side,
                                               RiccatiSeed, double);
    Side from_ = Side::Left;
    double lo_ = 0.0, hi_ = 0.0, start_ = 0.0, reached_ = 0.0;
    double series_len_ = 0.0, c0_ = 0.0, eps_ = 0.0;
    Trajectory<1> traj_;
};

namespace detail {
struct EarlyStop {
    double x;
};
}  // namespace detail

/// Integrates gamma' = (sigma V + eps) - gamma^2 from one end of I.
/// A pole seed starts from the two-term series 1/s + (sigma V + eps) s / 3.
/// Throws HypothesisViolation when gamma escapes the a priori bound
/// eps^(1/2) + 1/dist in the interior (a zero of u: eigenvalue below -eps).
inline RiccatiTrace riccati_log_derivative(const Potential& v, int sigma, double eps, const Interval& iv,
                                           Side from, RiccatiSeed seed, double tol = 1e-11) {
    if (!iv.finite()) throw InvalidArgument("riccati_log_derivative needs a finite interval");
    if (eps < 0.0) throw InvalidArgument("riccati_log_derivative needs eps >= 0");
    if (sigma != 1 && sigma != -1) throw InvalidArgument("sigma must be +1 or -1");
    const bool back = from == Side::Right;
    const double len = iv.length();
    RiccatiTrace out;
    out.from_ = from;
    out.lo_ = iv.lo;
    out.hi_ = iv.hi;
    out.eps_ = eps;
    out.start_ = back ? iv.hi : iv.lo;
    const double far = back ? iv.lo : iv.hi;
    const double dir = back ? -1.0 : 1.0;

    auto pieces = detail::ordered_pieces(v, iv.lo, iv.hi, back);
    double x0 = out.start_;
    double g0;
    if (seed.pole) {
        const auto& p0 = pieces.front();
        const double c = sigma * (back ? p0.vb : p0.va) + eps;
        double w = std::min(1e-4 * len, 0.5 * p0.width());
        if (c != 0.0) w = std::min(w, 0.05 / std::sqrt(std::abs(c)));
        out.series_len_ = w;
        out.c0_ = c;
        x0 = out.start_ + dir * w;
        g0 = dir * (1.0 / w + c * w / 3.0);
    } else {
        g0 = seed.value;
    }
    // drop the part already covered by the series
    std::vector<LinearPiece> rest;
    for (const auto& p : pieces) {
        if (!back && p.b <= x0) continue;
        if (back && p.a >= x0) continue;
        rest.push_back(p);
    }
    const auto stops = detail::piece_stops(rest, back);
    const double se = std::sqrt(eps);
    auto rhs = [&](std::size_t seg, double x, const Vec<1>& g) -> Vec<1> {
        return {sigma * rest[seg].at(x) + eps - g[0] * g[0]};
    };
    auto post = [&](double x, Vec<1>& g) -> double {
        const double d_far = std::abs(far - x);
        const double d_start = std::abs(x - out.start_);
        const double d = seed.pole ? std::min(d_far, d_start) : d_far;
        const double bound = se + 1.0 / d;
        if (!std::isfinite(g[0]) || std::abs(g[0]) > 4.0 * bound + 10.0) {
            if (d_far < 1e-7 * len) throw detail::EarlyStop{x};
            throw HypothesisViolation(x, "Riccati solution blew up: eigenvalue below -eps present");
        }
        if (d_far < 1e-9 * len) throw detail::EarlyStop{x};
        return 0.0;
    };
    try {
        dopri5<1>(rhs, x0, Vec<1>{g0}, stops, Tolerance{tol, tol}, &out.traj_, post);
        out.reached_ = far;
    } catch (const detail::EarlyStop& s) {
        out.reached_ = s.x;
    }
    return out;
}

// ---------------------------------------------------------------- Prufer (W, Q)

struct PruferState {
    double logR = 0.0;
    double psi = 0.0;
    double x = 0.0;
    double k = 1.0;
};

namespace detail {

struct WQSegment {
    LinearPiece w, q;
    double end;
};

inline std::vector<WQSegment> wq_segments(const GridFunction& w, const GridFunction& q, double a, double b) {
    std::vector<double> cuts{a, b};
    for (double x : w.breakpoints())
        if (x > a && x < b) cuts.push_back(x);
    for (double x : q.breakpoints())
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<WQSegment> out;
    out.reserve(cuts.size());
    auto piece_at = [](const GridFunction& g, double l, double r) {
        if (g.empty()) return LinearPiece{l, r, 0.0, 0.0};
        auto p = g.pieces(l, r);
        return p.size() == 1 ? p.front() : LinearPiece{l, r, g(0.5 * (l + r)), g(0.5 * (l + r))};
    };
    for (std::size_t i = 1; i < cuts.size(); ++i)
        out.push_back({piece_at(w, cuts[i - 1], cuts[i]), piece_at(q, cuts[i - 1], cuts[i]), cuts[i]});
    return out;
}

}  // namespace detail

struct PruferResult {
    PruferState state;
    /// integral of |(Q - W^2)(cos psi - 1)/k| along the path
    double rho_l1 = 0.0;
};

/// Evolves (ln R, psi) for V = W' + Q, accumulating the L1 norm of the
/// integrable term rho = (Q - W^2)(cos psi - 1)/k.
inline PruferResult prufer_evolve_tracked(const GridFunction& w, const GridFunction& q, PruferState st,
                                          double to_x, double tol = 1e-10) {
    if (!(st.k > 0.0)) throw InvalidArgument("prufer_evolve requires k > 0");
    if (to_x < st.x) throw InvalidArgument("prufer_evolve requires to_x >= state.x");
    PruferResult out{st, 0.0};
    if (to_x == st.x) return out;
    const auto segs = detail::wq_segments(w, q, st.x, to_x);
    std::vector<double> stops;
    for (const auto& s : segs) stops.push_back(s.end);
    const double k = st.k;
    auto rhs = [&](std::size_t seg, double x, const Vec<3>& y) -> Vec<3> {
        const double wx = segs[seg].w.at(x);
        const double rho = (segs[seg].q.at(x) - wx * wx) / k;
        const double s = std::sin(y[1]), c = std::cos(y[1]);
        return {-wx * c + 0.5 * rho * s, 2.0 * k + 2.0 * wx * s + rho * (c - 1.0),
                std::abs(rho * (c - 1.0))};
    };
    const auto y = dopri5<3>(rhs, st.x, Vec<3>{st.logR, st.psi, 0.0}, stops, Tolerance{tol, tol});
    out.state = {y[0], y[1], to_x, k};
    out.rho_l1 = y[2];
    return out;
}

inline PruferState prufer_evolve(const GridFunction& w, const GridFunction& q, const PruferState& st,
                                 double to_x, double tol = 1e-10) {
    return prufer_evolve_tracked(w, q, st, to_x, tol).state;
}

// ---------------------------------------------------------------- Dirac systems

using ComplexPair = std::array<std::complex<double>, 2>;

namespace detail {
inline std::vector<LinearPiece> w_pieces(const GridFunction& w, double a, double b) {
    if (w.empty()) return {{a, b, 0.0, 0.0}};
    return w.pieces(a, b);
}
}  // namespace detail

/// Z' = W [[0, e^{-2ikx}], [e^{2ikx}, 0]] Z across I.
inline ComplexPair dirac_evolve_Z(const GridFunction& w, double k, const Interval& iv, const ComplexPair& z0,
                                  double tol = 1e-12) {
    if (!(k > 0.0)) throw InvalidArgument("dirac_evolve_Z requires k > 0");
    const auto pieces = detail::w_pieces(w, iv.lo, iv.hi);
    const auto stops = detail::piece_stops(pieces, false);
    auto rhs = [&](std::size_t seg, double x, const Vec<4>& y) -> Vec<4> {
        const double wx = pieces[seg].at(x);
        const double c = std::cos(2.0 * k * x), s = std::sin(2.0 * k * x);
        // e^{-2ikx} Z2 and e^{2ikx} Z1
        return {wx * (c * y[2] + s * y[3]), wx * (c * y[3] - s * y[2]),
                wx * (c * y[0] - s * y[1]), wx * (c * y[1] + s * y[0])};
    };
    const auto y = dopri5<4>(rhs, iv.lo,
                             Vec<4>{z0[0].real(), z0[0].imag(), z0[1].real(), z0[1].imag()}, stops,
                             Tolerance{tol, tol * 1e-2});
    return {std::complex<double>(y[0], y[1]), std::complex<double>(y[2], y[3])};
}

/// Y' = [[W, k], [-k, -W]] Y across I (the unperturbed Dirac system).
inline ComplexPair dirac_evolve_Y(const GridFunction& w, double k, const Interval& iv, const ComplexPair& y0,
                                  double tol = 1e-12) {
    if (!(k > 0.0)) throw InvalidArgument("dirac_evolve_Y requires k > 0");
    const auto pieces = detail::w_pieces(w, iv.lo, iv.hi);
    const auto stops = detail::piece_stops(pieces, false);
    auto rhs = [&](std::size_t seg, double x, const Vec<4>& y) -> Vec<4> {
        const double wx = pieces[seg].at(x);
        return {wx * y[0] + k * y[2], wx * y[1] + k * y[3], -k * y[0] - wx * y[2], -k * y[1] - wx * y[3]};
    };
    const auto y = dopri5<4>(rhs, iv.lo,
                             Vec<4>{y0[0].real(), y0[0].imag(), y0[1].real(), y0[1].imag()}, stops,
                             Tolerance{tol, tol * 1e-2});
    return {std::complex<double>(y[0], y[1]), std::complex<double>(y[2], y[3])};
}

/// Y0 = [[e^{ikx}, e^{-ikx}], [i e^{ikx}, -i e^{-ikx}]] Z.
inline ComplexPair z_to_y(const ComplexPair& z, double k, double x) {
    using namespace std::complex_literals;
    const auto e = std::exp(1i * k * x);
    const auto em = std::exp(-1i * k * x);
    return {e * z[0] + em * z[1], 1i * e * z[0] - 1i * em * z[1]};
}

inline ComplexPair y_to_z(const ComplexPair& y, double k, double x) {
    using namespace std::complex_literals;
    const auto e = std::exp(1i * k * x);
    const auto em = std::exp(-1i * k * x);
    // inverse of [[e, em], [i e, -i em]]
    return {0.5 * (y[0] - 1i * y[1]) / e, 0.5 * (y[0] + 1i * y[1]) / em};
}

// ---------------------------------------------------------------- factored form

namespace detail {

/// Prufer angle for -y'' + (W' + W^2) y = E y written as y' = W y + z,
/// z' = -E y - W z, with y = rho sin theta, z = rho cos theta.
inline double factored_theta(const GridFunction& w, double e, double a, double b, double theta0) {
    const auto pieces = w_pieces(w, a, b);
    const auto stops = piece_stops(pieces, false);
    auto rhs = [&](std::size_t seg, double x, const Vec<1>& th) -> Vec<1> {
        const double s = std::sin(th[0]), c = std::cos(th[0]);
        return {c * c + e * s * s + 2.0 * pieces[seg].at(x) * s * c};
    };
    return dopri5<1>(rhs, a, Vec<1>{theta0}, stops, Tolerance{1e-11, 1e-11})[0];
}

}  // namespace detail

/// Eigenvalues of -d^2 + W' + W^2 on I (Dirichlet at both ends) strictly below E.
inline int count_below_factored(const GridFunction& w, const Interval& iv, double e) {
    if (!iv.finite()) throw InvalidArgument("count_below_factored needs a finite interval");
    const double th = detail::factored_theta(w, e, iv.lo, iv.hi, 0.0);
    const double m = std::ceil(th / std::numbers::pi) - 1.0;
    return m > 0.0 ? static_cast<int>(m) : 0;
}

}  // namespace boundkit
