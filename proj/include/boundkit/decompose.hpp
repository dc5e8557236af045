#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "boundkit/eigensolve.hpp"
#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"
#include "boundkit/odecore.hpp"
#include "boundkit/potential.hpp"

namespace boundkit {

struct IntervalLabel {
    int n = 0;
    int k = 0;
    friend bool operator==(const IntervalLabel&, const IntervalLabel&) = default;
};

/// measured <= bound is the pass condition.
struct Certificate {
    std::string name;
    Interval where{0.0, 1.0};
    double measured = 0.0;
    double bound = 0.0;
    bool pass() const noexcept { return measured <= bound; }
};

struct PartitionEntry {
    Interval interval{0.0, 1.0};
    IntervalLabel label;
    bool certified = true;
};

struct FamilyInfo {
    int n = 0;
    Interval core{0.0, 1.0};
    double base_length = 0.0;
    double ext_left = 0.0;
    double ext_right = 0.0;
    std::string kind;  // "step", "origin" or "virtual"
    std::string removal_case;
    int step = 0;
    int modifications = 0;
    double eps = 0.0;

    double ell() const noexcept { return core.length() + ext_left + ext_right; }
    Interval k0() const { return {core.lo - ext_left, core.hi + ext_right}; }
    bool paired() const noexcept { return kind == "step"; }
};

struct StepRecord {
    int step = 0;
    double eps = 0.0;
    int sign = 1;
    Interval component{0.0, 1.0};
    std::string removal_case;  // a, b, c, d, origin, virtual, free, final
    std::optional<Interval> removed;
    double L = 0.0;
};

struct Decomposition {
    Domain::Kind kind = Domain::Kind::WholeLine;
    Interval domain{0.0, 1.0};
    double e_floor = 0.0;
    double h = 0.0;
    std::vector<PartitionEntry> partition;
    std::vector<FamilyInfo> families;  // index n - 1
    GridFunction W;                    // continuous, piecewise linear
    GridFunction Q;                    // piecewise constant on the W cells
    std::vector<double> zero_nodes;
    std::vector<StepRecord> steps;
    std::vector<Certificate> stage_certificates;

    const FamilyInfo& family(int n) const { return families.at(static_cast<std::size_t>(n - 1)); }
};

// ---------------------------------------------------------------- W, Q from a Riccati pair

/// How a Riccati solution is seeded at an end of its interval.
enum class EdgeType { Pole, Wall, Neumann };

/// gamma_u for +V and gamma_v for -V on an interval, giving
/// W = (gamma_u - gamma_v)/2, gamma = (gamma_u + gamma_v)/2 and V = W' + 2 gamma W.
class WQSource {
public:
    WQSource(RiccatiTrace u, RiccatiTrace v, Interval iv, double eps)
        : u_(std::move(u)), v_(std::move(v)), iv_(iv), eps_(eps) {}

    const Interval& interval() const noexcept { return iv_; }
    double eps() const noexcept { return eps_; }
    double gamma_u(double x) const { return u_(x); }
    double gamma_v(double x) const { return v_(x); }
    double W(double x) const {
        const double a = u_(x), b = v_(x);
        // both solutions vanish at a half-line Dirichlet origin; W -> 0 there
        if (std::isinf(a) && a == b) return 0.0;
        return 0.5 * (a - b);
    }
    double gamma(double x) const { return 0.5 * (u_(x) + v_(x)); }
    double Q(double x) const { return 2.0 * gamma(x) * W(x); }

    std::vector<double> nodes() const {
        std::vector<double> out = u_.nodes();
        const auto b = v_.nodes();
        out.insert(out.end(), b.begin(), b.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// GL8 quadrature of g(x) on [a, b] split at the Riccati nodes.
    template <class G>
    double integrate(G&& g, double a, double b) const {
        std::vector<double> cuts{a, b};
        for (double x : nodes())
            if (x > a && x < b) cuts.push_back(x);
        std::sort(cuts.begin(), cuts.end());
        double s = 0.0;
        for (std::size_t i = 1; i < cuts.size(); ++i) s += detail::gauss8(g, cuts[i - 1], cuts[i]);
        return s;
    }
    double integral_w2(double a, double b) const {
        return integrate([&](double x) { const double w = W(x); return w * w; }, a, b);
    }
    double integral_q1(double a, double b) const {
        return integrate([&](double x) { return std::abs(Q(x)); }, a, b);
    }

private:
    RiccatiTrace u_, v_;
    Interval iv_;
    double eps_;
};

namespace detail {

inline RiccatiSeed left_seed(EdgeType t, double eps) {
    switch (t) {
        case EdgeType::Pole: return RiccatiSeed::make_pole();
        case EdgeType::Wall: return RiccatiSeed::make_value(std::sqrt(eps));
        case EdgeType::Neumann: return RiccatiSeed::make_value(0.0);
    }
    return RiccatiSeed::make_pole();
}

/// With `origin` both solutions start at the left end (the boundary point of a
/// half-line), so W vanishes there; otherwise v starts at the right end.
inline WQSource make_source_exact(const Potential& v, const Interval& iv, double eps, EdgeType left,
                                  EdgeType right, bool origin) {
    auto gu = riccati_log_derivative(v, 1, eps, iv, Side::Left, left_seed(left, eps));
    RiccatiTrace gv;
    if (origin) {
        gv = riccati_log_derivative(v, -1, eps, iv, Side::Left, left_seed(left, eps));
    } else {
        const RiccatiSeed s = right == EdgeType::Wall ? RiccatiSeed::make_value(-std::sqrt(eps))
                                                      : RiccatiSeed::make_pole();
        gv = riccati_log_derivative(v, -1, eps, iv, Side::Right, s);
    }
    return WQSource(std::move(gu), std::move(gv), iv, eps);
}

/// Retries with eps (1 + delta) + delta pad, delta = 1e-6 ... 1e-3, when the
/// Riccati integration reports a zero (eps sitting exactly on an eigenvalue).
inline WQSource make_source(const Potential& v, const Interval& iv, double eps, EdgeType left, EdgeType right,
                            bool origin, double pad) {
    for (double delta = 1e-6;; delta *= 10.0) {
        const double e = std::max(eps, 0.0) * (1.0 + delta) + delta * pad;
        try {
            return make_source_exact(v, iv, e, left, right, origin);
        } catch (const HypothesisViolation&) {
            if (delta >= 1e-3 * (1.0 - 1e-9)) throw;
        }
    }
}

}  // namespace detail

struct WQ {
    GridFunction W, Q, gamma;
};

/// W, Q, gamma on the Riccati nodes strictly inside I (both ends are poles).
inline WQ wq_on_interval(const Potential& v, double eps, const Interval& iv) {
    const auto src = detail::make_source_exact(v, iv, eps, EdgeType::Pole, EdgeType::Pole, false);
    std::vector<double> xs, w, q, g;
    for (double x : src.nodes()) {
        if (x <= iv.lo || x >= iv.hi) continue;
        const double wx = src.W(x), gx = src.gamma(x);
        if (!std::isfinite(wx) || !std::isfinite(gx)) continue;
        xs.push_back(x);
        w.push_back(wx);
        g.push_back(gx);
        q.push_back(2.0 * gx * wx);
    }
    return {GridFunction(xs, w, Interp::PiecewiseLinear), GridFunction(xs, q, Interp::PiecewiseLinear),
            GridFunction(xs, g, Interp::PiecewiseLinear)};
}

// ---------------------------------------------------------------- localized interval

namespace detail {

/// Candidate centers for the localized interval, best first.
inline std::vector<double> localization_centers(const Eigenfunction& ef, const Interval& iv, double L) {
    const double step = L / 100.0;
    const auto n = static_cast<std::size_t>(std::ceil(iv.length() / step));
    std::vector<double> xs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) xs[i] = std::min(iv.hi, iv.lo + step * static_cast<double>(i));
    // cumulative integral of f^2 at xs
    std::vector<double> cut = ef.nodes();
    std::vector<double> cum(xs.size(), 0.0);
    std::size_t j = 0;
    double acc = 0.0;
    auto f2 = [&](double x) { const double f = ef(x)[0]; return f * f; };
    for (std::size_t i = 1; i < xs.size(); ++i) {
        double a = xs[i - 1];
        while (j < cut.size() && cut[j] <= a) ++j;
        while (j < cut.size() && cut[j] < xs[i]) {
            acc += gauss8(f2, a, cut[j]);
            a = cut[j++];
        }
        if (xs[i] > a) acc += gauss8(f2, a, xs[i]);
        cum[i] = acc;
    }
    std::vector<std::pair<double, double>> cand;  // (-mass, c)
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = i >= 100 ? i - 100 : 0;
        const std::size_t hi = std::min(xs.size() - 1, i + 100);
        cand.push_back({-(cum[hi] - cum[lo]), xs[i]});
    }
    std::sort(cand.begin(), cand.end());
    std::vector<double> out;
    for (const auto& c : cand) out.push_back(c.second);
    return out;
}

inline Interval clamp_window(double c, double half, const Interval& iv) {
    double lo = c - half, hi = c + half;
    if (lo < iv.lo) {
        hi += iv.lo - lo;
        lo = iv.lo;
    }
    if (hi > iv.hi) {
        lo -= hi - iv.hi;
        hi = iv.hi;
    }
    return {std::max(lo, iv.lo), hi};
}

/// Localized interval for the operator -d^2 + vs whose ground state on iv is -eps.
inline Interval localize(const Potential& vs, const Interval& iv, double eps) {
    const double L = 1.0 / std::sqrt(eps);
    if (iv.length() < 6.0 * L * (1.0 - 1e-12))
        throw InvalidArgument("component shorter than the localized interval");
    const auto ef = solve_eigenfunction(vs, -eps, iv, BoundaryCondition::dirichlet(), 1e-4);
    const auto centers = localization_centers(ef, iv, L);
    const std::size_t tries = std::min<std::size_t>(centers.size(), 64);
    for (std::size_t t = 0; t < tries; ++t) {
        const Interval w = clamp_window(centers[t], 3.0 * L, iv);
        if (count_below(vs, w, BoundaryCondition::dirichlet(), -0.5 * eps) >= 1) return w;
    }
    throw Error("localized interval verification failed");
}

struct Ground {
    bool has = false;
    double eps = 0.0;
    int sign = 1;
};

inline Ground component_ground(const Potential& v, const Potential& vneg, const Interval& iv,
                               const BoundaryCondition& bc) {
    Ground g;
    const auto p = lowest_eigenvalue(v, iv, bc, 1e-13);
    const auto m = lowest_eigenvalue(vneg, iv, bc, 1e-13);
    if (p) g = {true, -*p, 1};
    if (m && (!g.has || -*m > g.eps)) g = {true, -*m, -1};
    return g;
}

}  // namespace detail

/// Subinterval of length 6 eps^(-1/2) carrying an eigenvalue <= -eps/2 of
/// whichever of -d^2 +- V has ground state -eps on I.
inline Interval find_localized_interval(const Potential& v, const Interval& iv, double eps) {
    if (!(eps > 0.0)) throw InvalidArgument("find_localized_interval needs eps > 0");
    const auto bc = BoundaryCondition::dirichlet();
    const auto vn = negate(v);
    const auto p = lowest_eigenvalue(v, iv, bc, 1e-13);
    const auto m = lowest_eigenvalue(vn, iv, bc, 1e-13);
    const double dp = p ? std::abs(-*p - eps) : kInf;
    const double dm = m ? std::abs(-*m - eps) : kInf;
    if (!std::isfinite(std::min(dp, dm))) throw InvalidArgument("no negative eigenvalue on the interval");
    return dp <= dm ? detail::localize(v, iv, -*p) : detail::localize(vn, iv, -*m);
}

// ---------------------------------------------------------------- boundary method, matching

struct BoundaryPiece {
    Interval interval{0.0, 1.0};
    int k = 0;
    double w2 = 0.0;
    double q1 = 0.0;
};

namespace detail {

struct Dyadic {
    int N = 0;
    double L0 = 0.0;
};

/// N with 2D/L_- <= 2^N < 4D/L_-, so L0 = D/2^N lies in (L_-/4, L_-/2].
inline Dyadic dyadic_split(double D, double l_minus) {
    const double r = 2.0 * D / l_minus;
    int N = static_cast<int>(std::ceil(std::log2(r) - 1e-12));
    if (N < 0) N = 0;
    return {N, D / std::ldexp(1.0, N)};
}

/// Raw boundary-method bounds: 6/|J| and 13/|J| when eps |J|^2 <= 2.4, else
/// the bounds implied by the tent estimate with dist(J, edge) >= |J|.
inline std::pair<double, double> boundary_raw_bounds(double eps, double len) {
    if (eps * len * len <= 2.4) return {6.0 / len, 13.0 / len};
    const double bw = eps * (5.0 / 3.0) * len + 2.0 / len;
    return {bw, 2.0 * (std::sqrt(eps) + 1.0 / len) * std::sqrt(len * bw)};
}

}  // namespace detail

/// Dyadic covering of the half of `region` adjacent to `side`, with W, Q from
/// the Riccati pair on the region. The innermost piece [edge, edge + L0] is
/// the extension of the neighbor and is not returned.
inline std::vector<BoundaryPiece> boundary_method(const Potential& v, const Interval& region, double l_minus,
                                                  Side side, double eps) {
    if (!region.finite()) throw InvalidArgument("boundary_method needs a finite region");
    if (!(l_minus > 0.0)) throw InvalidArgument("L_minus must be positive");
    if (region.length() < l_minus) throw InvalidArgument("region shorter than L_minus");
    const auto src = detail::make_source(v, region, eps, EdgeType::Pole, EdgeType::Pole, false, 0.0);
    const double D = 0.5 * region.length();
    const auto dy = detail::dyadic_split(D, l_minus);
    std::vector<BoundaryPiece> out;
    for (int k = 1; k <= dy.N; ++k) {
        const double s0 = std::ldexp(dy.L0, k - 1), s1 = std::ldexp(dy.L0, k);
        const Interval j = side == Side::Left ? Interval(region.lo + s0, region.lo + s1)
                                              : Interval(region.hi - s1, region.hi - s0);
        out.push_back({j, k, src.integral_w2(j.lo, j.hi), src.integral_q1(j.lo, j.hi)});
    }
    return out;
}

struct MatchResult {
    double x0 = 0.0;
    double w_left = 0.0;   // W_left(x0)
    double w_right = 0.0;  // W_right(x0)
    GridFunction W;        // merged, continuous, zero at x0
    GridFunction Q_correction;
};

/// Grid search for x0 in the window minimizing max(|W_left|, |W_right|), then
/// both sides ramped linearly to zero over [x0 - t, x0 + t].
inline MatchResult match_W(const GridFunction& wl, const GridFunction& wr, const Interval& window,
                           double l_minus, int candidates = 2001) {
    if (!window.finite()) throw InvalidArgument("match window must be finite");
    double best = kInf, x0 = window.center();
    for (int i = 0; i < candidates; ++i) {
        const double x = window.lo + window.length() * i / (candidates - 1);
        const double m = std::max(std::abs(wl(x)), std::abs(wr(x)));
        if (m < best) {
            best = m;
            x0 = x;
        }
    }
    const double bound = 24.0 / l_minus;
    if (!(best <= bound))
        throw CertificateFailure("no admissible matching point: min max|W| = " + std::to_string(best) +
                                 " > 24/L_- = " + std::to_string(bound));
    MatchResult r;
    r.x0 = x0;
    r.w_left = wl(x0);
    r.w_right = wr(x0);
    const double t = 1e-3 * l_minus;
    std::vector<double> xs;
    for (double x : wl.breakpoints())
        if (x < x0 - t) xs.push_back(x);
    xs.push_back(x0 - t);
    xs.push_back(x0);
    xs.push_back(x0 + t);
    for (double x : wr.breakpoints())
        if (x > x0 + t) xs.push_back(x);
    std::vector<double> w(xs.size()), q(xs.size() - 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        w[i] = x < x0 ? wl(x) : (x > x0 ? wr(x) : 0.0);
    }
    // x0 is a node, so each cell belongs to one side
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double a = xs[i], b = xs[i + 1];
        const auto& src = b <= x0 ? wl : wr;
        q[i] = (src(b) - src(a)) / (b - a) - (w[i + 1] - w[i]) / (b - a);
    }
    r.W = GridFunction(xs, w, Interp::PiecewiseLinear);
    r.Q_correction = GridFunction(std::move(xs), std::move(q), Interp::PiecewiseConstant);
    return r;
}

// ---------------------------------------------------------------- the induction

struct DecomposeOptions {
    double h = 1e-3;       // grid step near the support of V
    double pad = 40.0;     // truncation X >= R + pad E_floor^(-1/2)
    bool strict = true;    // throw CertificateFailure on a failed final certificate
};

namespace detail {

class Decomposer {
public:
    Decomposer(const Potential& v, const Domain& d, double e_floor, const DecomposeOptions& opt)
        : v_(v), vn_(negate(v)), dom_(d), floor_(e_floor), opt_(opt) {}

    Decomposition run() {
        setup();
        loop();
        return assemble();
    }

private:
    struct Fam {
        Interval core;
        double base = 0.0;
        double ext_l = 0.0, ext_r = 0.0;
        int src = -1;
        std::string kind, removal_case;
        int step = 0, mods = 0;
        double eps = 0.0;
        bool certified = true;
    };
    struct Comp {
        double a = 0.0, b = 0.0;
        int lf = -1, rf = -1;  // neighbor family, -1 for a wall
        bool known = false;
        Ground g{};

        Comp() = default;
        Comp(double a_, double b_, int l, int r, bool k = false, Ground gr = {})
            : a(a_), b(b_), lf(l), rf(r), known(k), g(gr) {}
    };
    struct Seg {
        double lo, hi;
        int src;
    };
    struct Dyad {
        Interval iv;
        int fam;
        int k;
    };

    const Potential& v_;
    Potential vn_;
    Domain dom_;
    double floor_;
    DecomposeOptions opt_;

    double lo_ = 0.0, hi_ = 0.0;  // working domain, walls at the ends
    std::vector<WQSource> src_;
    std::vector<Fam> fam_;
    std::vector<Seg> seg_;
    std::vector<Dyad> dyad_;
    std::vector<double> zeros_;
    std::vector<Comp> comps_;
    std::vector<StepRecord> steps_;
    std::vector<Certificate> stage_;
    int step_ = 0;

    const Potential& sv(int sign) const { return sign > 0 ? v_ : vn_; }

    int add_source(const Interval& iv, double eps, EdgeType l, EdgeType r, bool origin = false) {
        src_.push_back(make_source(v_, iv, eps, l, r, origin, floor_));
        return static_cast<int>(src_.size()) - 1;
    }

    void stage(std::string name, const Interval& iv, double measured, double bound) {
        stage_.push_back({std::move(name), iv, measured, bound});
    }

    void setup() {
        const auto s = v_.support();
        double r = 0.0;
        if (s) r = dom_.half() ? std::max(0.0, s->hi) : std::max(std::abs(s->lo), std::abs(s->hi));
        if (dom_.half() && s && s->lo < 0.0) throw InvalidArgument("half-line potential has support below 0");
        if (!s && !v_.is_zero()) throw Unsupported("decomposition needs a compactly supported potential");
        const double x = std::max(dom_.X, r + opt_.pad / std::sqrt(floor_));
        lo_ = dom_.half() ? 0.0 : -x;
        hi_ = x;
        const Interval all(lo_, hi_);
        if (dom_.half()) {
            const auto bc = dom_.bc();
            const Ground g = component_ground(v_, vn_, all, bc);
            const bool big = g.has && g.eps >= floor_;
            const double l1 = 1.0 / std::sqrt(big ? g.eps : floor_);
            const EdgeType et = bc.is_neumann() ? EdgeType::Neumann : EdgeType::Pole;
            const int src = add_source(all, g.has ? g.eps : 0.0, et, EdgeType::Wall, true);
            Fam f;
            f.core = {0.0, l1};
            f.base = l1;
            f.src = src;
            f.kind = "origin";
            f.removal_case = "origin";
            f.eps = g.has ? g.eps : 0.0;
            f.certified = bc.is_neumann();
            fam_.push_back(f);
            seg_.push_back({0.0, l1, src});
            const auto& so = src_[src];
            if (bc.is_neumann()) {
                stage("origin_w2", {0.0, 2.0 * l1}, so.integral_w2(0.0, 2.0 * l1), 4.0 / l1);
                stage("origin_q1", {0.0, 2.0 * l1}, so.integral_q1(0.0, 2.0 * l1), 8.0 / l1);
            } else {
                stage("origin_w2", {l1, 2.0 * l1}, so.integral_w2(l1, 2.0 * l1), 4.0 / l1);
                stage("origin_q1", {l1, 2.0 * l1}, so.integral_q1(l1, 2.0 * l1), 8.0 / l1);
            }
            steps_.push_back({0, f.eps, g.sign, all, "origin", Interval(0.0, l1), l1});
            comps_.push_back({l1, hi_, 0, -1});
            return;
        }
        const Ground g = component_ground(v_, vn_, all, BoundaryCondition::dirichlet());
        if (g.has && g.eps >= floor_) {
            comps_.push_back({lo_, hi_, -1, -1, true, g});
            return;
        }
        // no eigenvalue above the floor: one virtual family in the middle
        const double c = s ? s->center() : 0.0;
        const double half = 3.0 / std::sqrt(floor_);
        const Interval core(c - half, c + half);
        const int src = add_source(all, g.has ? g.eps : 0.0, EdgeType::Wall, EdgeType::Wall);
        Fam f;
        f.core = core;
        f.base = core.length();
        f.src = src;
        f.kind = "virtual";
        f.removal_case = "virtual";
        f.eps = g.has ? g.eps : 0.0;
        fam_.push_back(f);
        seg_.push_back({core.lo, core.hi, src});
        steps_.push_back({0, f.eps, g.sign, all, "virtual", core, core.length()});
        comps_.push_back({lo_, core.lo, -1, 0});
        comps_.push_back({core.hi, hi_, 0, -1});
    }

    void loop() {
        while (!comps_.empty()) {
            for (auto& c : comps_) {
                if (c.known) continue;
                c.g = component_ground(v_, vn_, {c.a, c.b}, BoundaryCondition::dirichlet());
                c.known = true;
            }
            // components without negative spectrum go straight to the boundary method
            std::vector<Comp> keep;
            for (const auto& c : comps_) {
                if (c.g.has) {
                    keep.push_back(c);
                    continue;
                }
                steps_.push_back({step_, 0.0, 1, {c.a, c.b}, "free", std::nullopt, 0.0});
                dispatch(c, 0.0);
            }
            comps_ = std::move(keep);
            if (comps_.empty()) break;
            std::size_t pick = 0;
            for (std::size_t i = 1; i < comps_.size(); ++i) {
                const auto& a = comps_[i];
                const auto& b = comps_[pick];
                if (a.g.eps > b.g.eps || (a.g.eps == b.g.eps && a.a < b.a)) pick = i;
            }
            if (comps_[pick].g.eps < floor_) {
                std::sort(comps_.begin(), comps_.end(), [](const Comp& x, const Comp& y) { return x.a < y.a; });
                for (const auto& c : comps_) {
                    steps_.push_back({step_, c.g.eps, c.g.sign, {c.a, c.b}, "final", std::nullopt, 0.0});
                    dispatch(c, c.g.eps);
                }
                comps_.clear();
                break;
            }
            const Comp c = comps_[pick];
            comps_.erase(comps_.begin() + static_cast<std::ptrdiff_t>(pick));
            step(c);
        }
    }

    /// Boundary-method treatment of a whole component.
    void dispatch(const Comp& c, double eps) {
        if (c.lf >= 0) doubling(c, c.lf);
        if (c.rf >= 0) doubling(c, c.rf);
        if (c.lf >= 0 && c.rf >= 0) {
            const int s = add_source({c.a, c.b}, eps, EdgeType::Pole, EdgeType::Pole);
            const double D = 0.5 * (c.b - c.a);
            side(c.a, 1.0, D, c.lf, s, 0.0);
            side(c.b, -1.0, D, c.rf, s, 0.0);
            return;
        }
        if (c.lf < 0 && c.rf < 0) throw Error("component without neighbors");
        // one-sided towards a wall; the domain is extended to the dyadic end
        const bool wall_right = c.rf < 0;
        const int f = wall_right ? c.lf : c.rf;
        const double l0 = 0.5 * fam_[f].base;
        const double dist = c.b - c.a;
        int N = 1;
        while (std::ldexp(l0, N) < dist) ++N;
        const double D = std::ldexp(l0, N);
        Interval ext = wall_right ? Interval(c.a, c.a + D) : Interval(c.b - D, c.b);
        if (wall_right) hi_ = ext.hi;
        else lo_ = ext.lo;
        double e = 0.0;
        if (eps > 0.0) {
            const Ground g = component_ground(v_, vn_, ext, BoundaryCondition::dirichlet());
            e = g.has ? g.eps : 0.0;
        }
        const int s = wall_right ? add_source(ext, e, EdgeType::Pole, EdgeType::Wall)
                                 : add_source(ext, e, EdgeType::Wall, EdgeType::Pole);
        side(wall_right ? c.a : c.b, wall_right ? 1.0 : -1.0, D, f, s, l0);
    }

    void doubling(const Comp& c, int f) {
        stage("neighbor_doubling", {c.a, c.b}, 2.0 * fam_[f].base, c.b - c.a);
    }

    /// Dyadic pieces from an edge owned by family f, covering distance D in
    /// direction dir; W switches from the family source to `s` at a zero node.
    void side(double edge, double dir, double D, int f, int s, double forced_l0) {
        Fam& fm = fam_[f];
        const double lm = fm.base;
        Dyadic dy;
        if (forced_l0 > 0.0) {
            dy.L0 = forced_l0;
            dy.N = static_cast<int>(std::lround(std::log2(D / forced_l0)));
        } else {
            dy = dyadic_split(D, lm);
        }
        auto span = [&](double s0, double s1) {
            return dir > 0 ? Interval(edge + s0, edge + s1) : Interval(edge - s1, edge - s0);
        };
        const double ext = dy.N == 0 ? D : dy.L0;
        (dir > 0 ? fm.ext_r : fm.ext_l) += ext;
        ++fm.mods;
        if (dy.N == 0) {
            const Interval r = span(0.0, D);
            seg_.push_back({r.lo, r.hi, fm.src});
            return;
        }
        const auto& sr = src_[s];
        for (int k = 1; k <= dy.N; ++k) {
            const Interval j = span(std::ldexp(dy.L0, k - 1), std::ldexp(dy.L0, k));
            dyad_.push_back({j, f, dir > 0 ? k : -k});
            const auto b = boundary_raw_bounds(sr.eps(), j.length());
            stage("boundary_w2", j, sr.integral_w2(j.lo, j.hi), b.first);
            stage("boundary_q1", j, sr.integral_q1(j.lo, j.hi), b.second);
        }
        // matching point in (L_-/2, L_-) from the edge
        const double wlo = std::min(0.5 * lm, 0.5 * D), whi = std::min(lm, D);
        const auto& sf = src_[fm.src];
        double best = kInf, x0 = edge + dir * wlo;
        for (int i = 0; i <= 2000; ++i) {
            const double x = edge + dir * (wlo + (whi - wlo) * i / 2000.0);
            const double m = std::max(std::abs(sf.W(x)), std::abs(sr.W(x)));
            if (m < best) {
                best = m;
                x0 = x;
            }
        }
        stage("matching", span(wlo, whi), best, 24.0 / lm);
        zeros_.push_back(x0);
        const Interval fam_part = dir > 0 ? Interval(edge, x0) : Interval(x0, edge);
        const Interval src_part = span(std::abs(x0 - edge), D);
        seg_.push_back({fam_part.lo, fam_part.hi, fm.src});
        seg_.push_back({src_part.lo, src_part.hi, s});
    }

    void step(const Comp& c) {
        ++step_;
        const double eps = c.g.eps;
        const double Ln = 6.0 / std::sqrt(eps);
        const bool fl = c.lf >= 0, fr = c.rf >= 0;
        const Interval ci(c.a, c.b);
        if (fl && fr && ci.length() < Ln) {
            steps_.push_back({step_, eps, c.g.sign, ci, "b", std::nullopt, Ln});
            dispatch(c, eps);
            return;
        }
        if (ci.length() < Ln) throw InvalidArgument("domain too small for the localized interval");
        const Interval lt = localize(sv(c.g.sign), ci, eps);
        const Interval seven = lt.scaled(7.0);
        const double m = 1e-12 * std::max({1.0, std::abs(c.a), std::abs(c.b)});
        const bool in_l = fl && c.a > seven.lo + m;
        const bool in_r = fr && c.b < seven.hi - m;
        if (in_l && in_r) {
            steps_.push_back({step_, eps, c.g.sign, ci, "d", std::nullopt, Ln});
            dispatch(c, eps);
            return;
        }
        Interval in = lt;
        std::string cs = "a";
        if (in_l) {
            in = {lt.lo + Ln, lt.hi + Ln};
            cs = "c";
        } else if (in_r) {
            in = {lt.lo - Ln, lt.hi - Ln};
            cs = "c";
        }
        const Interval five = in.scaled(5.0);
        if ((!in_l && five.lo < c.a) || (!in_r && five.hi > c.b))
            throw InvalidArgument("domain too small: 5 I_n leaves the component; raise X");
        const int s = add_source(ci, eps, fl ? EdgeType::Pole : EdgeType::Wall, fr ? EdgeType::Pole : EdgeType::Wall);
        Fam f;
        f.core = in;
        f.base = Ln;
        f.src = s;
        f.kind = "step";
        f.removal_case = cs;
        f.step = step_;
        f.eps = eps;
        fam_.push_back(f);
        const int id = static_cast<int>(fam_.size()) - 1;
        seg_.push_back({in.lo, in.hi, s});
        steps_.push_back({step_, eps, c.g.sign, ci, cs, in, Ln});
        const auto& sr = src_[s];
        if (cs == "a") {
            const Interval t = in.scaled(3.0);
            stage("tent_w2", t, sr.integral_w2(t.lo, t.hi), 134.0 / Ln);
            stage("tent_q1", t, sr.integral_q1(t.lo, t.hi), 281.0 / Ln);
            comps_.push_back({c.a, in.lo, c.lf, id});
            comps_.push_back({in.hi, c.b, id, c.rf});
        } else if (in_l) {
            const Interval t(in.lo, in.hi + Ln);
            stage("tent_w2", t, sr.integral_w2(t.lo, t.hi), 134.0 / Ln);
            stage("tent_q1", t, sr.integral_q1(t.lo, t.hi), 281.0 / Ln);
            doubling({c.a, in.lo, c.lf, id}, c.lf);
            side(c.a, 1.0, in.lo - c.a, c.lf, s, 0.0);
            comps_.push_back({in.hi, c.b, id, c.rf});
        } else {
            const Interval t(in.lo - Ln, in.hi);
            stage("tent_w2", t, sr.integral_w2(t.lo, t.hi), 134.0 / Ln);
            stage("tent_q1", t, sr.integral_q1(t.lo, t.hi), 281.0 / Ln);
            doubling({in.hi, c.b, id, c.rf}, c.rf);
            side(c.b, -1.0, c.b - in.hi, c.rf, s, 0.0);
            comps_.push_back({c.a, in.lo, c.lf, id});
        }
    }

    double dist_to_features(double x, const std::vector<Interval>& regions) const {
        double d = kInf;
        for (const auto& r : regions) d = std::min(d, x < r.lo ? r.lo - x : (x > r.hi ? x - r.hi : 0.0));
        for (double z : zeros_) d = std::min(d, std::abs(x - z));
        return std::isfinite(d) ? d : 0.0;
    }

    Decomposition assemble() {
        Decomposition out;
        out.kind = dom_.kind;
        out.domain = {lo_, hi_};
        out.e_floor = floor_;
        out.h = opt_.h;

        // segments must tile the domain; differing sources meet at zero nodes
        std::sort(seg_.begin(), seg_.end(), [](const Seg& a, const Seg& b) { return a.lo < b.lo; });
        const double tol = 1e-9 * std::max(1.0, hi_ - lo_);
        if (seg_.empty() || std::abs(seg_.front().lo - lo_) > tol || std::abs(seg_.back().hi - hi_) > tol)
            throw Error("decomposition segments do not cover the domain");
        for (std::size_t i = 1; i < seg_.size(); ++i) {
            if (std::abs(seg_[i].lo - seg_[i - 1].hi) > tol) throw Error("decomposition segments leave a gap");
            seg_[i].lo = seg_[i - 1].hi;
            if (seg_[i].src != seg_[i - 1].src) {
                const double x = seg_[i].lo;
                if (std::none_of(zeros_.begin(), zeros_.end(), [&](double z) { return std::abs(z - x) <= tol; }))
                    zeros_.push_back(x);
            }
        }
        std::sort(zeros_.begin(), zeros_.end());

        // relabel families by length
        std::vector<int> order(fam_.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const double la = fam_[a].core.length() + fam_[a].ext_l + fam_[a].ext_r;
            const double lb = fam_[b].core.length() + fam_[b].ext_l + fam_[b].ext_r;
            if (la != lb) return la < lb;
            return fam_[a].core.lo < fam_[b].core.lo;
        });
        std::vector<int> label(fam_.size());
        for (std::size_t i = 0; i < order.size(); ++i) label[order[i]] = static_cast<int>(i) + 1;
        for (int id : order) {
            const Fam& f = fam_[id];
            FamilyInfo fi;
            fi.n = label[id];
            fi.core = f.core;
            fi.base_length = f.base;
            fi.ext_left = f.ext_l;
            fi.ext_right = f.ext_r;
            fi.kind = f.kind;
            fi.removal_case = f.removal_case;
            fi.step = f.step;
            fi.modifications = f.mods;
            fi.eps = f.eps;
            out.families.push_back(fi);
        }
        for (std::size_t id = 0; id < fam_.size(); ++id) {
            const auto& f = fam_[id];
            out.partition.push_back({{f.core.lo - f.ext_l, f.core.hi + f.ext_r}, {label[id], 0}, f.certified});
        }
        for (const auto& d : dyad_) out.partition.push_back({d.iv, {label[d.fam], d.k}, true});
        std::sort(out.partition.begin(), out.partition.end(),
                  [](const PartitionEntry& a, const PartitionEntry& b) { return a.interval.lo < b.interval.lo; });
        // snap seams so the partition tiles exactly
        out.partition.front().interval.lo = lo_;
        for (std::size_t i = 1; i < out.partition.size(); ++i) {
            auto& cur = out.partition[i].interval;
            const auto& prev = out.partition[i - 1].interval;
            if (std::abs(cur.lo - prev.hi) > tol) throw Error("partition does not tile the domain");
            cur.lo = prev.hi;
        }
        out.partition.back().interval.hi = hi_;

        // nodes
        const auto regions = v_.nonzero_regions();
        std::vector<double> req{lo_, hi_};
        for (const auto& p : out.partition) req.push_back(p.interval.lo);
        for (double z : zeros_) req.push_back(z);
        for (const auto& p : v_.pieces(lo_, hi_)) req.push_back(p.a);
        std::sort(req.begin(), req.end());
        req.erase(std::unique(req.begin(), req.end()), req.end());
        std::vector<double> xs;
        xs.reserve(req.size() * 4);
        for (std::size_t i = 0; i + 1 < req.size(); ++i) {
            double x = req[i];
            xs.push_back(x);
            const double end = req[i + 1];
            for (;;) {
                const double w = opt_.h * (1.0 + dist_to_features(x, regions));
                if (x + w >= end - 1e-3 * w) break;
                x += w;
                xs.push_back(x);
            }
        }
        xs.push_back(req.back());
        std::vector<double> keep;
        for (double x : xs)
            if (keep.empty() || x > keep.back()) keep.push_back(x);
        xs.swap(keep);

        std::vector<double> w(xs.size());
        std::size_t si = 0, zi = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = xs[i];
            while (zi < zeros_.size() && zeros_[zi] < x - tol) ++zi;
            if (zi < zeros_.size() && std::abs(zeros_[zi] - x) <= tol) {
                w[i] = 0.0;
                continue;
            }
            while (si + 1 < seg_.size() && seg_[si].hi <= x) ++si;
            w[i] = src_[seg_[si].src].W(x);
            if (!std::isfinite(w[i])) throw IntegrationOverflow(x, "W is not finite on the final grid");
        }
        std::vector<double> q(xs.size() - 1);
        const auto vp = v_.pieces(lo_, hi_);
        std::size_t pi = 0;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const double a = xs[i], b = xs[i + 1];
            double area = 0.0;
            while (pi < vp.size() && vp[pi].b <= a) ++pi;
            for (std::size_t j = pi; j < vp.size() && vp[j].a < b; ++j) {
                const double pa = std::max(a, vp[j].a), pb = std::min(b, vp[j].b);
                if (pb > pa) area += 0.5 * (pb - pa) * (vp[j].at(pa) + vp[j].at(pb));
            }
            q[i] = area / (b - a) - (w[i + 1] - w[i]) / (b - a);
        }
        out.W = GridFunction(xs, std::move(w), Interp::PiecewiseLinear);
        out.Q = GridFunction(std::move(xs), std::move(q), Interp::PiecewiseConstant);
        out.zero_nodes = zeros_;
        out.steps = steps_;
        out.stage_certificates = stage_;
        for (const auto& d : dyad_) {
            stage_.push_back({"matched_w2", d.iv, out.W.integral_sq(d.iv.lo, d.iv.hi), 140.0 / d.iv.length()});
            stage_.push_back({"matched_q1", d.iv, out.Q.integral_abs(d.iv.lo, d.iv.hi), 390.0 / d.iv.length()});
        }
        out.stage_certificates = stage_;
        return out;
    }
};

}  // namespace detail

// ---------------------------------------------------------------- verification

struct VerifyReport {
    std::vector<Certificate> certificates;
    double residual_l1 = 0.0;
    double w_l2sq_total = 0.0;
    double q_l1_total = 0.0;
    double sqrt_moment = 0.0;  // sum of E_n^(1/2) over the spectrum
    bool tiled = true;
    bool w_continuous = true;

    bool all_pass() const {
        if (!tiled || !w_continuous) return false;
        return std::all_of(certificates.begin(), certificates.end(), [](const Certificate& c) { return c.pass(); });
    }
    std::vector<Certificate> failures() const {
        std::vector<Certificate> f;
        for (const auto& c : certificates)
            if (!c.pass()) f.push_back(c);
        return f;
    }
};

/// ||V - W' - Q||_1 over the grid cells of D.
inline double reconstruction_residual(const Potential& v, const Decomposition& d) {
    const auto xs = d.W.breakpoints();
    const auto wv = d.W.values();
    const auto qv = d.Q.values();
    double s = 0.0;
    const auto vp = v.pieces(d.domain.lo, d.domain.hi);
    std::size_t pi = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double a = xs[i], b = xs[i + 1];
        const double c = (wv[i + 1] - wv[i]) / (b - a) + qv[i];
        while (pi < vp.size() && vp[pi].b <= a) ++pi;
        for (std::size_t j = pi; j < vp.size() && vp[j].a < b; ++j) {
            const double pa = std::max(a, vp[j].a), pb = std::min(b, vp[j].b);
            if (pb > pa) s += integral_abs(LinearPiece{pa, pb, vp[j].at(pa) - c, vp[j].at(pb) - c});
        }
    }
    return s;
}

/// Re-derives every certificate from (W, Q) and the partition.
inline VerifyReport verify_decomposition(const Potential& v, const Decomposition& d, const EigenvalueList& spectrum) {
    VerifyReport r;
    const double tol = 1e-9 * std::max(1.0, d.domain.length());
    // tiling
    if (d.partition.empty()) r.tiled = false;
    else {
        if (std::abs(d.partition.front().interval.lo - d.domain.lo) > tol) r.tiled = false;
        if (std::abs(d.partition.back().interval.hi - d.domain.hi) > tol) r.tiled = false;
        for (std::size_t i = 1; i < d.partition.size(); ++i)
            if (std::abs(d.partition[i].interval.lo - d.partition[i - 1].interval.hi) > tol) r.tiled = false;
    }
    // exactly one k = 0 interval per family
    std::map<int, int> k0;
    for (const auto& p : d.partition)
        if (p.label.k == 0) ++k0[p.label.n];
    for (const auto& f : d.families)
        if (k0[f.n] != 1) r.tiled = false;
    if (d.W.empty() || d.W.interp() != Interp::PiecewiseLinear) r.w_continuous = false;

    for (const auto& p : d.partition) {
        const auto& J = p.interval;
        const double len = J.length();
        const double w2 = d.W.integral_sq(J.lo, J.hi);
        const double q1 = d.Q.integral_abs(J.lo, J.hi);
        if (p.certified) {
            r.certificates.push_back({"w2", J, w2, 1e3 / len});
            r.certificates.push_back({"q1", J, q1, 1e3 / len});
        }
        const auto n = static_cast<std::size_t>(p.label.n);
        if (p.label.n < 1 || n > d.families.size()) {
            r.tiled = false;
            continue;
        }
        const double ell = d.families[n - 1].ell();
        const int ak = std::abs(p.label.k);
        if (ak > 0) {
            const double lower = std::ldexp(ell, ak - 4), upper = std::ldexp(ell, ak - 2);
            r.certificates.push_back({"geometry_lower", J, lower, len * (1.0 + 1e-12)});
            r.certificates.push_back({"geometry_upper", J, len, upper * (1.0 + 1e-12)});
        }
    }
    // growth of the lengths against the merged spectrum
    std::vector<const FamilyInfo*> paired;
    for (const auto& f : d.families)
        if (f.paired()) paired.push_back(&f);
    for (std::size_t i = 0; i < paired.size() && i < spectrum.entries.size(); ++i) {
        const double e = spectrum.entries[i].E;
        r.certificates.push_back({"length_growth", paired[i]->k0(), 4.0 / std::sqrt(e), paired[i]->ell()});
    }
    r.residual_l1 = reconstruction_residual(v, d);
    r.w_l2sq_total = d.W.integral_sq(d.domain.lo, d.domain.hi);
    r.q_l1_total = d.Q.integral_abs(d.domain.lo, d.domain.hi);
    r.sqrt_moment = moment_sum(spectrum, 0.5);
    return r;
}

/// The whole induction on the truncated domain, followed by relabeling and
/// assembly of W, Q on one grid.
inline Decomposition run_decomposition(const Potential& v, const Domain& domain, double e_floor,
                                       const DecomposeOptions& opt = {}) {
    if (!(e_floor > 0.0)) throw InvalidArgument("E_floor must be positive");
    if (!(opt.h > 0.0)) throw InvalidArgument("grid step must be positive");
    detail::Decomposer dec(v, domain, e_floor, opt);
    auto d = dec.run();
    if (opt.strict) {
        const auto spec = merged_spectrum(v, d.domain, domain.bc(), 0.25 * e_floor, 1e-10);
        const auto rep = verify_decomposition(v, d, spec);
        if (!rep.all_pass()) {
            const auto f = rep.failures();
            if (f.empty()) throw CertificateFailure("decomposition does not tile the domain");
            const auto& c = f.front();
            throw CertificateFailure("certificate " + c.name + " failed on [" + std::to_string(c.where.lo) + ", " +
                                     std::to_string(c.where.hi) + "]: " + std::to_string(c.measured) + " > " +
                                     std::to_string(c.bound));
        }
    }
    return d;
}

/// The spectrum verify_decomposition pairs with: merged, on the decomposition's
/// own truncation, resolved down to E_floor / 4.
inline EigenvalueList decomposition_spectrum(const Potential& v, const Decomposition& d) {
    const auto bc = d.kind == Domain::Kind::HalfNeumann ? BoundaryCondition::neumann() : BoundaryCondition::dirichlet();
    return merged_spectrum(v, d.domain, bc, 0.25 * d.e_floor, 1e-10);
}

}  // namespace boundkit
