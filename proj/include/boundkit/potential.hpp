#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "boundkit/errors.hpp"
#include "boundkit/grid.hpp"

namespace boundkit {

enum class BumpKind { Square, Dipole };

class Potential;

namespace pot {

struct Zero {};

/// -g on (center-1, center+1).
struct SquareBump {
    double g = 0.0;
    double center = 0.0;
};

/// +g on (center-1, center), -g on (center, center+1).
struct DipoleBump {
    double g = 0.0;
    double center = 0.0;
};

struct Bump {
    BumpKind kind = BumpKind::Square;
    double g = 0.0;
    double x = 0.0;
};

/// Sum of bumps with pairwise disjoint supports, stored sorted by position.
struct SparseSum {
    std::vector<Bump> bumps;
};

struct Sampled {
    GridFunction grid;
};

/// x -> g^2 * inner(g x).
struct Scaled {
    std::shared_ptr<const Potential> inner;
    double g = 1.0;
};

struct Negated {
    std::shared_ptr<const Potential> inner;
};

using Node = std::variant<Zero, SquareBump, DipoleBump, SparseSum, Sampled, Scaled, Negated>;

}  // namespace pot

/// Immutable potential. Every representable potential is piecewise linear with
/// finitely many pieces and compact support, so norms and evaluations are exact.
class Potential {
public:
    Potential() : node_(std::make_shared<const pot::Node>(pot::Zero{})) {}

    static Potential zero() { return Potential(); }

    static Potential square(double g, double center = 0.0) {
        if (!(g > 0.0)) throw InvalidArgument("SquareBump requires g > 0");
        return Potential(pot::SquareBump{g, center});
    }

    static Potential dipole(double g, double center = 0.0) {
        if (!(g > 0.0)) throw InvalidArgument("DipoleBump requires g > 0");
        return Potential(pot::DipoleBump{g, center});
    }

    static Potential sparse(std::vector<pot::Bump> bumps) {
        for (const auto& b : bumps)
            if (!(b.g > 0.0)) throw InvalidArgument("sparse bump requires g > 0");
        std::sort(bumps.begin(), bumps.end(),
                  [](const pot::Bump& l, const pot::Bump& r) { return l.x < r.x; });
        for (std::size_t i = 1; i < bumps.size(); ++i)
            if (bumps[i].x - bumps[i - 1].x < 2.0)
                throw InvalidArgument("sparse bump supports must be pairwise disjoint");
        return Potential(pot::SparseSum{std::move(bumps)});
    }

    static Potential sampled(GridFunction grid) { return Potential(pot::Sampled{std::move(grid)}); }

    const pot::Node& node() const noexcept { return *node_; }
    bool is_zero() const noexcept { return std::holds_alternative<pot::Zero>(*node_); }

    /// Exact pieces on [a, b] (finite), with zero pieces filling gaps.
    std::vector<LinearPiece> pieces(double a, double b) const;

    /// Pointwise value, right limit at discontinuities.
    double operator()(double x) const;

    /// Closed hull of the set where V is nonzero; empty for the zero potential.
    std::optional<Interval> support() const;

    /// Maximal subintervals of the support hull on which V is not identically zero.
    std::vector<Interval> nonzero_regions() const;

    double max_abs() const;

    /// max |x| over the support; 0 for the zero potential.
    double support_radius() const {
        auto s = support();
        return s ? std::max(std::abs(s->lo), std::abs(s->hi)) : 0.0;
    }

private:
    explicit Potential(pot::Node n) : node_(std::make_shared<const pot::Node>(std::move(n))) {}
    friend Potential negate(const Potential& v);
    friend Potential rescale(const Potential& v, double g);

    std::shared_ptr<const pot::Node> node_;
};

namespace detail {

struct Segment {
    double a, b, va, vb;
};

inline void bump_segments(BumpKind kind, double g, double c, std::vector<Segment>& out) {
    if (kind == BumpKind::Square) {
        out.push_back({c - 1.0, c + 1.0, -g, -g});
    } else {
        out.push_back({c - 1.0, c, g, g});
        out.push_back({c, c + 1.0, -g, -g});
    }
}

/// Sorted disjoint segments -> pieces covering [a, b] with zero filler.
inline std::vector<LinearPiece> fill_pieces(const std::vector<Segment>& segs, double a, double b) {
    std::vector<LinearPiece> out;
    double cur = a;
    for (const auto& s : segs) {
        if (s.b <= cur || s.a >= b) continue;
        const double lo = std::max(s.a, cur);
        const double hi = std::min(s.b, b);
        if (lo > cur) out.push_back({cur, lo, 0.0, 0.0});
        const double slope = (s.vb - s.va) / (s.b - s.a);
        out.push_back({lo, hi, s.va + slope * (lo - s.a), s.va + slope * (hi - s.a)});
        cur = hi;
    }
    if (cur < b) out.push_back({cur, b, 0.0, 0.0});
    return out;
}

}  // namespace detail

inline std::vector<LinearPiece> Potential::pieces(double a, double b) const {
    if (!(a < b)) return {};
    if (!std::isfinite(a) || !std::isfinite(b))
        throw Unsupported("pieces() needs a finite interval");
    return std::visit(
        [&](const auto& n) -> std::vector<LinearPiece> {
            using T = std::decay_t<decltype(n)>;
            std::vector<detail::Segment> segs;
            if constexpr (std::is_same_v<T, pot::Zero>) {
                return {{a, b, 0.0, 0.0}};
            } else if constexpr (std::is_same_v<T, pot::SquareBump>) {
                detail::bump_segments(BumpKind::Square, n.g, n.center, segs);
                return detail::fill_pieces(segs, a, b);
            } else if constexpr (std::is_same_v<T, pot::DipoleBump>) {
                detail::bump_segments(BumpKind::Dipole, n.g, n.center, segs);
                return detail::fill_pieces(segs, a, b);
            } else if constexpr (std::is_same_v<T, pot::SparseSum>) {
                for (const auto& bump : n.bumps) detail::bump_segments(bump.kind, bump.g, bump.x, segs);
                return detail::fill_pieces(segs, a, b);
            } else if constexpr (std::is_same_v<T, pot::Sampled>) {
                return n.grid.pieces(a, b);
            } else if constexpr (std::is_same_v<T, pot::Scaled>) {
                auto inner = n.inner->pieces(n.g * a, n.g * b);
                const double g2 = n.g * n.g;
                for (auto& p : inner) {
                    p.a /= n.g;
                    p.b /= n.g;
                    p.va *= g2;
                    p.vb *= g2;
                }
                // keep the requested endpoints bit-exact
                inner.front().a = a;
                inner.back().b = b;
                return inner;
            } else {
                auto inner = n.inner->pieces(a, b);
                for (auto& p : inner) {
                    p.va = -p.va;
                    p.vb = -p.vb;
                }
                return inner;
            }
        },
        *node_);
}

inline std::optional<Interval> Potential::support() const {
    return std::visit(
        [&](const auto& n) -> std::optional<Interval> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, pot::Zero>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, pot::SquareBump> ||
                                 std::is_same_v<T, pot::DipoleBump>) {
                return Interval{n.center - 1.0, n.center + 1.0};
            } else if constexpr (std::is_same_v<T, pot::SparseSum>) {
                if (n.bumps.empty()) return std::nullopt;
                return Interval{n.bumps.front().x - 1.0, n.bumps.back().x + 1.0};
            } else if constexpr (std::is_same_v<T, pot::Sampled>) {
                const auto& gr = n.grid;
                const auto x = gr.breakpoints();
                std::optional<double> lo, hi;
                for (std::size_t i = 0; i < gr.cells(); ++i) {
                    const auto p = gr.piece(i);
                    if (p.va != 0.0 || p.vb != 0.0) {
                        if (!lo) lo = x[i];
                        hi = x[i + 1];
                    }
                }
                if (!lo) return std::nullopt;
                return Interval{*lo, *hi};
            } else if constexpr (std::is_same_v<T, pot::Scaled>) {
                auto s = n.inner->support();
                if (!s) return std::nullopt;
                return Interval{s->lo / n.g, s->hi / n.g};
            } else {
                return n.inner->support();
            }
        },
        *node_);
}

inline std::vector<Interval> Potential::nonzero_regions() const {
    std::vector<Interval> out;
    auto s = support();
    if (!s) return out;
    for (const auto& p : pieces(s->lo, s->hi)) {
        if (p.va == 0.0 && p.vb == 0.0) continue;
        if (!out.empty() && out.back().hi >= p.a)
            out.back().hi = p.b;
        else
            out.push_back({p.a, p.b});
    }
    return out;
}

inline double Potential::operator()(double x) const {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, pot::Zero>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, pot::SquareBump>) {
                return (x >= n.center - 1.0 && x < n.center + 1.0) ? -n.g : 0.0;
            } else if constexpr (std::is_same_v<T, pot::DipoleBump>) {
                if (x >= n.center - 1.0 && x < n.center) return n.g;
                if (x >= n.center && x < n.center + 1.0) return -n.g;
                return 0.0;
            } else if constexpr (std::is_same_v<T, pot::SparseSum>) {
                for (const auto& b : n.bumps) {
                    if (b.kind == BumpKind::Square) {
                        if (x >= b.x - 1.0 && x < b.x + 1.0) return -b.g;
                    } else {
                        if (x >= b.x - 1.0 && x < b.x) return b.g;
                        if (x >= b.x && x < b.x + 1.0) return -b.g;
                    }
                }
                return 0.0;
            } else if constexpr (std::is_same_v<T, pot::Sampled>) {
                return n.grid(x);
            } else if constexpr (std::is_same_v<T, pot::Scaled>) {
                return n.g * n.g * (*n.inner)(n.g * x);
            } else {
                return -(*n.inner)(x);
            }
        },
        *node_);
}

inline double Potential::max_abs() const {
    auto s = support();
    if (!s) return 0.0;
    double m = 0.0;
    for (const auto& p : pieces(s->lo, s->hi)) m = std::max({m, std::abs(p.va), std::abs(p.vb)});
    return m;
}

inline Potential negate(const Potential& v) {
    if (v.is_zero()) return v;
    if (auto* n = std::get_if<pot::Negated>(v.node_.get())) return *n->inner;
    return Potential(pot::Negated{std::make_shared<const Potential>(v)});
}

/// g^2 V(g x).
inline Potential rescale(const Potential& v, double g) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("rescale requires g > 0");
    if (v.is_zero()) return v;
    if (auto* n = std::get_if<pot::Scaled>(v.node_.get()))
        return Potential(pot::Scaled{n->inner, n->g * g});
    return Potential(pot::Scaled{std::make_shared<const Potential>(v), g});
}

enum class NormKind { L1, L2sq };

/// Integral of |V| or V^2 over I. Infinite endpoints are clipped to the support.
inline double interval_norm(const Potential& v, const Interval& iv, NormKind kind) {
    double a = iv.lo, b = iv.hi;
    if (!iv.finite()) {
        auto s = v.support();
        if (!s) return 0.0;
        a = std::max(a, s->lo);
        b = std::min(b, s->hi);
        if (!(a < b)) return 0.0;
        if (!std::isfinite(a) || !std::isfinite(b))
            throw Unsupported("interval_norm over an unbounded interval without compact support");
    }
    double s = 0.0;
    for (const auto& p : v.pieces(a, b)) s += kind == NormKind::L1 ? integral_abs(p) : integral_sq(p);
    return s;
}

/// Grid with every discontinuity of V in I as a node and cells no wider than h.
inline GridFunction sample(const Potential& v, const Interval& iv, double h) {
    if (!(h > 0.0)) throw InvalidArgument("sample requires h > 0");
    if (!iv.finite()) throw InvalidArgument("sample requires a finite interval");
    const auto pcs = v.pieces(iv.lo, iv.hi);
    bool all_constant = true;
    for (const auto& p : pcs) all_constant = all_constant && p.constant();
    std::vector<double> xs;
    std::vector<double> vals;
    for (const auto& p : pcs) {
        const auto n = static_cast<std::size_t>(std::ceil(p.width() / h - 1e-12));
        const std::size_t m = std::max<std::size_t>(n, 1);
        for (std::size_t j = 0; j < m; ++j) {
            const double x = j == 0 ? p.a : p.a + p.width() * static_cast<double>(j) / static_cast<double>(m);
            xs.push_back(x);
            vals.push_back(all_constant ? p.va : p.at(x));
        }
    }
    xs.push_back(iv.hi);
    if (all_constant) return GridFunction(std::move(xs), std::move(vals), Interp::PiecewiseConstant);
    vals.push_back(pcs.back().vb);
    return GridFunction(std::move(xs), std::move(vals), Interp::PiecewiseLinear);
}

inline bool is_nonpositive(const Potential& v) {
    auto s = v.support();
    if (!s) return true;
    for (const auto& p : v.pieces(s->lo, s->hi))
        if (p.va > 0.0 || p.vb > 0.0) return false;
    return true;
}

}  // namespace boundkit
