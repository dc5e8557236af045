#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "boundkit/errors.hpp"

namespace boundkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open interval (lo, hi); either endpoint may be infinite.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo < hi)) throw InvalidArgument("Interval requires lo < hi");
    }

    bool finite() const noexcept { return std::isfinite(lo) && std::isfinite(hi); }
    double length() const noexcept { return hi - lo; }
    double center() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double x) const noexcept { return lo < x && x < hi; }

    /// The concentric interval scaled by `factor` (the kI of the construction).
    Interval scaled(double factor) const {
        const double half = 0.5 * factor * length();
        return {center() - half, center() + half};
    }
    Interval shifted(double d) const { return {lo + d, hi + d}; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// A linear segment on [a, b]: value `va` is the right limit at a, `vb` the left limit at b.
struct LinearPiece {
    double a = 0.0;
    double b = 0.0;
    double va = 0.0;
    double vb = 0.0;

    double width() const noexcept { return b - a; }
    double slope() const noexcept { return (vb - va) / (b - a); }
    double at(double x) const noexcept { return va + (x - a) * slope(); }
    bool constant() const noexcept { return va == vb; }
};

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1], 8 points.
inline constexpr double kGl8Nodes[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr double kGl8Weights[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += kGl8Weights[i] * f(c + h * kGl8Nodes[i]);
    return s * h;
}

}  // namespace detail

/// Exact integral of |v| over a linear piece (splits at a sign change).
inline double integral_abs(const LinearPiece& p) {
    const double w = p.width();
    if (p.va * p.vb >= 0.0) return 0.5 * w * (std::abs(p.va) + std::abs(p.vb));
    const double t = p.va / (p.va - p.vb);  // root fraction
    return 0.5 * w * (t * std::abs(p.va) + (1.0 - t) * std::abs(p.vb));
}

/// Exact integral of v^2 over a linear piece.
inline double integral_sq(const LinearPiece& p) {
    return p.width() * (p.va * p.va + p.va * p.vb + p.vb * p.vb) / 3.0;
}

/// Integral of |v|^q over a linear piece; exact for constant pieces.
inline double integral_pow_abs(const LinearPiece& p, double q) {
    if (p.constant()) return p.width() * std::pow(std::abs(p.va), q);
    auto f = [&](double x) { return std::pow(std::abs(p.at(x)), q); };
    if (p.va * p.vb < 0.0) {
        const double r = p.a + p.width() * p.va / (p.va - p.vb);
        return detail::gauss8(f, p.a, r) + detail::gauss8(f, r, p.b);
    }
    return detail::gauss8(f, p.a, p.b);
}

enum class Interp { PiecewiseConstant, PiecewiseLinear };

inline std::string to_string(Interp i) {
    return i == Interp::PiecewiseConstant ? "constant" : "linear";
}

/// Numerical carrier for sampled functions.
///
/// PiecewiseConstant: values[i] holds on [x_i, x_{i+1}) (n-1 values).
/// PiecewiseLinear: values[i] is the value at x_i (n values), continuous.
/// Outside [x_0, x_{n-1}] the function is zero.
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(std::vector<double> breakpoints, std::vector<double> values, Interp interp)
        : x_(std::move(breakpoints)), v_(std::move(values)), interp_(interp) {
        if (x_.size() < 2) throw InvalidArgument("GridFunction needs at least two breakpoints");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i - 1] < x_[i]))
                throw InvalidArgument("GridFunction breakpoints must be strictly increasing");
        const std::size_t expect = interp_ == Interp::PiecewiseConstant ? x_.size() - 1 : x_.size();
        if (v_.size() != expect)
            throw InvalidArgument("GridFunction value count does not match interpolation");
        for (double x : x_)
            if (!std::isfinite(x)) throw InvalidArgument("GridFunction breakpoints must be finite");
    }

    static GridFunction constant(double lo, double hi, double value) {
        return GridFunction({lo, hi}, {value}, Interp::PiecewiseConstant);
    }

    bool empty() const noexcept { return x_.empty(); }
    Interp interp() const noexcept { return interp_; }
    std::span<const double> breakpoints() const noexcept { return x_; }
    std::span<const double> values() const noexcept { return v_; }
    std::size_t cells() const noexcept { return x_.empty() ? 0 : x_.size() - 1; }
    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }

    /// Index i with x_i <= x < x_{i+1}, or npos when outside.
    std::size_t cell_of(double x) const noexcept {
        if (x_.empty() || x < x_.front() || x >= x_.back()) return npos;
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        return static_cast<std::size_t>(it - x_.begin()) - 1;
    }

    LinearPiece piece(std::size_t i) const noexcept {
        if (interp_ == Interp::PiecewiseConstant) return {x_[i], x_[i + 1], v_[i], v_[i]};
        return {x_[i], x_[i + 1], v_[i], v_[i + 1]};
    }

    /// Right-limit value; zero outside the grid (the last node of a linear grid is included).
    double operator()(double x) const noexcept {
        if (interp_ == Interp::PiecewiseLinear && !x_.empty() && x == x_.back()) return v_.back();
        const std::size_t i = cell_of(x);
        if (i == npos) return 0.0;
        return piece(i).at(x);
    }

    /// Pieces restricted to [a, b], including zero pieces where [a, b] leaves the grid.
    std::vector<LinearPiece> pieces(double a, double b) const {
        std::vector<LinearPiece> out;
        if (!(a < b)) return out;
        if (x_.empty() || b <= x_.front() || a >= x_.back()) {
            out.push_back({a, b, 0.0, 0.0});
            return out;
        }
        if (a < x_.front()) out.push_back({a, x_.front(), 0.0, 0.0});
        const double lo = std::max(a, x_.front());
        const double hi = std::min(b, x_.back());
        std::size_t i = cell_of(lo);
        for (; i < cells() && x_[i] < hi; ++i) {
            const LinearPiece full = piece(i);
            const double pa = std::max(full.a, lo);
            const double pb = std::min(full.b, hi);
            if (pb > pa) out.push_back({pa, pb, full.at(pa), full.at(pb)});
        }
        if (b > x_.back()) out.push_back({x_.back(), b, 0.0, 0.0});
        return out;
    }

    double integral_abs(double a, double b) const {
        double s = 0.0;
        for (const auto& p : pieces(a, b)) s += boundkit::integral_abs(p);
        return s;
    }
    double integral_sq(double a, double b) const {
        double s = 0.0;
        for (const auto& p : pieces(a, b)) s += boundkit::integral_sq(p);
        return s;
    }
    double integral(double a, double b) const {
        double s = 0.0;
        for (const auto& p : pieces(a, b)) s += 0.5 * p.width() * (p.va + p.vb);
        return s;
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : v_) m = std::max(m, std::abs(v));
        return m;
    }

    GridFunction scaled(double factor) const {
        std::vector<double> v = v_;
        for (double& e : v) e *= factor;
        return GridFunction(x_, std::move(v), interp_);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<double> x_;
    std::vector<double> v_;
    Interp interp_ = Interp::PiecewiseConstant;
};

}  // namespace boundkit
