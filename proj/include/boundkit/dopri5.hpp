#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "boundkit/errors.hpp"

namespace boundkit {

template <std::size_t N>
using Vec = std::array<double, N>;

struct Tolerance {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t max_steps = 20'000'000;
};

/// One accepted step with its continuous extension (Hairer's contd5 form).
/// Stored values times exp(log_scale) give the actual solution.
template <std::size_t N>
struct DenseStep {
    double x0 = 0.0;
    double h = 0.0;
    double log_scale = 0.0;
    Vec<N> r0{}, r1{}, r2{}, r3{}, r4{};

    double x1() const noexcept { return x0 + h; }

    Vec<N> at(double x) const noexcept {
        const double t = (x - x0) / h;
        const double t1 = 1.0 - t;
        Vec<N> out;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = r0[i] + t * (r1[i] + t1 * (r2[i] + t * (r3[i] + t1 * r4[i])));
        return out;
    }
};

/// Dense trajectory of an integration run, forward or backward.
template <std::size_t N>
class Trajectory {
public:
    bool empty() const noexcept { return steps_.empty(); }
    bool forward() const noexcept { return steps_.empty() || steps_.front().h > 0.0; }
    double start() const { return steps_.front().x0; }
    double finish() const { return steps_.back().x1(); }
    double lo() const { return forward() ? start() : finish(); }
    double hi() const { return forward() ? finish() : start(); }
    const std::vector<DenseStep<N>>& steps() const noexcept { return steps_; }

    void push(const DenseStep<N>& s) { steps_.push_back(s); }

    /// Step covering x; x is clamped to the trajectory range.
    const DenseStep<N>& step_at(double x) const {
        if (steps_.empty()) throw InvalidArgument("empty trajectory");
        if (forward()) {
            auto it = std::upper_bound(steps_.begin(), steps_.end(), x,
                                       [](double v, const DenseStep<N>& s) { return v < s.x0; });
            return it == steps_.begin() ? *it : *(it - 1);
        }
        auto it = std::upper_bound(steps_.begin(), steps_.end(), x,
                                   [](double v, const DenseStep<N>& s) { return v > s.x0; });
        return it == steps_.begin() ? *it : *(it - 1);
    }

    /// Stored (scaled) value at x.
    Vec<N> scaled(double x) const {
        const auto& s = step_at(x);
        return s.at(std::clamp(x, std::min(s.x0, s.x1()), std::max(s.x0, s.x1())));
    }
    double log_scale(double x) const { return step_at(x).log_scale; }

    /// Step boundaries in increasing order.
    std::vector<double> nodes() const {
        std::vector<double> out;
        out.reserve(steps_.size() + 1);
        for (const auto& s : steps_) out.push_back(s.x0);
        if (!steps_.empty()) out.push_back(steps_.back().x1());
        if (!forward()) std::reverse(out.begin(), out.end());
        return out;
    }

private:
    std::vector<DenseStep<N>> steps_;
};

namespace detail {

struct Dp5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

struct NoPostStep {
    template <std::size_t N>
    double operator()(double, Vec<N>&) const noexcept { return 0.0; }
};

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration from x0 through the ordered `stops`
/// (the last stop is the endpoint). Steps never cross a stop; the right-hand side
/// is called as f(segment, x, y) where segment indexes the stop interval, so
/// piecewise definitions can use one-sided formulas at the shared endpoints.
///
/// `post(x, y)` runs after every accepted step and may rescale y in place; it
/// returns log of the factor by which the true solution exceeds the stored one.
template <std::size_t N, class Rhs, class Post = detail::NoPostStep>
Vec<N> dopri5(Rhs&& f, double x0, Vec<N> y, std::span<const double> stops, const Tolerance& tol,
              Trajectory<N>* traj = nullptr, Post&& post = Post{}) {
    using C = detail::Dp5;
    if (stops.empty()) return y;
    const double dir = stops.back() >= x0 ? 1.0 : -1.0;
    double x = x0;
    double log_scale = 0.0;
    double h_prev = 0.0;
    std::size_t steps = 0;

    for (std::size_t seg = 0; seg < stops.size(); ++seg) {
        const double end = stops[seg];
        if ((end - x) * dir <= 0.0) continue;
        Vec<N> k1 = f(seg, x, y);
        double h = h_prev != 0.0 ? std::min(std::abs(h_prev), std::abs(end - x))
                                 : std::abs(end - x);
        if (h_prev == 0.0) {
            // crude initial step from the derivative scale
            double dn = 0.0, yn = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = tol.atol + tol.rtol * std::abs(y[i]);
                dn = std::max(dn, std::abs(k1[i]) / sc);
                yn = std::max(yn, std::abs(y[i]) / sc);
            }
            if (dn > 0.0) h = std::min(h, 0.01 * std::max(yn, 1.0) / dn);
            h = std::max(h, 1e-12 * std::max(1.0, std::abs(end - x)));
        }
        while ((end - x) * dir > 0.0) {
            if (++steps > tol.max_steps) throw Error("dopri5: step budget exhausted");
            const double h_try = h;
            bool last = false;
            if (h >= std::abs(end - x) * (1.0 - 1e-12)) {
                h = std::abs(end - x);
                last = true;
            }
            const double hs = h * dir;
            Vec<N> t, k2, k3, k4, k5, k6, y1;
            for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + hs * C::a21 * k1[i];
            k2 = f(seg, x + C::c2 * hs, t);
            for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + hs * (C::a31 * k1[i] + C::a32 * k2[i]);
            k3 = f(seg, x + C::c3 * hs, t);
            for (std::size_t i = 0; i < N; ++i)
                t[i] = y[i] + hs * (C::a41 * k1[i] + C::a42 * k2[i] + C::a43 * k3[i]);
            k4 = f(seg, x + C::c4 * hs, t);
            for (std::size_t i = 0; i < N; ++i)
                t[i] = y[i] + hs * (C::a51 * k1[i] + C::a52 * k2[i] + C::a53 * k3[i] + C::a54 * k4[i]);
            k5 = f(seg, x + C::c5 * hs, t);
            for (std::size_t i = 0; i < N; ++i)
                t[i] = y[i] + hs * (C::a61 * k1[i] + C::a62 * k2[i] + C::a63 * k3[i] +
                                    C::a64 * k4[i] + C::a65 * k5[i]);
            k6 = f(seg, x + hs, t);
            for (std::size_t i = 0; i < N; ++i)
                y1[i] = y[i] + hs * (C::a71 * k1[i] + C::a73 * k3[i] + C::a74 * k4[i] +
                                     C::a75 * k5[i] + C::a76 * k6[i]);
            const double xn = last ? end : x + hs;
            const Vec<N> k7 = f(seg, xn, y1);

            double err = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double e = hs * (C::e1 * k1[i] + C::e3 * k3[i] + C::e4 * k4[i] +
                                       C::e5 * k5[i] + C::e6 * k6[i] + C::e7 * k7[i]);
                const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / static_cast<double>(N));
            if (!std::isfinite(err)) err = 1e10;

            if (err <= 1.0) {
                if (traj) {
                    DenseStep<N> ds;
                    ds.x0 = x;
                    ds.h = xn - x;
                    ds.log_scale = log_scale;
                    for (std::size_t i = 0; i < N; ++i) {
                        const double ydiff = y1[i] - y[i];
                        const double bspl = hs * k1[i] - ydiff;
                        ds.r0[i] = y[i];
                        ds.r1[i] = ydiff;
                        ds.r2[i] = bspl;
                        ds.r3[i] = ydiff - hs * k7[i] - bspl;
                        ds.r4[i] = hs * (C::d1 * k1[i] + C::d3 * k3[i] + C::d4 * k4[i] +
                                         C::d5 * k5[i] + C::d6 * k6[i] + C::d7 * k7[i]);
                    }
                    traj->push(ds);
                }
                x = xn;
                y = y1;
                k1 = k7;
                const double dl = post(x, y);
                if (dl != 0.0) {
                    log_scale += dl;
                    k1 = f(seg, x, y);
                }
                const double fac =
                    err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
                h = (last ? std::max(h, h_try) : h) * fac;
                h_prev = h;
            } else {
                h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
                if (h < 1e-15 * std::max(1.0, std::abs(x)))
                    throw Error("dopri5: step size underflow");
            }
        }
    }
    return y;
}

}  // namespace boundkit
