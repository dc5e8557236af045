#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "boundkit.hpp"

namespace corpus {

using namespace boundkit;

struct Member {
    std::string name;
    Potential V;
    Domain domain;
};

inline constexpr double kFloor = 1e-4;

inline std::vector<Member> members() {
    return {
        {"zero", Potential::zero(), Domain::whole_line()},
        {"square", Potential::square(0.5), Domain::whole_line()},
        {"dipole", Potential::dipole(0.3), Domain::whole_line()},
        {"dipole_pair",
         Potential::sparse({{BumpKind::Dipole, 0.5, -150.0}, {BumpKind::Dipole, 0.3, 150.0}}),
         Domain::whole_line()},
        {"sparse3",
         Potential::sparse({{BumpKind::Square, 0.3, -40.0}, {BumpKind::Square, 0.15, 0.0},
                            {BumpKind::Square, 0.08, 60.0}}),
         Domain::whole_line()},
        {"half_dirichlet", Potential::square(0.5, 5.0), Domain::half_dirichlet()},
        {"half_neumann", Potential::square(0.5, 5.0), Domain::half_neumann()},
    };
}

inline Decomposition decompose(const Member& m, bool strict = false) {
    DecomposeOptions o;
    o.strict = strict;
    return run_decomposition(m.V, m.domain, kFloor, o);
}

/// Smooth compactly supported W profile sampled linearly on (-1, 1).
inline GridFunction w_profile(int which, int n = 400) {
    std::vector<double> x, w;
    for (int i = 0; i <= n; ++i) {
        const double t = -1.0 + 2.0 * i / n;
        x.push_back(t);
        const double c = std::cos(0.5 * std::numbers::pi * t);
        w.push_back(which == 0 ? 0.3 * c * c : 0.5 * (1.0 - t * t) * (1.0 - t * t));
    }
    return GridFunction(std::move(x), std::move(w), Interp::PiecewiseLinear);
}

}  // namespace corpus
