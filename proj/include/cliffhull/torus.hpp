#pragma once

#include <array>

#include "cliffhull/angles.hpp"
#include "cliffhull/errors.hpp"

namespace cliffhull {

// Point on the flat torus, both angles canonical in (-pi, pi].
struct TorusPoint {
    double phi = 0.0;
    double psi = 0.0;
};

struct Point4 {
    std::array<double, 4> x{0.0, 0.0, 0.0, 0.0};
    double operator[](int i) const { return x[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
};

// Oriented hyperplane {xi : a1*xi1 + a2*xi2 + b1*xi3 + b2*xi4 = c} with unit
// normal and c >= 0. When c == 0 the sign is fixed by making the first nonzero
// normal component positive.
struct Hyperplane {
    double a1 = 0.0, a2 = 0.0, b1 = 0.0, b2 = 0.0;
    double c = 0.0;
};

// Torus cap {a^2 sin^2((phi-phi0)/2) + b^2 sin^2((psi-psi0)/2) <= 1}.
// The parameter constraint a^2 + b^2 >= 2 selects the side of measure <= 2*pi^2.
struct Cap {
    double a = 0.0;
    double b = 0.0;
    double phi0 = 0.0;
    double psi0 = 0.0;
};

// (cos phi, sin phi, cos psi, sin psi); always lands on the radius-sqrt(2) sphere.
inline Point4 embed(TorusPoint p) {
    return Point4{{std::cos(p.phi), std::sin(p.phi), std::cos(p.psi), std::sin(p.psi)}};
}

// Unique hyperplane through the four embedded points.
// Throws AffinelyDependent when the 4x5 homogeneous system has rank < 4
// (numerical rank, pivot tolerance 1e-10).
Hyperplane hyperplane_through(const std::array<TorusPoint, 4>& pts);

// Analytic cap of the positive side of h. Throws EmptyBoundary when
// c >= |(a1,a2)| + |(b1,b2)| (the hyperplane misses the torus).
// Phase convention: phi0 = 0 when (a1,a2) = 0, psi0 = 0 when (b1,b2) = 0.
Cap cap_from_hyperplane(const Hyperplane& h);

// Composition of the two above, plus an on-boundary residual check (< 1e-8)
// for each input point.
Cap cap_from_points(const std::array<TorusPoint, 4>& pts);

// Boundary counts as inside; no tolerance fudging.
inline bool cap_contains(const Cap& c, TorusPoint p) {
    const double sp = std::sin(0.5 * wrap_angle(p.phi - c.phi0));
    const double sq = std::sin(0.5 * wrap_angle(p.psi - c.psi0));
    return c.a * c.a * sp * sp + c.b * c.b * sq * sq <= 1.0;
}

// Two-dimensional measure of the cap, by adaptive quadrature of the exact
// slice-length integral (substituted so integrands stay smooth). Relative
// accuracy ~1e-9 or better; the result lies in (0, 2*pi^2].
double cap_measure(const Cap& c, double rel_tol = 1e-9);

// (a+1)(b+1) * cap_measure. Always in [8, 16*pi^2].
double cap_bound_statistic(const Cap& c, double rel_tol = 1e-9);

} // namespace cliffhull
