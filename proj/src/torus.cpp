#include "cliffhull/torus.hpp"

#include <algorithm>
#include <cmath>

#include "cliffhull/quadrature.hpp"

namespace cliffhull {

namespace {

constexpr double kRankTol = 1e-10;

void check_cap_params(const Cap& c) {
    if (!(c.a >= 0.0) || !(c.b >= 0.0) || !std::isfinite(c.a) || !std::isfinite(c.b) ||
        c.a * c.a + c.b * c.b < 2.0 - 1e-9) {
        throw DomainError("cap requires a,b >= 0 with a^2 + b^2 >= 2");
    }
}

} // namespace

Hyperplane hyperplane_through(const std::array<TorusPoint, 4>& pts) {
    // Kernel of the 4x5 system [xi_i | 1] * (n, -c)^T = 0, Gauss-Jordan with
    // full pivoting. Rank < 4 (pivot below 1e-10) means no unique hyperplane.
    double m[4][5];
    for (int i = 0; i < 4; ++i) {
        const Point4 e = embed(pts[static_cast<std::size_t>(i)]);
        for (int j = 0; j < 4; ++j) m[i][j] = e[j];
        m[i][4] = 1.0;
    }

    int colp[5] = {0, 1, 2, 3, 4};
    for (int step = 0; step < 4; ++step) {
        int pr = step, pc = step;
        double best = 0.0;
        for (int r = step; r < 4; ++r)
            for (int c = step; c < 5; ++c) {
                const double v = std::abs(m[r][colp[c]]);
                if (v > best) { best = v; pr = r; pc = c; }
            }
        if (best <= kRankTol) throw AffinelyDependent("points span an affine subspace of dimension < 3");
        std::swap(colp[step], colp[pc]);
        if (pr != step)
            for (int c = 0; c < 5; ++c) std::swap(m[step][c], m[pr][c]);
        const double piv = m[step][colp[step]];
        for (int r = 0; r < 4; ++r) {
            if (r == step) continue;
            const double f = m[r][colp[step]] / piv;
            if (f == 0.0) continue;
            for (int c = step; c < 5; ++c) m[r][colp[c]] -= f * m[step][colp[c]];
            m[r][colp[step]] = 0.0;
        }
    }

    double v[5];
    v[colp[4]] = 1.0;
    for (int i = 0; i < 4; ++i) v[colp[i]] = -m[i][colp[4]] / m[i][colp[i]];

    double n[4] = {v[0], v[1], v[2], v[3]};
    double c = -v[4];
    const double norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] + n[3] * n[3]);
    if (!(norm > 0.0)) throw AffinelyDependent("degenerate normal");
    for (double& x : n) x /= norm;
    c /= norm;

    bool flip = c < 0.0;
    if (c == 0.0) {
        for (double x : n) {
            if (x != 0.0) { flip = x < 0.0; break; }
        }
    }
    if (flip) {
        for (double& x : n) x = -x;
        c = -c;
    }
    return Hyperplane{n[0], n[1], n[2], n[3], c};
}

Cap cap_from_hyperplane(const Hyperplane& h) {
    const double ap = std::hypot(h.a1, h.a2);
    const double bp = std::hypot(h.b1, h.b2);
    const double denom = ap + bp - h.c;
    if (!(h.c < ap + bp) || !(denom > 0.0))
        throw EmptyBoundary("hyperplane does not intersect the torus");
    Cap cap;
    cap.a = std::sqrt(2.0 * ap / denom);
    cap.b = std::sqrt(2.0 * bp / denom);
    cap.phi0 = ap > 0.0 ? std::atan2(h.a2, h.a1) : 0.0;
    cap.psi0 = bp > 0.0 ? std::atan2(h.b2, h.b1) : 0.0;
    return cap;
}

Cap cap_from_points(const std::array<TorusPoint, 4>& pts) {
    const Cap cap = cap_from_hyperplane(hyperplane_through(pts));
    // Residual check. A failure means the quadruple was too ill-conditioned for
    // a trustworthy cap, which callers handle exactly like affine dependence.
    for (const TorusPoint& p : pts) {
        const double sp = std::sin(0.5 * wrap_angle(p.phi - cap.phi0));
        const double sq = std::sin(0.5 * wrap_angle(p.psi - cap.psi0));
        const double r = cap.a * cap.a * sp * sp + cap.b * cap.b * sq * sq - 1.0;
        if (!(std::abs(r) < 1e-8))
            throw AffinelyDependent("cap boundary residual too large");
    }
    return cap;
}

double cap_measure(const Cap& cap, double rel_tol) {
    check_cap_params(cap);
    double A = cap.a, B = cap.b;
    if (A < B) std::swap(A, B); // measure is symmetric in (a, b); now A >= max(1, B)

    if (B == 0.0) return 8.0 * pi * std::asin(1.0 / A);

    if (B >= 1.0) {
        // phi-slices, substituted sin(phi/2) = sin(u)/A so the sqrt endpoint
        // vanishes from the integrand: smooth on [0, pi/2].
        const double a2m1 = A * A - 1.0;
        auto f = [&](double u) {
            const double cu = std::cos(u);
            return 16.0 * std::asin(cu / B) * cu / std::sqrt(a2m1 + cu * cu);
        };
        return adaptive_gk15(f, 0.0, 0.5 * pi, rel_tol).value;
    }

    // B < 1: the psi-slice saturates at full length 2*pi for small |phi|.
    // Flat part in closed form; the remainder substituted twice so the arcsin
    // kink at the matching point disappears.
    const double flat = 8.0 * pi * std::asin(std::sqrt(1.0 - B * B) / A);
    const double a2m1 = A * A - 1.0; // >= 1 - B^2 > 0 here
    const double B2 = B * B;
    auto f = [&](double v) {
        const double sv = std::sin(v), cv = std::cos(v);
        const double s2 = B2 * sv * sv;
        return 16.0 * v * B2 * sv * cv / (std::sqrt(1.0 - s2) * std::sqrt(a2m1 + s2));
    };
    return flat + adaptive_gk15(f, 0.0, 0.5 * pi, rel_tol).value;
}

double cap_bound_statistic(const Cap& c, double rel_tol) {
    return (c.a + 1.0) * (c.b + 1.0) * cap_measure(c, rel_tol);
}

} // namespace cliffhull
