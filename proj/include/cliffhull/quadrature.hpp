#pragma once

#include <cmath>
#include <cstdint>

namespace cliffhull {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;   // accumulated |K15 - G7| estimates, usually a large overestimate
    long long evals = 0;
    int max_depth = 0;
};

namespace detail {

// Gauss-Kronrod 15/7 nodes and weights (positive half; QUADPACK values).
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gk15_panel(F& f, double lo, double hi, double& k15, double& g7) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = f(c);
    double rk = gk_wk[7] * fc;
    double rg = gk_wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * gk_x[i];
        const double fs = f(c - dx) + f(c + dx);
        rk += gk_wk[i] * fs;
        if (i % 2 == 1) rg += gk_wg[i / 2] * fs;
    }
    k15 = rk * h;
    g7 = rg * h;
}

template <class F>
inline void gk_adapt(F& f, double lo, double hi, double rel_tol, double abs_tol,
                     int depth, int max_depth, QuadResult& out) {
    double k15, g7;
    gk15_panel(f, lo, hi, k15, g7);
    out.evals += 15;
    if (depth > out.max_depth) out.max_depth = depth;
    const double err = std::abs(k15 - g7);
    if (err <= abs_tol || err <= rel_tol * std::abs(k15) || depth >= max_depth) {
        out.value += k15;
        out.error += err;
        return;
    }
    const double mid = 0.5 * (lo + hi);
    gk_adapt(f, lo, mid, rel_tol, 0.5 * abs_tol, depth + 1, max_depth, out);
    gk_adapt(f, mid, hi, rel_tol, 0.5 * abs_tol, depth + 1, max_depth, out);
}

} // namespace detail

// Adaptive Gauss-Kronrod on [lo, hi]. Panels are accepted on a per-panel
// relative test, with abs_tol as a floor so near-zero tails terminate.
template <class F>
QuadResult adaptive_gk15(F&& f, double lo, double hi,
                         double rel_tol = 1e-10, double abs_tol = 0.0,
                         int max_depth = 52) {
    QuadResult out;
    if (!(lo < hi)) return out;
    detail::gk_adapt(f, lo, hi, rel_tol, abs_tol, 0, max_depth, out);
    return out;
}

} // namespace cliffhull
