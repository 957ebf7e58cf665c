#include "cliffhull/sampling.hpp"

#include <cmath>

#include "cliffhull/angles.hpp"
#include "cliffhull/errors.hpp"

namespace cliffhull {

namespace {

std::uint64_t poisson_inversion(double nu, Xoshiro256pp& rng) {
    // chop the tail search at a point with negligible mass for nu < 30
    const double enu = std::exp(-nu);
    std::uint64_t k = 0;
    double p = enu;
    double c = p;
    const double u = rng.uniform01();
    while (u > c && k < 200) {
        ++k;
        p *= nu / static_cast<double>(k);
        c += p;
    }
    return k;
}

// Hormann's PTRS transformed-rejection sampler, exact for nu >= 10 or so.
std::uint64_t poisson_ptrs(double nu, Xoshiro256pp& rng) {
    const double slam = std::sqrt(nu);
    const double loglam = std::log(nu);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.uniform01() - 0.5;
        const double v = rng.uniform01();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + nu + 0.43);
        if (kf < 0.0) continue;
        const double k = kf;
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (us < 0.013 && v > us) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = -nu + k * loglam - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(k);
    }
}

} // namespace

std::uint64_t poisson_count(double nu, Xoshiro256pp& rng) {
    if (!(nu >= 0.0) || !std::isfinite(nu))
        throw InvalidRate("poisson rate must be finite and nonnegative");
    if (nu == 0.0) return 0;
    if (nu < 30.0) return poisson_inversion(nu, rng);
    return poisson_ptrs(nu, rng);
}

TorusPoint uniform_torus_point(Xoshiro256pp& rng) {
    // uniform01 is in [0,1), so both angles land in (-pi, pi]
    return TorusPoint{pi - two_pi * rng.uniform01(), pi - two_pi * rng.uniform01()};
}

std::vector<TorusPoint> sample_poisson_process(double lambda, Xoshiro256pp& rng) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidRate("process intensity must be finite and positive");
    const std::uint64_t n = poisson_count(torus_area * lambda, rng);
    return sample_uniform_points(static_cast<std::size_t>(n), rng);
}

std::vector<TorusPoint> sample_uniform_points(std::size_t n, Xoshiro256pp& rng) {
    std::vector<TorusPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_torus_point(rng));
    return out;
}

std::vector<Point4> embed_all(const std::vector<TorusPoint>& pts) {
    std::vector<Point4> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(embed(p));
    return out;
}

} // namespace cliffhull
