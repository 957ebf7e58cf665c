#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace cliffhull {

// Pairwise (tree) summation. Error grows like log(n) instead of n, and the
// result depends only on element order, not on how work was partitioned.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n <= 16) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct MeanVar {
    double mean = 0.0;
    double sd = 0.0;   // sample standard deviation (n-1 denominator)
    double se = 0.0;   // sd / sqrt(n)
    std::size_t n = 0;
};

// Two-pass mean/variance, both passes pairwise-summed.
inline MeanVar mean_and_se(std::span<const double> x) {
    MeanVar r;
    r.n = x.size();
    if (r.n == 0) return r;
    r.mean = pairwise_sum(x) / static_cast<double>(r.n);
    if (r.n == 1) return r;

    // Sum squared deviations without materializing a second array: recurse in
    // the same tree shape as pairwise_sum.
    struct Rec {
        static double go(std::span<const double> v, double m) {
            const std::size_t n = v.size();
            if (n <= 16) {
                double s = 0.0;
                for (double y : v) {
                    const double d = y - m;
                    s += d * d;
                }
                return s;
            }
            const std::size_t half = n / 2;
            return go(v.first(half), m) + go(v.subspan(half), m);
        }
    };
    const double ss = Rec::go(x, r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(r.n - 1));
    r.se = r.sd / std::sqrt(static_cast<double>(r.n));
    return r;
}

} // namespace cliffhull
