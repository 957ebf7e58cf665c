#pragma once

#include <cstdint>

#include "cliffhull/rng.hpp"

namespace cliffhull {

struct IntegralEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::uint64_t samples = 0;
    double lambda = 0.0;
};

struct PoissonSmallProbs {
    double p_lt2 = 0.0; // P(N <= 1)
    double p_eq2 = 0.0;
    double p_eq3 = 0.0;
    double p_ge4 = 0.0;
};

// h(nu) = E[1/(Z+4)] for Z ~ Poisson(nu). Closed form
//   1/nu - 3/nu^2 + 6/nu^3 - (6 - 6 e^-nu)/nu^4
// above nu = 0.5; below that the alternating cancellation eats digits, so the
// series takes over. Throws DomainError for nu <= 0.
double h_closed(double nu);

// Partial sums of e^-nu * sum nu^j / (j! (j+4)); stops when the next term
// drops below tol * sum. Valid for nu >= 0; h_series(0) = 1/4 exactly.
double h_series(double nu, double tol = 1e-16);

// Exact Poisson point masses at 2 and 3, the mass below 2, and the rest.
// The four fields sum to 1 by construction.
PoissonSmallProbs poisson_small_probs(double nu);

// Monte Carlo value of (256 pi^8 / 24) * lambda^4 *
//   E[ exp(-lambda G) + exp(-lambda (4 pi^2 - G)) ]
// where G is the smaller-cap area of a uniform random quadruple. Equals the
// expected facet count of the hull of a rate-lambda process.
// Work is split into fixed 65536-sample blocks with per-block seed streams
// (seed.stream_index + block), so results are identical for any threads value.
IntegralEstimate ef3_formula(double lambda, std::uint64_t samples, SeedSpec seed,
                             int threads = 1);

// Monte Carlo value of (256 pi^8 / 12) * lambda^4 *
//   E[ exp(-lambda G) h(lambda (4 pi^2 - G)) + exp(-lambda (4 pi^2 - G)) h(lambda G) ]
// plus the exact small-count correction 2 - P(N=2) - 2 P(N<2) for
// N ~ Poisson(4 pi^2 lambda). Equals the expected mean vertex valence.
IntegralEstimate evbar_formula(double lambda, std::uint64_t samples, SeedSpec seed,
                               int threads = 1);

// The second bracket term alone, without the lambda^4/12 prefactor:
// 256 pi^8 * E[ exp(-lambda (4 pi^2 - G)) h(lambda G) ]. Bounded pointwise by
// 64 pi^8 exp(-2 lambda pi^2); exposed so the bound is checkable directly.
IntegralEstimate evbar_tail_term(double lambda, std::uint64_t samples, SeedSpec seed,
                                 int threads = 1);

} // namespace cliffhull
