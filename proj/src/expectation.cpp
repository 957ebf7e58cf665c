#include "cliffhull/expectation.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "cliffhull/angles.hpp"
#include "cliffhull/errors.hpp"
#include "cliffhull/sampling.hpp"
#include "cliffhull/summation.hpp"
#include "cliffhull/torus.hpp"

namespace cliffhull {

double h_series(double nu, double tol) {
    if (!(nu >= 0.0)) throw DomainError("h_series: nu must be nonnegative");
    if (!(tol > 0.0)) throw DomainError("h_series: tol must be positive");
    double term = std::exp(-nu) * 0.25;
    double sum = term;
    for (int j = 1; j < 100000; ++j) {
        term *= nu / j * (j + 3.0) / (j + 4.0);
        sum += term;
        if (term < tol * sum) break;
    }
    return sum;
}

double h_closed(double nu) {
    if (!(nu > 0.0)) throw DomainError("h_closed: nu must be positive");
    if (nu < 0.5) return h_series(nu);
    const double inv = 1.0 / nu;
    return inv - 3.0 * inv * inv + 6.0 * inv * inv * inv -
           (6.0 - 6.0 * std::exp(-nu)) * inv * inv * inv * inv;
}

PoissonSmallProbs poisson_small_probs(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw DomainError("poisson_small_probs: nu must be finite and positive");
    const double e = std::exp(-nu);
    PoissonSmallProbs p;
    p.p_lt2 = e + nu * e;
    p.p_eq2 = 0.5 * nu * nu * e;
    p.p_eq3 = nu * nu * nu * e / 6.0;
    p.p_ge4 = 1.0 - p.p_lt2 - p.p_eq2 - p.p_eq3;
    return p;
}

namespace {

struct BlockSums {
    double a = 0.0, a2 = 0.0; // exp(-lG) + exp(-l(4pi^2-G)) and its square
    double b = 0.0, b2 = 0.0; // the h-weighted bracket of the valence formula
    double c = 0.0, c2 = 0.0; // tail term exp(-l(4pi^2-G)) h(lG)
};

constexpr std::uint64_t kBlock = 65536;

BlockSums run_block(double lambda, std::uint64_t count, SeedSpec seed) {
    Xoshiro256pp rng(seed);
    BlockSums s;
    for (std::uint64_t i = 0; i < count; ++i) {
        double g;
        for (;;) {
            const std::array<TorusPoint, 4> q{
                uniform_torus_point(rng), uniform_torus_point(rng),
                uniform_torus_point(rng), uniform_torus_point(rng)};
            try {
                g = cap_measure(cap_from_points(q));
                break;
            } catch (const AffinelyDependent&) {
            } catch (const EmptyBoundary&) {
            }
        }
        const double eg = std::exp(-lambda * g);
        const double ec = std::exp(-lambda * (torus_area - g));
        const double va = eg + ec;
        const double vb = eg * h_closed(lambda * (torus_area - g)) +
                          ec * h_closed(lambda * g);
        const double vc = ec * h_closed(lambda * g);
        s.a += va;
        s.a2 += va * va;
        s.b += vb;
        s.b2 += vb * vb;
        s.c += vc;
        s.c2 += vc * vc;
    }
    return s;
}

// Fixed block decomposition; the merge order is by block index, so the result
// does not depend on the thread count.
BlockSums collect(double lambda, std::uint64_t samples, SeedSpec seed, int threads) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidRate("integrand sampling needs a finite positive lambda");
    if (samples == 0) throw DomainError("samples must be >= 1");
    const std::uint64_t nblocks = (samples + kBlock - 1) / kBlock;
    std::vector<BlockSums> parts(nblocks);
    auto block_seed = [&](std::uint64_t blk) {
        return SeedSpec{seed.master_seed, seed.stream_index + blk};
    };
    if (threads <= 1 || nblocks == 1) {
        for (std::uint64_t blk = 0; blk < nblocks; ++blk) {
            const std::uint64_t cnt = std::min(kBlock, samples - blk * kBlock);
            parts[blk] = run_block(lambda, cnt, block_seed(blk));
        }
    } else {
        std::atomic<std::uint64_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::uint64_t blk = next.fetch_add(1);
                if (blk >= nblocks) return;
                const std::uint64_t cnt = std::min(kBlock, samples - blk * kBlock);
                parts[blk] = run_block(lambda, cnt, block_seed(blk));
            }
        };
        std::vector<std::thread> pool;
        const int n = std::min<int>(threads, static_cast<int>(nblocks));
        pool.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::vector<double> a(nblocks), a2(nblocks), b(nblocks), b2(nblocks), c(nblocks), c2(nblocks);
    for (std::uint64_t i = 0; i < nblocks; ++i) {
        a[i] = parts[i].a;
        a2[i] = parts[i].a2;
        b[i] = parts[i].b;
        b2[i] = parts[i].b2;
        c[i] = parts[i].c;
        c2[i] = parts[i].c2;
    }
    BlockSums total;
    total.a = pairwise_sum(a);
    total.a2 = pairwise_sum(a2);
    total.b = pairwise_sum(b);
    total.b2 = pairwise_sum(b2);
    total.c = pairwise_sum(c);
    total.c2 = pairwise_sum(c2);
    return total;
}

IntegralEstimate finish(double lambda, std::uint64_t k, double scale, double sum,
                        double sumsq) {
    const double mean = sum / static_cast<double>(k);
    const double var = std::max(0.0, sumsq / static_cast<double>(k) - mean * mean);
    IntegralEstimate est;
    est.samples = k;
    est.lambda = lambda;
    est.value = scale * mean;
    est.standard_error = scale * std::sqrt(var / static_cast<double>(k));
    return est;
}

} // namespace

IntegralEstimate ef3_formula(double lambda, std::uint64_t samples, SeedSpec seed,
                             int threads) {
    const BlockSums s = collect(lambda, samples, seed, threads);
    const double l4 = lambda * lambda * lambda * lambda;
    return finish(lambda, samples, quad_torus_measure / 24.0 * l4, s.a, s.a2);
}

IntegralEstimate evbar_formula(double lambda, std::uint64_t samples, SeedSpec seed,
                               int threads) {
    const BlockSums s = collect(lambda, samples, seed, threads);
    const double l4 = lambda * lambda * lambda * lambda;
    IntegralEstimate est =
        finish(lambda, samples, quad_torus_measure / 12.0 * l4, s.b, s.b2);
    const PoissonSmallProbs p = poisson_small_probs(torus_area * lambda);
    est.value += 2.0 - p.p_eq2 - 2.0 * p.p_lt2;
    return est;
}

IntegralEstimate evbar_tail_term(double lambda, std::uint64_t samples, SeedSpec seed,
                                 int threads) {
    const BlockSums s = collect(lambda, samples, seed, threads);
    return finish(lambda, samples, quad_torus_measure, s.c, s.c2);
}

} // namespace cliffhull
