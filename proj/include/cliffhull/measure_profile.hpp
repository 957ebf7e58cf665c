#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cliffhull/rng.hpp"
#include "cliffhull/torus.hpp"

namespace cliffhull {

// One sampled quadruple reduced to its cap data. weight is 1 for plain
// uniform sampling; the importance sampler stores 1/q(x) so weighted folds
// estimate the same uniform-measure fractions.
struct CapSampleRecord {
    double a = 0.0;
    double b = 0.0;
    double g = 0.0;            // smaller-cap area
    bool small_branch = false; // min(a, b) < 100
    double weight = 1.0;
};

// Empirical scaled CDFs of the cap-area distribution: for each threshold t,
// m_hat estimates mes8{ G < t } over quadruple space (total mass 256 pi^8),
// split into n_hat (min(a,b) < 100) and l_hat (the rest), m_hat = n_hat + l_hat
// exactly. hits_* count raw records below t regardless of weight.
struct MeasureProfile {
    std::vector<double> thresholds;
    std::vector<double> m_hat;
    std::vector<double> n_hat;
    std::vector<double> l_hat;
    std::vector<double> se_m;
    std::vector<std::uint64_t> hits;
    std::vector<std::uint64_t> hits_n;
    std::vector<std::uint64_t> hits_l;
    std::uint64_t sample_count = 0;
};

// Log-log fit of the profile against the t^3 |ln t| model over [t_min, t_max].
// gamma_* are the empirical min/max of m_hat/(t^3 |ln t|); the n fit uses t^3
// and the l fit uses t^3 |ln t|. Sub-fit fields are NaN when fewer than two
// bins in range have positive estimates.
struct ScalingFitReport {
    double slope = 0.0;
    double gamma_low = 0.0;
    double gamma_high = 0.0;
    double slope_n = 0.0;
    double n_ratio_low = 0.0;
    double n_ratio_high = 0.0;
    double slope_l = 0.0;
    double l_ratio_low = 0.0;
    double l_ratio_high = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    int bins_used = 0;
};

// Boundary parametrization of a quadruple on a common cap edge:
// phi_i = phi0 + 2 asin(alpha cos theta_i), psi_i = psi0 + 2 asin(beta sin theta_i).
// The analytic regime of interest keeps alpha, beta in (0, 1/100).
struct ThetaParam {
    double alpha = 0.0;
    double beta = 0.0;
    double phi0 = 0.0;
    double psi0 = 0.0;
    std::array<double, 4> theta{0.0, 0.0, 0.0, 0.0};
};

std::vector<double> geometric_thresholds(double lo, double hi, int bins);

// k records from independent uniform quadruples. Ill-conditioned quadruples
// (no reliable cap fit) are redrawn; *resampled counts the redraws. Work is
// split into fixed 65536-draw blocks seeded by (master, stream + block).
std::vector<CapSampleRecord> sample_cap_records(std::uint64_t k, SeedSpec seed,
                                                std::uint64_t* resampled = nullptr);

// Weighted empirical CDF fold. Thresholds must be sorted, positive.
MeasureProfile estimate_profile(const std::vector<CapSampleRecord>& records,
                                const std::vector<double>& thresholds);

// Streaming profile from k draws of a mixture proposal (uniform quadruples plus
// two parametrized families biased toward small caps and thin strips), with
// self-normalized importance weights bounded by 1/0.4. Populates small-t bins
// that plain uniform sampling cannot reach at feasible k; estimates the same
// uniform-measure fractions. Deterministic for fixed seed and any threads.
MeasureProfile weighted_cap_profile(std::uint64_t k, SeedSpec seed,
                                    const std::vector<double>& thresholds,
                                    int threads = 1,
                                    std::uint64_t* resampled = nullptr);

// Least-squares slopes of the profile logs over thresholds in [t_min, t_max].
// Throws InsufficientData when any bin in range has fewer than 100 raw hits
// (or the range covers fewer than two bins).
ScalingFitReport fit_scaling(const MeasureProfile& profile, double t_min, double t_max);

std::array<TorusPoint, 4> theta_to_points(const ThetaParam& p);

// The reduced Jacobian of the boundary parametrization: a signed sum over the
// 24 permutations (ijkl) of
//   64 sign(ijkl) cos^2 th_i cos th_j sin^2 th_k sin th_l
//     * cos((phi_j-phi0)/2) cos((psi_l-psi0)/2) / prod_m cos((phi_m-phi0)/2) cos((psi_m-psi0)/2)
// where cos((phi_m-phi0)/2) = sqrt(1 - alpha^2 cos^2 th_m) etc. The full
// 8-variable Jacobian determinant equals alpha^2 beta^2 times this.
double jacobian_reduced(const ThetaParam& p);

// The bare permutation sum (no cosine corrections), on caller-supplied
// cosines/sines so exact grid values like 0 and +-1 stay exact.
double theta_signed_sum(const std::array<double, 4>& cos_theta,
                        const std::array<double, 4>& sin_theta);

// Central-difference determinant of the 8x8 Jacobian of the (unwrapped)
// parametrization map, ordered (alpha, beta, phi0, psi0, theta1..4) ->
// (phi1, psi1, ..., phi4, psi4).
double numeric_jacobian_det(const ThetaParam& p, double step = 1e-6);

// Closed form of the integral of alpha^2 beta^2 over
// { max(alpha, beta) < 1/100, alpha beta < tau }:
//   tau^3/9 - (2 ln 100 / 3) tau^3 + (1/3) tau^3 |ln tau|.
// Valid for 0 < tau < 1/10000; DomainError otherwise.
double alpha_beta_integral(double tau);

} // namespace cliffhull
