#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cliffhull/rng.hpp"

namespace cliffhull {

enum class OutputFormat { csv, json };

// One batch description, shared by every mode; each mode reads the fields it
// needs. The CLI fills this from flags, config file, and environment.
struct ExperimentConfig {
    std::vector<double> lambdas;
    std::uint64_t trials = 10000;
    std::uint64_t samples = 1000000;
    std::uint64_t master_seed = 0;
    int threads = 1;
    std::string out_path; // empty writes to stdout
    OutputFormat format = OutputFormat::json;
    double t_min = 0.005;
    double t_max = 0.3;
    int bins = 60;
    double tol = 1e-5;
};

struct TrialRecord {
    std::uint64_t trial_index = 0;
    std::uint64_t seed = 0; // mixed per-trial seed, reported for replay
    double lambda = 0.0;
    std::uint64_t n_points = 0;
    long long f0 = 0, f1 = 0, f2 = 0, f3 = 0;
    double vbar = 0.0;
    long long euler_residual = 0, r1_residual = 0, r2_residual = 0;
    bool degenerate = false;
};

struct TrialSummary {
    double lambda = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t degenerate_trials = 0;
    double mean_f0 = 0.0, se_f0 = 0.0;
    double mean_f1 = 0.0, se_f1 = 0.0;
    double mean_f2 = 0.0, se_f2 = 0.0;
    double mean_f3 = 0.0, se_f3 = 0.0;
    double mean_vbar = 0.0, se_vbar = 0.0;
};

struct SimulateResult {
    std::vector<TrialRecord> trials;      // grouped by lambda, then trial order
    std::vector<TrialSummary> summaries;  // one per lambda, in config order
};

struct RegressionPoint {
    double lambda = 0.0;
    double log10_n = 0.0; // log10(4 pi^2 lambda)
    double mean_vbar = 0.0;
    double se_vbar = 0.0;
    std::uint64_t trials = 0;
};

// Weighted least squares of mean valence against log10 of the expected point
// count, weights 1/se^2.
struct RegressionReport {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    std::vector<RegressionPoint> points;
};

struct JacobianCheckResult {
    std::uint64_t draws = 0;
    double tol = 0.0;
    double max_rel_err = 0.0;   // worst |analytic - finite difference| / |fd|
    double grid_min_abs_j1 = 0.0;
    bool pass = false;
};

// Independent hull trials at each configured rate. Per-trial streams are
// (master_seed, lambda_index * 2^32 + trial), so results do not depend on
// thread count. Throws ConfigError on bad counts, InvariantViolation if a
// nondegenerate hull fails its structural identities.
SimulateResult run_simulate(const ExperimentConfig& cfg);

// Mean-valence growth fit. Needs >= 3 distinct rates spanning >= 1.5 decades.
RegressionReport run_regress(const ExperimentConfig& cfg);

// Uniform cap-sample census: bound-statistic range, violations, branch split.
nlohmann::json run_caps(const ExperimentConfig& cfg);

// Formula-vs-simulation cross-validation per rate, plus the tail-term bound.
nlohmann::json run_integrals(const ExperimentConfig& cfg);

// Importance-sampled measure profile over a geometric threshold grid plus the
// scaling fit over [t_min, t_max].
nlohmann::json run_measure_fit(const ExperimentConfig& cfg);

nlohmann::json run_jacobian_check(const ExperimentConfig& cfg);

// Finite-difference verification of the Jacobian identity on `draws` random
// parameters (kept away from the fold locus where both determinants vanish),
// plus the |J1| > 64 floor on the grid around the reference theta.
JacobianCheckResult jacobian_check(std::uint64_t draws, SeedSpec seed, double tol);

// Fixed schema: header
// trial,seed,lambda,n_points,f0,f1,f2,f3,vbar,euler_residual,r1_residual,r2_residual,degenerate
// one row per trial, reals with 17 significant digits, degenerate as 0/1.
void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials);

nlohmann::json config_echo(const ExperimentConfig& cfg);
nlohmann::json simulate_report(const ExperimentConfig& cfg, const SimulateResult& result);
nlohmann::json regress_report(const ExperimentConfig& cfg, const RegressionReport& report);

} // namespace cliffhull
