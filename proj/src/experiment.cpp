#include "cliffhull/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "cliffhull/angles.hpp"
#include "cliffhull/errors.hpp"
#include "cliffhull/expectation.hpp"
#include "cliffhull/hull4d.hpp"
#include "cliffhull/measure_profile.hpp"
#include "cliffhull/sampling.hpp"
#include "cliffhull/summation.hpp"

namespace cliffhull {

namespace {

using nlohmann::json;

void check_lambdas(const std::vector<double>& ls) {
    if (ls.empty()) throw ConfigError("at least one lambda is required");
    for (double l : ls)
        if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambdas must be positive and finite");
}

void check_threads(int threads) {
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

TrialRecord one_trial(double lambda, SeedSpec seed) {
    TrialRecord rec;
    rec.seed = mix_seed(seed);
    rec.lambda = lambda;
    Xoshiro256pp rng(seed);
    const std::vector<TorusPoint> pts = sample_poisson_process(lambda, rng);
    rec.n_points = pts.size();

    HullComplex hull;
    try {
        hull = build_hull(embed_all(pts));
    } catch (const DegeneratePredicateTie&) {
        // Exact ties have probability zero under continuous sampling; if one
        // does occur, report the trial as degenerate instead of aborting.
        rec.degenerate = true;
        rec.f0 = static_cast<long long>(pts.size());
        return rec;
    }

    const FVector f = f_vector(hull);
    rec.f0 = f.f0;
    rec.f1 = f.f1;
    rec.f2 = f.f2;
    rec.f3 = f.f3;
    rec.vbar = mean_valence(f);
    const DehnSommervilleReport rep = validate(hull);
    rec.degenerate = rep.degenerate;
    rec.euler_residual = rep.euler_residual;
    rec.r1_residual = rep.r1_residual;
    rec.r2_residual = rep.r2_residual;
    if (!rec.degenerate &&
        (rec.euler_residual != 0 || rec.r1_residual != 0 || rec.r2_residual != 0 ||
         !rep.ridges_ok || !rep.orientation_ok))
        throw InvariantViolation("nondegenerate hull failed structural validation");
    return rec;
}

// `stream_base` keeps the per-trial streams of different rates (and different
// estimator stages inside one mode) disjoint.
std::vector<TrialRecord> simulate_lambda(double lambda, std::uint64_t trials,
                                         std::uint64_t master_seed, std::uint64_t stream_base,
                                         int threads) {
    std::vector<TrialRecord> records(trials);
    auto body = [&](std::uint64_t t) {
        records[t] = one_trial(lambda, SeedSpec{master_seed, stream_base + t});
        records[t].trial_index = t;
    };
    if (threads <= 1) {
        for (std::uint64_t t = 0; t < trials; ++t) body(t);
    } else {
        std::atomic<std::uint64_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::uint64_t t = next.fetch_add(1);
                if (t >= trials) return;
                body(t);
            }
        };
        std::vector<std::thread> pool;
        const std::uint64_t nt = std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), trials);
        pool.reserve(nt);
        for (std::uint64_t i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return records;
}

TrialSummary summarize(double lambda, const std::vector<TrialRecord>& records) {
    TrialSummary s;
    s.lambda = lambda;
    s.trials = records.size();
    std::vector<double> c0, c1, c2, c3, cv;
    c0.reserve(records.size());
    c1.reserve(records.size());
    c2.reserve(records.size());
    c3.reserve(records.size());
    cv.reserve(records.size());
    for (const TrialRecord& r : records) {
        if (r.degenerate) ++s.degenerate_trials;
        c0.push_back(static_cast<double>(r.f0));
        c1.push_back(static_cast<double>(r.f1));
        c2.push_back(static_cast<double>(r.f2));
        c3.push_back(static_cast<double>(r.f3));
        cv.push_back(r.vbar);
    }
    const MeanVar m0 = mean_and_se(c0), m1 = mean_and_se(c1), m2 = mean_and_se(c2),
                  m3 = mean_and_se(c3), mv = mean_and_se(cv);
    s.mean_f0 = m0.mean;
    s.se_f0 = m0.se;
    s.mean_f1 = m1.mean;
    s.se_f1 = m1.se;
    s.mean_f2 = m2.mean;
    s.se_f2 = m2.se;
    s.mean_f3 = m3.mean;
    s.se_f3 = m3.se;
    s.mean_vbar = mv.mean;
    s.se_vbar = mv.se;
    return s;
}

std::string real17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double uniform_angle(Xoshiro256pp& rng) { return -pi + two_pi * rng.uniform01(); }

double log_uniform(Xoshiro256pp& rng, double lo, double hi) {
    const double v = std::exp(std::log(lo) + rng.uniform01() * (std::log(hi) - std::log(lo)));
    return std::clamp(v, lo, hi);
}

json estimate_json(const IntegralEstimate& e) {
    return json{{"value", e.value},
                {"standard_error", e.standard_error},
                {"samples", e.samples},
                {"lambda", e.lambda}};
}

} // namespace

SimulateResult run_simulate(const ExperimentConfig& cfg) {
    check_lambdas(cfg.lambdas);
    check_threads(cfg.threads);
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");

    SimulateResult out;
    out.trials.reserve(cfg.lambdas.size() * cfg.trials);
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
        const double lambda = cfg.lambdas[li];
        std::vector<TrialRecord> records = simulate_lambda(
            lambda, cfg.trials, cfg.master_seed, static_cast<std::uint64_t>(li) << 32, cfg.threads);
        out.summaries.push_back(summarize(lambda, records));
        for (TrialRecord& r : records) {
            r.trial_index = out.trials.size();
            out.trials.push_back(r);
        }
    }
    return out;
}

RegressionReport run_regress(const ExperimentConfig& cfg) {
    check_lambdas(cfg.lambdas);
    check_threads(cfg.threads);
    if (cfg.trials < 2) throw ConfigError("regression needs >= 2 trials per lambda");
    std::vector<double> ls = cfg.lambdas;
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    if (ls.size() < 3) throw ConfigError("regression needs >= 3 distinct lambdas");
    if (std::log10(ls.back() / ls.front()) < 1.5)
        throw ConfigError("lambdas must span >= 1.5 decades of expected point count");

    RegressionReport rep;
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
        const double lambda = cfg.lambdas[li];
        const std::vector<TrialRecord> records = simulate_lambda(
            lambda, cfg.trials, cfg.master_seed, static_cast<std::uint64_t>(li) << 32, cfg.threads);
        const TrialSummary s = summarize(lambda, records);
        RegressionPoint pt;
        pt.lambda = lambda;
        pt.log10_n = std::log10(torus_area * lambda);
        pt.mean_vbar = s.mean_vbar;
        pt.se_vbar = s.se_vbar;
        pt.trials = s.trials;
        rep.points.push_back(pt);
    }

    // Weighted least squares with weights 1/se^2.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const RegressionPoint& p : rep.points) {
        const double se = std::max(p.se_vbar, 1e-12);
        const double w = 1.0 / (se * se);
        sw += w;
        sx += w * p.log10_n;
        sy += w * p.mean_vbar;
        sxx += w * p.log10_n * p.log10_n;
        sxy += w * p.log10_n * p.mean_vbar;
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 0.0)) throw ConfigError("regression design is singular");
    rep.slope = (sw * sxy - sx * sy) / det;
    rep.intercept = (sxx * sy - sx * sxy) / det;
    rep.slope_se = std::sqrt(sw / det);
    rep.intercept_se = std::sqrt(sxx / det);
    return rep;
}

nlohmann::json run_caps(const ExperimentConfig& cfg) {
    if (cfg.samples < 1) throw ConfigError("samples must be >= 1");
    std::uint64_t resampled = 0;
    const std::vector<CapSampleRecord> records =
        sample_cap_records(cfg.samples, SeedSpec{cfg.master_seed, 0}, &resampled);

    double bound_min = std::numeric_limits<double>::infinity();
    double bound_max = 0.0, g_max = 0.0;
    std::uint64_t violations = 0, small = 0;
    const double lo = 8.0, hi = 16.0 * pi * pi;
    for (const CapSampleRecord& r : records) {
        const double bound = (r.a + 1.0) * (r.b + 1.0) * r.g;
        bound_min = std::min(bound_min, bound);
        bound_max = std::max(bound_max, bound);
        g_max = std::max(g_max, r.g);
        if (!(bound >= lo && bound <= hi)) ++violations;
        if (r.small_branch) ++small;
    }
    return json{{"mode", "caps"},
                {"config", config_echo(cfg)},
                {"samples", cfg.samples},
                {"resampled", resampled},
                {"bound_lo", lo},
                {"bound_hi", hi},
                {"bound_min", bound_min},
                {"bound_max", bound_max},
                {"violations", violations},
                {"g_max", g_max},
                {"small_branch_fraction",
                 static_cast<double>(small) / static_cast<double>(records.size())}};
}

nlohmann::json run_integrals(const ExperimentConfig& cfg) {
    check_lambdas(cfg.lambdas);
    check_threads(cfg.threads);
    if (cfg.samples < 2) throw ConfigError("samples must be >= 2");
    if (cfg.trials < 2) throw ConfigError("trials must be >= 2");

    json per_lambda = json::array();
    bool all_pass = true;
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
        const double lambda = cfg.lambdas[li];
        const std::uint64_t base = static_cast<std::uint64_t>(li * 4) << 32;
        const IntegralEstimate ef3 =
            ef3_formula(lambda, cfg.samples, SeedSpec{cfg.master_seed, base}, cfg.threads);
        const IntegralEstimate evb =
            evbar_formula(lambda, cfg.samples, SeedSpec{cfg.master_seed, base + (1ull << 32)},
                          cfg.threads);
        const IntegralEstimate tail =
            evbar_tail_term(lambda, cfg.samples, SeedSpec{cfg.master_seed, base + (2ull << 32)},
                            cfg.threads);

        const std::vector<TrialRecord> records = simulate_lambda(
            lambda, cfg.trials, cfg.master_seed, base + (3ull << 32), cfg.threads);
        const TrialSummary s = summarize(lambda, records);

        const double ef3_comb = std::hypot(ef3.standard_error, s.se_f3);
        const double ef3_diff = ef3.value - s.mean_f3;
        const bool ef3_pass = std::abs(ef3_diff) <= 3.0 * ef3_comb;
        const double evb_comb = std::hypot(evb.standard_error, s.se_vbar);
        const double evb_diff = evb.value - s.mean_vbar;
        const bool evb_pass = std::abs(evb_diff) <= 3.0 * evb_comb;
        const double tail_bound = 64.0 * std::pow(pi, 8.0) * std::exp(-2.0 * lambda * pi * pi);
        const bool tail_ok = tail.value <= tail_bound + 3.0 * tail.standard_error;
        all_pass = all_pass && ef3_pass && evb_pass && tail_ok;

        per_lambda.push_back(json{{"lambda", lambda},
                                  {"ef3_formula", estimate_json(ef3)},
                                  {"ef3_simulated_mean", s.mean_f3},
                                  {"ef3_simulated_se", s.se_f3},
                                  {"ef3_diff", ef3_diff},
                                  {"ef3_combined_se", ef3_comb},
                                  {"ef3_pass", ef3_pass},
                                  {"evbar_formula", estimate_json(evb)},
                                  {"evbar_simulated_mean", s.mean_vbar},
                                  {"evbar_simulated_se", s.se_vbar},
                                  {"evbar_diff", evb_diff},
                                  {"evbar_combined_se", evb_comb},
                                  {"evbar_pass", evb_pass},
                                  {"tail_term", estimate_json(tail)},
                                  {"tail_bound", tail_bound},
                                  {"tail_within_bound", tail_ok},
                                  {"trials", cfg.trials}});
    }
    return json{{"mode", "integrals"},
                {"config", config_echo(cfg)},
                {"results", per_lambda},
                {"all_pass", all_pass}};
}

nlohmann::json run_measure_fit(const ExperimentConfig& cfg) {
    check_threads(cfg.threads);
    if (cfg.samples < 1) throw ConfigError("samples must be >= 1");
    if (!(cfg.t_min > 0.0) || !(cfg.t_max > cfg.t_min)) throw ConfigError("need 0 < tmin < tmax");
    if (cfg.bins < 2) throw ConfigError("bins must be >= 2");

    const double lo = std::min(1e-3, cfg.t_min);
    const std::vector<double> thresholds = geometric_thresholds(lo, half_torus_area, cfg.bins);
    std::uint64_t resampled = 0;
    const MeasureProfile profile = weighted_cap_profile(
        cfg.samples, SeedSpec{cfg.master_seed, 0}, thresholds, cfg.threads, &resampled);
    const ScalingFitReport fit = fit_scaling(profile, cfg.t_min, cfg.t_max);

    auto nan_to_null = [](double v) { return std::isnan(v) ? json() : json(v); };
    json jfit{{"slope", fit.slope},
              {"gamma_low", fit.gamma_low},
              {"gamma_high", fit.gamma_high},
              {"slope_n", nan_to_null(fit.slope_n)},
              {"n_ratio_low", nan_to_null(fit.n_ratio_low)},
              {"n_ratio_high", nan_to_null(fit.n_ratio_high)},
              {"slope_l", nan_to_null(fit.slope_l)},
              {"l_ratio_low", nan_to_null(fit.l_ratio_low)},
              {"l_ratio_high", nan_to_null(fit.l_ratio_high)},
              {"t_min", fit.t_min},
              {"t_max", fit.t_max},
              {"bins_used", fit.bins_used}};
    return json{{"mode", "measure-fit"},
                {"config", config_echo(cfg)},
                {"samples", profile.sample_count},
                {"resampled", resampled},
                {"thresholds", profile.thresholds},
                {"m_hat", profile.m_hat},
                {"n_hat", profile.n_hat},
                {"l_hat", profile.l_hat},
                {"se_m", profile.se_m},
                {"hits", profile.hits},
                {"fit", jfit}};
}

JacobianCheckResult jacobian_check(std::uint64_t draws, SeedSpec seed, double tol) {
    if (draws == 0) throw EmptyInput("need at least one draw");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    Xoshiro256pp rng(seed);
    JacobianCheckResult out;
    out.draws = draws;
    out.tol = tol;

    for (std::uint64_t i = 0; i < draws; ++i) {
        ThetaParam p;
        p.alpha = log_uniform(rng, 3e-3, 9e-3);
        p.beta = log_uniform(rng, 3e-3, 9e-3);
        p.phi0 = uniform_angle(rng);
        p.psi0 = uniform_angle(rng);
        // Keep clear of the fold locus: both determinants vanish there and a
        // relative comparison of two near-zero numbers measures nothing.
        for (;;) {
            std::array<double, 4> ct, st;
            for (std::size_t m = 0; m < 4; ++m) {
                p.theta[m] = uniform_angle(rng);
                ct[m] = std::cos(p.theta[m]);
                st[m] = std::sin(p.theta[m]);
            }
            if (std::abs(theta_signed_sum(ct, st)) >= 0.25) break;
        }
        const double analytic = p.alpha * p.alpha * p.beta * p.beta * jacobian_reduced(p);
        const double fd = numeric_jacobian_det(p);
        const double rel = std::abs(analytic - fd) / std::abs(fd);
        out.max_rel_err = std::max(out.max_rel_err, rel);
    }

    // |J1| floor on the grid around the reference theta, across alpha, beta
    // spanning the admissible magnitudes.
    const double base[4] = {-0.5 * pi, 0.0, 0.5 * pi, pi};
    const double offs[5] = {-0.05, -0.025, 0.0, 0.025, 0.05};
    const double abvals[3] = {9.9e-3, 1e-4, 1e-6};
    double gmin = std::numeric_limits<double>::infinity();
    for (double a : abvals)
        for (double b : abvals)
            for (int i0 = 0; i0 < 5; ++i0)
                for (int i1 = 0; i1 < 5; ++i1)
                    for (int i2 = 0; i2 < 5; ++i2)
                        for (int i3 = 0; i3 < 5; ++i3) {
                            ThetaParam p;
                            p.alpha = a;
                            p.beta = b;
                            p.theta = {base[0] + offs[i0], base[1] + offs[i1],
                                       base[2] + offs[i2], base[3] + offs[i3]};
                            gmin = std::min(gmin, std::abs(jacobian_reduced(p)));
                        }
    out.grid_min_abs_j1 = gmin;
    out.pass = out.max_rel_err < tol && gmin > 64.0;
    return out;
}

nlohmann::json run_jacobian_check(const ExperimentConfig& cfg) {
    if (cfg.samples < 1) throw ConfigError("samples must be >= 1");
    const JacobianCheckResult r = jacobian_check(cfg.samples, SeedSpec{cfg.master_seed, 0}, cfg.tol);
    return json{{"mode", "jacobian-check"}, {"config", config_echo(cfg)},
                {"draws", r.draws},         {"tol", r.tol},
                {"max_rel_err", r.max_rel_err}, {"grid_min_abs_j1", r.grid_min_abs_j1},
                {"pass", r.pass}};
}

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials) {
    os << "trial,seed,lambda,n_points,f0,f1,f2,f3,vbar,euler_residual,r1_residual,"
          "r2_residual,degenerate\n";
    for (const TrialRecord& r : trials) {
        os << r.trial_index << ',' << r.seed << ',' << real17(r.lambda) << ',' << r.n_points << ','
           << r.f0 << ',' << r.f1 << ',' << r.f2 << ',' << r.f3 << ',' << real17(r.vbar) << ','
           << r.euler_residual << ',' << r.r1_residual << ',' << r.r2_residual << ','
           << (r.degenerate ? 1 : 0) << '\n';
    }
}

nlohmann::json config_echo(const ExperimentConfig& cfg) {
    return json{{"lambdas", cfg.lambdas},
                {"trials", cfg.trials},
                {"samples", cfg.samples},
                {"seed", cfg.master_seed},
                {"threads", cfg.threads},
                {"out", cfg.out_path},
                {"format", cfg.format == OutputFormat::csv ? "csv" : "json"},
                {"tmin", cfg.t_min},
                {"tmax", cfg.t_max},
                {"bins", cfg.bins},
                {"tol", cfg.tol}};
}

nlohmann::json simulate_report(const ExperimentConfig& cfg, const SimulateResult& result) {
    json summaries = json::array();
    for (const TrialSummary& s : result.summaries) {
        summaries.push_back(json{{"lambda", s.lambda},
                                 {"trials", s.trials},
                                 {"degenerate_trials", s.degenerate_trials},
                                 {"mean_f0", s.mean_f0},
                                 {"se_f0", s.se_f0},
                                 {"mean_f1", s.mean_f1},
                                 {"se_f1", s.se_f1},
                                 {"mean_f2", s.mean_f2},
                                 {"se_f2", s.se_f2},
                                 {"mean_f3", s.mean_f3},
                                 {"se_f3", s.se_f3},
                                 {"mean_vbar", s.mean_vbar},
                                 {"se_vbar", s.se_vbar}});
    }
    json rows = json::array();
    for (const TrialRecord& r : result.trials) {
        rows.push_back(json::array({r.trial_index, r.seed, r.lambda, r.n_points, r.f0, r.f1, r.f2,
                                    r.f3, r.vbar, r.euler_residual, r.r1_residual, r.r2_residual,
                                    r.degenerate ? 1 : 0}));
    }
    return json{{"mode", "simulate"},
                {"config", config_echo(cfg)},
                {"summaries", summaries},
                {"columns",
                 {"trial", "seed", "lambda", "n_points", "f0", "f1", "f2", "f3", "vbar",
                  "euler_residual", "r1_residual", "r2_residual", "degenerate"}},
                {"trials", rows}};
}

nlohmann::json regress_report(const ExperimentConfig& cfg, const RegressionReport& report) {
    json points = json::array();
    for (const RegressionPoint& p : report.points) {
        points.push_back(json{{"lambda", p.lambda},
                              {"log10_n", p.log10_n},
                              {"mean_vbar", p.mean_vbar},
                              {"se_vbar", p.se_vbar},
                              {"trials", p.trials}});
    }
    return json{{"mode", "regress"},
                {"config", config_echo(cfg)},
                {"points", points},
                {"slope", report.slope},
                {"slope_se", report.slope_se},
                {"intercept", report.intercept},
                {"intercept_se", report.intercept_se}};
}

} // namespace cliffhull
