#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cliffhull/errors.hpp"
#include "cliffhull/experiment.hpp"

namespace ch = cliffhull;
using nlohmann::json;

namespace {

struct FlagStore {
    std::string config_path;
    std::string out_path;
    std::string format;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    std::uint64_t samples = 0;
    int threads = 0;
    int bins = 0;
    double lambda = 0.0;
    std::vector<double> lambdas;
    double tmin = 0.0, tmax = 0.0, tol = 0.0;
};

struct SubOptions {
    CLI::Option* config = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* format = nullptr;
    CLI::Option* threads = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* lambdas = nullptr;
    CLI::Option* trials = nullptr;
    CLI::Option* samples = nullptr;
    CLI::Option* tmin = nullptr;
    CLI::Option* tmax = nullptr;
    CLI::Option* bins = nullptr;
    CLI::Option* tol = nullptr;
};

enum : unsigned { kLambda = 1, kTrials = 2, kSamples = 4, kFitRange = 8, kTol = 16 };

SubOptions add_options(CLI::App* sub, FlagStore& f, unsigned wants) {
    SubOptions o;
    o.config = sub->add_option("--config", f.config_path, "JSON config file; flags override it");
    o.seed = sub->add_option("--seed", f.seed, "master seed");
    o.out = sub->add_option("--out", f.out_path, "output path (default stdout)");
    o.format = sub->add_option("--format", f.format, "csv or json")
                   ->check(CLI::IsMember({"csv", "json"}));
    o.threads = sub->add_option("--threads", f.threads, "worker threads");
    if (wants & kLambda) {
        o.lambda = sub->add_option("--lambda", f.lambda, "process rate");
        o.lambdas = sub->add_option("--lambdas", f.lambdas, "comma-separated rates")
                        ->delimiter(',');
        o.lambda->excludes(o.lambdas);
        o.lambdas->excludes(o.lambda);
    }
    if (wants & kTrials) o.trials = sub->add_option("--trials", f.trials, "trials per rate");
    if (wants & kSamples) o.samples = sub->add_option("--samples", f.samples, "sample count");
    if (wants & kFitRange) {
        o.tmin = sub->add_option("--tmin", f.tmin, "fit range lower end");
        o.tmax = sub->add_option("--tmax", f.tmax, "fit range upper end");
        o.bins = sub->add_option("--bins", f.bins, "threshold bins");
    }
    if (wants & kTol) o.tol = sub->add_option("--tol", f.tol, "pass tolerance");
    return o;
}

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

ch::OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return ch::OutputFormat::csv;
    if (s == "json") return ch::OutputFormat::json;
    throw ch::ConfigError("format must be csv or json");
}

ch::ExperimentConfig build_config(const std::string& mode, const FlagStore& f,
                                  const SubOptions& o) {
    json doc = json::object();
    if (given(o.config)) {
        std::ifstream in(f.config_path);
        if (!in) throw ch::IoError("cannot open config file: " + f.config_path);
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ch::ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw ch::ConfigError("config root must be a JSON object");
    }

    static const std::set<std::string> known = {"mode",    "lambda", "lambdas", "trials",
                                                "samples", "seed",   "out",     "format",
                                                "threads", "tmin",   "tmax",    "bins",
                                                "tol"};
    for (const auto& item : doc.items())
        if (!known.count(item.key())) throw ch::ConfigError("unknown config key: " + item.key());
    if (doc.contains("mode") && doc["mode"].get<std::string>() != mode)
        throw ch::ConfigError("config mode disagrees with the subcommand");

    ch::ExperimentConfig cfg;
    bool have_trials = false, have_samples = false, have_threads = false;
    try {
        if (doc.contains("lambdas"))
            cfg.lambdas = doc["lambdas"].get<std::vector<double>>();
        else if (doc.contains("lambda"))
            cfg.lambdas = {doc["lambda"].get<double>()};
        else
            cfg.lambdas.clear();
        if (doc.contains("trials")) {
            cfg.trials = doc["trials"].get<std::uint64_t>();
            have_trials = true;
        }
        if (doc.contains("samples")) {
            cfg.samples = doc["samples"].get<std::uint64_t>();
            have_samples = true;
        }
        if (doc.contains("seed")) cfg.master_seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("out")) cfg.out_path = doc["out"].get<std::string>();
        if (doc.contains("format")) cfg.format = parse_format(doc["format"].get<std::string>());
        if (doc.contains("threads")) {
            cfg.threads = doc["threads"].get<int>();
            have_threads = true;
        }
        if (doc.contains("tmin")) cfg.t_min = doc["tmin"].get<double>();
        if (doc.contains("tmax")) cfg.t_max = doc["tmax"].get<double>();
        if (doc.contains("bins")) cfg.bins = doc["bins"].get<int>();
        if (doc.contains("tol")) cfg.tol = doc["tol"].get<double>();
    } catch (const json::exception& e) {
        throw ch::ConfigError(std::string("config field has the wrong type: ") + e.what());
    }

    if (given(o.lambda)) cfg.lambdas = {f.lambda};
    if (given(o.lambdas)) cfg.lambdas = f.lambdas;
    if (given(o.trials)) {
        cfg.trials = f.trials;
        have_trials = true;
    }
    if (given(o.samples)) {
        cfg.samples = f.samples;
        have_samples = true;
    }
    if (given(o.seed)) cfg.master_seed = f.seed;
    if (given(o.out)) cfg.out_path = f.out_path;
    if (given(o.format)) cfg.format = parse_format(f.format);
    if (given(o.threads)) {
        cfg.threads = f.threads;
        have_threads = true;
    }
    if (given(o.tmin)) cfg.t_min = f.tmin;
    if (given(o.tmax)) cfg.t_max = f.tmax;
    if (given(o.bins)) cfg.bins = f.bins;
    if (given(o.tol)) cfg.tol = f.tol;

    if (!have_threads) {
        if (const char* env = std::getenv("CLIFFORD_HULL_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1)
                throw ch::ConfigError("CLIFFORD_HULL_THREADS must be a positive integer");
            cfg.threads = static_cast<int>(v);
        }
    }
    if (cfg.threads < 1) throw ch::ConfigError("threads must be >= 1");

    // Mode defaults for whatever is still unset.
    if (cfg.lambdas.empty()) {
        if (mode == "regress")
            cfg.lambdas = {2.533, 25.33, 253.3}; // expected counts ~1e2, 1e3, 1e4
        else
            cfg.lambdas = {1.0};
    }
    if (mode == "regress" && !have_trials) cfg.trials = 200;
    if (mode == "jacobian-check" && !have_samples) cfg.samples = 1000;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ch::IoError("cannot open output file: " + path);
    out << text;
    out.flush();
    if (!out) throw ch::IoError("write failed: " + path);
}

std::string path_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of('/');
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

std::string real17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Two-column plot data next to the JSON report.
void write_xy_csv(const std::string& path, const char* xname, const char* yname,
                  const std::vector<double>& xs, const std::vector<double>& ys) {
    std::ostringstream ss;
    ss << xname << ',' << yname << '\n';
    for (std::size_t i = 0; i < xs.size(); ++i)
        ss << real17(xs[i]) << ',' << real17(ys[i]) << '\n';
    write_text(path, ss.str());
}

int run_mode(const std::string& mode, const ch::ExperimentConfig& cfg) {
    if (mode == "simulate") {
        const ch::SimulateResult res = ch::run_simulate(cfg);
        if (cfg.format == ch::OutputFormat::csv) {
            std::ostringstream ss;
            ch::write_trials_csv(ss, res.trials);
            write_text(cfg.out_path, ss.str());
        } else {
            write_text(cfg.out_path, ch::simulate_report(cfg, res).dump(2) + "\n");
        }
        return 0;
    }
    if (mode == "regress") {
        const ch::RegressionReport rep = ch::run_regress(cfg);
        write_text(cfg.out_path, ch::regress_report(cfg, rep).dump(2) + "\n");
        if (cfg.format == ch::OutputFormat::csv && !cfg.out_path.empty()) {
            std::vector<double> xs, ys;
            for (const ch::RegressionPoint& p : rep.points) {
                xs.push_back(p.log10_n);
                ys.push_back(p.mean_vbar);
            }
            write_xy_csv(path_stem(cfg.out_path) + "_points.csv", "log10_n", "mean_vbar", xs, ys);
        }
        return 0;
    }

    json report;
    if (mode == "caps")
        report = ch::run_caps(cfg);
    else if (mode == "integrals")
        report = ch::run_integrals(cfg);
    else if (mode == "measure-fit")
        report = ch::run_measure_fit(cfg);
    else if (mode == "jacobian-check")
        report = ch::run_jacobian_check(cfg);
    else
        throw ch::ConfigError("unknown mode: " + mode);

    write_text(cfg.out_path, report.dump(2) + "\n");
    if (mode == "measure-fit" && cfg.format == ch::OutputFormat::csv && !cfg.out_path.empty()) {
        const auto ts = report["thresholds"].get<std::vector<double>>();
        const std::string stem = path_stem(cfg.out_path);
        write_xy_csv(stem + "_m.csv", "t", "m_hat", ts, report["m_hat"].get<std::vector<double>>());
        write_xy_csv(stem + "_n.csv", "t", "n_hat", ts, report["n_hat"].get<std::vector<double>>());
        write_xy_csv(stem + "_l.csv", "t", "l_hat", ts, report["l_hat"].get<std::vector<double>>());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    const auto start = std::chrono::steady_clock::now();

    CLI::App app{"Convex hulls of Poisson samples on the Clifford torus"};
    app.require_subcommand(1);
    FlagStore flags;
    std::map<const CLI::App*, SubOptions> opts;
    opts[app.add_subcommand("simulate", "run hull trials and emit per-trial records")] =
        add_options(app.get_subcommand("simulate"), flags, kLambda | kTrials);
    opts[app.add_subcommand("caps", "uniform cap-sample census and bound check")] =
        add_options(app.get_subcommand("caps"), flags, kSamples);
    opts[app.add_subcommand("measure-fit", "cap-measure profile and scaling fit")] =
        add_options(app.get_subcommand("measure-fit"), flags, kSamples | kFitRange);
    opts[app.add_subcommand("integrals", "integral formulas vs direct simulation")] =
        add_options(app.get_subcommand("integrals"), flags, kLambda | kTrials | kSamples);
    opts[app.add_subcommand("regress", "mean valence vs log10 N regression")] =
        add_options(app.get_subcommand("regress"), flags, kLambda | kTrials);
    opts[app.add_subcommand("jacobian-check", "analytic vs finite-difference Jacobian")] =
        add_options(app.get_subcommand("jacobian-check"), flags, kSamples | kTol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string mode = sub->get_name();
    try {
        const ch::ExperimentConfig cfg = build_config(mode, flags, opts.at(sub));
        const int rc = run_mode(mode, cfg);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        std::fprintf(stderr, "wall_clock_seconds %.3f\n", dt.count());
        return rc;
    } catch (const ch::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const ch::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 1;
    } catch (const ch::InsufficientData& e) {
        std::fprintf(stderr, "insufficient data: %s\n", e.what());
        return 1;
    } catch (const ch::DomainError& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return 1;
    } catch (const ch::EmptyInput& e) {
        std::fprintf(stderr, "empty input: %s\n", e.what());
        return 1;
    } catch (const ch::InvalidRate& e) {
        std::fprintf(stderr, "invalid rate: %s\n", e.what());
        return 1;
    } catch (const ch::InvariantViolation& e) {
        std::fprintf(stderr, "internal invariant violation: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
}
