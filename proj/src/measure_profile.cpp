#include "cliffhull/measure_profile.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <span>
#include <thread>

#include "cliffhull/angles.hpp"
#include "cliffhull/errors.hpp"
#include "cliffhull/sampling.hpp"

namespace cliffhull {

namespace {

constexpr std::uint64_t kBlock = 65536;

// Mixture weights of the importance proposal and the parameter boxes of its
// two non-uniform components. Component 1 biases toward caps that are small in
// both directions (1/a, 1/b log-uniform); component 2 toward thin strips
// (a <= 1 with b large). Together they reach cap areas down to ~1e-9, far past
// what uniform quadruples hit at any feasible draw count.
constexpr double kW0 = 0.4;
constexpr double kW1 = 0.4;
constexpr double kW2 = 0.2;
constexpr double kQ1Lo = 1e-4, kQ1Hi = 1.0;      // alpha = 1/a and beta = 1/b
constexpr double kQ2ALo = 1.0, kQ2AHi = 2000.0;  // alpha = 1/a
constexpr double kQ2BLo = 2.5e-4, kQ2BHi = 0.05; // beta = 1/b

double cube(double x) { return x * x * x; }

struct PermTable {
    std::array<std::array<int, 4>, 24> idx{};
    std::array<double, 24> sgn{};
};

const PermTable& perm_table() {
    static const PermTable table = [] {
        PermTable t;
        std::array<int, 4> p{0, 1, 2, 3};
        int n = 0;
        do {
            int inv = 0;
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    if (p[i] > p[j]) ++inv;
            t.idx[static_cast<std::size_t>(n)] = p;
            t.sgn[static_cast<std::size_t>(n)] = (inv % 2 == 0) ? 1.0 : -1.0;
            ++n;
        } while (std::next_permutation(p.begin(), p.end()));
        return t;
    }();
    return table;
}

// Reduced Jacobian from precomputed cosines/sines. Valid whenever
// |alpha * ct| <= 1 and |beta * st| <= 1; the max() guards absorb rounding
// just past those bounds.
double j1_core(double alpha, double beta, const std::array<double, 4>& ct,
               const std::array<double, 4>& st) {
    std::array<double, 4> cp, cq;
    double denom = 1.0;
    for (std::size_t m = 0; m < 4; ++m) {
        cp[m] = std::sqrt(std::max(0.0, 1.0 - alpha * alpha * ct[m] * ct[m]));
        cq[m] = std::sqrt(std::max(0.0, 1.0 - beta * beta * st[m] * st[m]));
        denom *= cp[m] * cq[m];
    }
    const PermTable& tab = perm_table();
    double sum = 0.0;
    for (std::size_t n = 0; n < 24; ++n) {
        const auto& q = tab.idx[n];
        sum += tab.sgn[n] * ct[static_cast<std::size_t>(q[0])] * ct[static_cast<std::size_t>(q[0])] *
               ct[static_cast<std::size_t>(q[1])] * st[static_cast<std::size_t>(q[2])] *
               st[static_cast<std::size_t>(q[2])] * st[static_cast<std::size_t>(q[3])] *
               cp[static_cast<std::size_t>(q[1])] * cq[static_cast<std::size_t>(q[3])];
    }
    return 64.0 * sum / denom;
}

void check_thresholds(const std::vector<double>& th) {
    if (th.empty()) throw EmptyInput("no thresholds given");
    double prev = 0.0;
    for (double t : th) {
        if (!std::isfinite(t) || !(t > prev))
            throw DomainError("thresholds must be finite, positive, strictly increasing");
        prev = t;
    }
}

// Per-block bucket sums. Bucket j holds records with thresholds[j-1] <= g <
// thresholds[j]; the last bucket is the overflow, so totals are exact sums over
// all buckets and the CDF at thresholds[j] is the prefix through bucket j.
struct BucketAcc {
    std::vector<double> wn, wl, w2;
    std::vector<std::uint64_t> hn, hl;
    std::uint64_t resampled = 0;

    explicit BucketAcc(std::size_t buckets)
        : wn(buckets, 0.0), wl(buckets, 0.0), w2(buckets, 0.0), hn(buckets, 0), hl(buckets, 0) {}

    void merge(const BucketAcc& o) {
        for (std::size_t j = 0; j < wn.size(); ++j) {
            wn[j] += o.wn[j];
            wl[j] += o.wl[j];
            w2[j] += o.w2[j];
            hn[j] += o.hn[j];
            hl[j] += o.hl[j];
        }
        resampled += o.resampled;
    }

    void add(double g, double a, double b, double w, const std::vector<double>& th) {
        const std::size_t bkt = static_cast<std::size_t>(
            std::upper_bound(th.begin(), th.end(), g) - th.begin());
        if (std::min(a, b) < 100.0) {
            wn[bkt] += w;
            hn[bkt] += 1;
        } else {
            wl[bkt] += w;
            hl[bkt] += 1;
        }
        w2[bkt] += w * w;
    }
};

MeasureProfile finalize_profile(const BucketAcc& acc, const std::vector<double>& th,
                                std::uint64_t sample_count) {
    double wsum = 0.0, w2sum = 0.0;
    for (std::size_t j = 0; j < acc.wn.size(); ++j) {
        wsum += acc.wn[j] + acc.wl[j];
        w2sum += acc.w2[j];
    }
    if (!(wsum > 0.0)) throw InsufficientData("all sample weights vanished");

    MeasureProfile out;
    out.thresholds = th;
    out.sample_count = sample_count;
    const std::size_t nb = th.size();
    out.m_hat.resize(nb);
    out.n_hat.resize(nb);
    out.l_hat.resize(nb);
    out.se_m.resize(nb);
    out.hits.resize(nb);
    out.hits_n.resize(nb);
    out.hits_l.resize(nb);

    const double scale = quad_torus_measure;
    double cn = 0.0, cl = 0.0, c2 = 0.0;
    std::uint64_t chn = 0, chl = 0;
    for (std::size_t j = 0; j < nb; ++j) {
        cn += acc.wn[j];
        cl += acc.wl[j];
        c2 += acc.w2[j];
        chn += acc.hn[j];
        chl += acc.hl[j];
        out.n_hat[j] = scale * cn / wsum;
        out.l_hat[j] = scale * cl / wsum;
        out.m_hat[j] = out.n_hat[j] + out.l_hat[j];
        const double frac = (cn + cl) / wsum;
        // Variance of the self-normalized ratio, linearized; for unit weights
        // this reduces to the binomial frac*(1-frac)/k.
        const double var = c2 * (1.0 - frac) * (1.0 - frac) + (w2sum - c2) * frac * frac;
        out.se_m[j] = scale * std::sqrt(std::max(0.0, var)) / wsum;
        out.hits_n[j] = chn;
        out.hits_l[j] = chl;
        out.hits[j] = chn + chl;
    }
    return out;
}

double uniform_angle(Xoshiro256pp& rng) { return -pi + two_pi * rng.uniform01(); }

double log_uniform(Xoshiro256pp& rng, double lo, double hi) {
    const double v = std::exp(std::log(lo) + rng.uniform01() * (std::log(hi) - std::log(lo)));
    return std::clamp(v, lo, hi);
}

struct CapDraw {
    double a = 0.0, b = 0.0, g = 0.0, weight = 1.0;
};

// One uniform quadruple reduced to its cap; redraws until well-conditioned.
Cap uniform_cap(Xoshiro256pp& rng, std::array<TorusPoint, 4>& q, std::uint64_t& resampled) {
    for (;;) {
        for (auto& p : q) p = uniform_torus_point(rng);
        try {
            return cap_from_points(q);
        } catch (const AffinelyDependent&) {
        } catch (const EmptyBoundary&) {
        }
        ++resampled;
    }
}

// One draw from the mixture proposal, with weight = u(x)/q(x) where u is the
// uniform density. The two parametrized components evaluate their densities at
// the exact parameters they drew, so no round trip through the cap fit is
// involved; uniform draws evaluate the component densities at the fitted cap.
CapDraw mixture_draw(Xoshiro256pp& rng, std::uint64_t& resampled) {
    static const double l1 = std::log(kQ1Hi / kQ1Lo);
    static const double l2a = std::log(kQ2AHi / kQ2ALo);
    static const double l2b = std::log(kQ2BHi / kQ2BLo);
    static const double two_pi_sq = two_pi * two_pi;
    static const double two_pi_6 = two_pi_sq * two_pi_sq * two_pi_sq;

    const double pick = rng.uniform01();
    double alpha, beta;
    std::array<double, 4> ct, st;
    Cap cap;

    if (pick < kW0) {
        std::array<TorusPoint, 4> q;
        cap = uniform_cap(rng, q, resampled);
        alpha = 1.0 / cap.a;
        beta = 1.0 / cap.b;
        for (std::size_t m = 0; m < 4; ++m) {
            ct[m] = std::clamp(cap.a * std::sin(0.5 * wrap_angle(q[m].phi - cap.phi0)), -1.0, 1.0);
            st[m] = std::clamp(cap.b * std::sin(0.5 * wrap_angle(q[m].psi - cap.psi0)), -1.0, 1.0);
        }
    } else if (pick < kW0 + kW1) {
        alpha = log_uniform(rng, kQ1Lo, kQ1Hi);
        beta = log_uniform(rng, kQ1Lo, kQ1Hi);
        cap = Cap{1.0 / alpha, 1.0 / beta, uniform_angle(rng), uniform_angle(rng)};
        for (std::size_t m = 0; m < 4; ++m) {
            const double th = uniform_angle(rng);
            ct[m] = std::cos(th);
            st[m] = std::sin(th);
        }
    } else {
        alpha = log_uniform(rng, kQ2ALo, kQ2AHi);
        beta = log_uniform(rng, kQ2BLo, kQ2BHi);
        cap = Cap{1.0 / alpha, 1.0 / beta, uniform_angle(rng), uniform_angle(rng)};
        const double s = std::asin(1.0 / alpha);
        for (std::size_t m = 0; m < 4; ++m) {
            const double center = rng.uniform01() < 0.5 ? 0.5 * pi : -0.5 * pi;
            const double th = center + (2.0 * rng.uniform01() - 1.0) * s;
            ct[m] = std::cos(th);
            st[m] = std::sin(th);
        }
    }

    // Density ratios of the two components against the uniform density. The
    // theta arcs of component 2 cover every theta attainable in its (alpha,
    // beta) box, so the box test alone decides support. A vanishing Jacobian
    // sends a ratio to +inf and the weight cleanly to 0.
    double j1abs = -1.0;
    auto with_j1 = [&] {
        if (j1abs < 0.0) {
            const double j = j1_core(alpha, beta, ct, st);
            j1abs = std::isnan(j) ? std::numeric_limits<double>::infinity() : std::abs(j);
        }
        return j1abs;
    };
    double r1 = 0.0, r2 = 0.0;
    if (alpha >= kQ1Lo && alpha <= kQ1Hi && beta >= kQ1Lo && beta <= kQ1Hi)
        r1 = two_pi_sq / (l1 * l1 * cube(alpha) * cube(beta) * with_j1());
    if (alpha >= kQ2ALo && alpha <= kQ2AHi && beta >= kQ2BLo && beta <= kQ2BHi) {
        const double arc = 4.0 * std::asin(1.0 / alpha);
        r2 = two_pi_6 / (l2a * l2b * cube(alpha) * cube(beta) * cube(arc) * arc * with_j1());
    }

    CapDraw out;
    out.a = cap.a;
    out.b = cap.b;
    out.g = cap_measure(cap);
    out.weight = 1.0 / (kW0 + kW1 * r1 + kW2 * r2);
    return out;
}

template <class PerBlock>
void run_blocks(std::uint64_t k, int threads, PerBlock&& body) {
    const std::uint64_t nblocks = (k + kBlock - 1) / kBlock;
    auto count_of = [k](std::uint64_t blk) {
        return std::min(kBlock, k - blk * kBlock);
    };
    if (threads <= 1) {
        for (std::uint64_t blk = 0; blk < nblocks; ++blk) body(blk, count_of(blk));
        return;
    }
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::uint64_t blk = next.fetch_add(1);
            if (blk >= nblocks) return;
            body(blk, count_of(blk));
        }
    };
    std::vector<std::thread> pool;
    const std::uint64_t nt = std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), nblocks);
    pool.reserve(nt);
    for (std::uint64_t i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= n;
    ym /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - xm) * (y[i] - ym);
        den += (x[i] - xm) * (x[i] - xm);
    }
    return num / den;
}

} // namespace

std::vector<double> geometric_thresholds(double lo, double hi, int bins) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi) || bins < 2)
        throw DomainError("need 0 < lo < hi and at least two bins");
    std::vector<double> th(static_cast<std::size_t>(bins));
    const double r = std::log(hi / lo) / static_cast<double>(bins - 1);
    for (int i = 0; i < bins; ++i)
        th[static_cast<std::size_t>(i)] = lo * std::exp(static_cast<double>(i) * r);
    th.front() = lo;
    th.back() = hi;
    return th;
}

std::vector<CapSampleRecord> sample_cap_records(std::uint64_t k, SeedSpec seed,
                                                std::uint64_t* resampled) {
    if (k == 0) throw EmptyInput("need at least one sample");
    std::vector<CapSampleRecord> records(k);
    std::uint64_t total_resampled = 0;
    run_blocks(k, 1, [&](std::uint64_t blk, std::uint64_t count) {
        Xoshiro256pp rng(SeedSpec{seed.master_seed, seed.stream_index + blk});
        std::array<TorusPoint, 4> q;
        for (std::uint64_t i = 0; i < count; ++i) {
            const Cap cap = uniform_cap(rng, q, total_resampled);
            CapSampleRecord& rec = records[blk * kBlock + i];
            rec.a = cap.a;
            rec.b = cap.b;
            rec.g = cap_measure(cap);
            rec.small_branch = std::min(cap.a, cap.b) < 100.0;
            rec.weight = 1.0;
        }
    });
    if (resampled) *resampled = total_resampled;
    return records;
}

MeasureProfile estimate_profile(const std::vector<CapSampleRecord>& records,
                                const std::vector<double>& thresholds) {
    if (records.empty()) throw EmptyInput("no records to fold");
    check_thresholds(thresholds);
    BucketAcc acc(thresholds.size() + 1);
    for (const CapSampleRecord& r : records) {
        if (!(r.weight >= 0.0) || !std::isfinite(r.weight))
            throw DomainError("record weights must be finite and non-negative");
        acc.add(r.g, r.a, r.b, r.weight, thresholds);
    }
    return finalize_profile(acc, thresholds, records.size());
}

MeasureProfile weighted_cap_profile(std::uint64_t k, SeedSpec seed,
                                    const std::vector<double>& thresholds, int threads,
                                    std::uint64_t* resampled) {
    if (k == 0) throw EmptyInput("need at least one sample");
    check_thresholds(thresholds);

    const std::uint64_t nblocks = (k + kBlock - 1) / kBlock;
    std::vector<BucketAcc> accs(nblocks, BucketAcc(thresholds.size() + 1));
    run_blocks(k, threads, [&](std::uint64_t blk, std::uint64_t count) {
        Xoshiro256pp rng(SeedSpec{seed.master_seed, seed.stream_index + blk});
        BucketAcc& acc = accs[blk];
        for (std::uint64_t i = 0; i < count; ++i) {
            const CapDraw d = mixture_draw(rng, acc.resampled);
            acc.add(d.g, d.a, d.b, d.weight, thresholds);
        }
    });

    BucketAcc total(thresholds.size() + 1);
    for (const BucketAcc& acc : accs) total.merge(acc);
    if (resampled) *resampled = total.resampled;
    return finalize_profile(total, thresholds, k);
}

ScalingFitReport fit_scaling(const MeasureProfile& profile, double t_min, double t_max) {
    if (!(t_min > 0.0) || !(t_max > t_min) || !(t_max < 0.5))
        throw DomainError("fit range must satisfy 0 < t_min < t_max < 1/2");
    if (profile.thresholds.size() != profile.m_hat.size() ||
        profile.thresholds.size() != profile.hits.size())
        throw DomainError("profile vectors disagree in length");

    std::vector<double> xm, ym, gam, xn, yn, rn, xl, yl, rl;
    int used = 0;
    for (std::size_t j = 0; j < profile.thresholds.size(); ++j) {
        const double t = profile.thresholds[j];
        if (t < t_min * (1.0 - 1e-12) || t > t_max * (1.0 + 1e-12)) continue;
        ++used;
        if (profile.hits[j] < 100)
            throw InsufficientData("a bin in the fit range has fewer than 100 hits");
        if (!(profile.m_hat[j] > 0.0))
            throw InsufficientData("a bin in the fit range has zero estimated mass");
        const double model = cube(t) * std::abs(std::log(t));
        xm.push_back(std::log(model));
        ym.push_back(std::log(profile.m_hat[j]));
        gam.push_back(profile.m_hat[j] / model);
        if (profile.n_hat[j] > 0.0) {
            xn.push_back(std::log(cube(t)));
            yn.push_back(std::log(profile.n_hat[j]));
            rn.push_back(profile.n_hat[j] / cube(t));
        }
        if (profile.l_hat[j] > 0.0) {
            xl.push_back(std::log(model));
            yl.push_back(std::log(profile.l_hat[j]));
            rl.push_back(profile.l_hat[j] / model);
        }
    }
    if (used < 2) throw InsufficientData("fit range covers fewer than two profile bins");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    ScalingFitReport rep;
    rep.slope = ols_slope(xm, ym);
    rep.gamma_low = *std::min_element(gam.begin(), gam.end());
    rep.gamma_high = *std::max_element(gam.begin(), gam.end());
    if (xn.size() >= 2) {
        rep.slope_n = ols_slope(xn, yn);
        rep.n_ratio_low = *std::min_element(rn.begin(), rn.end());
        rep.n_ratio_high = *std::max_element(rn.begin(), rn.end());
    } else {
        rep.slope_n = rep.n_ratio_low = rep.n_ratio_high = nan;
    }
    if (xl.size() >= 2) {
        rep.slope_l = ols_slope(xl, yl);
        rep.l_ratio_low = *std::min_element(rl.begin(), rl.end());
        rep.l_ratio_high = *std::max_element(rl.begin(), rl.end());
    } else {
        rep.slope_l = rep.l_ratio_low = rep.l_ratio_high = nan;
    }
    rep.t_min = t_min;
    rep.t_max = t_max;
    rep.bins_used = used;
    return rep;
}

std::array<TorusPoint, 4> theta_to_points(const ThetaParam& p) {
    if (!(p.alpha > 0.0) || !(p.alpha <= 1.0) || !(p.beta > 0.0) || !(p.beta <= 1.0))
        throw DomainError("alpha and beta must lie in (0, 1]");
    std::array<TorusPoint, 4> out;
    for (std::size_t m = 0; m < 4; ++m) {
        out[m].phi = wrap_angle(p.phi0 + 2.0 * std::asin(p.alpha * std::cos(p.theta[m])));
        out[m].psi = wrap_angle(p.psi0 + 2.0 * std::asin(p.beta * std::sin(p.theta[m])));
    }
    return out;
}

double jacobian_reduced(const ThetaParam& p) {
    if (!(p.alpha > 0.0) || !(p.alpha <= 1.0) || !(p.beta > 0.0) || !(p.beta <= 1.0))
        throw DomainError("alpha and beta must lie in (0, 1]");
    std::array<double, 4> ct, st;
    for (std::size_t m = 0; m < 4; ++m) {
        ct[m] = std::cos(p.theta[m]);
        st[m] = std::sin(p.theta[m]);
    }
    return j1_core(p.alpha, p.beta, ct, st);
}

double theta_signed_sum(const std::array<double, 4>& cos_theta,
                        const std::array<double, 4>& sin_theta) {
    const PermTable& tab = perm_table();
    double sum = 0.0;
    for (std::size_t n = 0; n < 24; ++n) {
        const auto& q = tab.idx[n];
        sum += tab.sgn[n] * cos_theta[static_cast<std::size_t>(q[0])] *
               cos_theta[static_cast<std::size_t>(q[0])] * cos_theta[static_cast<std::size_t>(q[1])] *
               sin_theta[static_cast<std::size_t>(q[2])] * sin_theta[static_cast<std::size_t>(q[2])] *
               sin_theta[static_cast<std::size_t>(q[3])];
    }
    return sum;
}

double numeric_jacobian_det(const ThetaParam& p, double step) {
    if (!(step > 0.0)) throw DomainError("step must be positive");
    if (!(p.alpha - step > 0.0) || !(p.alpha + step <= 1.0) || !(p.beta - step > 0.0) ||
        !(p.beta + step <= 1.0))
        throw DomainError("step leaves the valid (alpha, beta) range");

    auto eval = [](const std::array<double, 8>& u, std::array<double, 8>& out) {
        for (std::size_t m = 0; m < 4; ++m) {
            out[2 * m] = u[2] + 2.0 * std::asin(u[0] * std::cos(u[4 + m]));
            out[2 * m + 1] = u[3] + 2.0 * std::asin(u[1] * std::sin(u[4 + m]));
        }
    };

    const std::array<double, 8> u{p.alpha, p.beta,     p.phi0,     p.psi0,
                                  p.theta[0], p.theta[1], p.theta[2], p.theta[3]};
    double m[8][8];
    std::array<double, 8> fp, fm;
    for (std::size_t c = 0; c < 8; ++c) {
        std::array<double, 8> up = u, um = u;
        up[c] += step;
        um[c] -= step;
        eval(up, fp);
        eval(um, fm);
        for (std::size_t r = 0; r < 8; ++r) m[r][c] = (fp[r] - fm[r]) / (2.0 * step);
    }

    double det = 1.0;
    for (int k = 0; k < 8; ++k) {
        int piv = k;
        for (int r = k + 1; r < 8; ++r)
            if (std::abs(m[r][k]) > std::abs(m[piv][k])) piv = r;
        if (piv != k) {
            for (int c = 0; c < 8; ++c) std::swap(m[k][c], m[piv][c]);
            det = -det;
        }
        if (m[k][k] == 0.0) return 0.0;
        det *= m[k][k];
        for (int r = k + 1; r < 8; ++r) {
            const double f = m[r][k] / m[k][k];
            for (int c = k + 1; c < 8; ++c) m[r][c] -= f * m[k][c];
        }
    }
    return det;
}

double alpha_beta_integral(double tau) {
    if (!(tau > 0.0) || !(tau < 1e-4))
        throw DomainError("tau must lie in (0, 1/10000)");
    static const double ln100 = std::log(100.0);
    return cube(tau) * (1.0 / 9.0 - (2.0 / 3.0) * ln100 - std::log(tau) / 3.0);
}

} // namespace cliffhull
