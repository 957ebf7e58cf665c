#include "cliffhull/hull4d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "cliffhull/errors.hpp"
#include "cliffhull/predicates.hpp"
#include "cliffhull/rng.hpp"

namespace cliffhull {

namespace {

struct Facet {
    std::array<int, 4> v;
    std::array<int, 4> nbr{-1, -1, -1, -1};
    std::vector<int> pts; // unprocessed points strictly beyond this facet
    bool alive = true;
    std::uint32_t visit = 0;
};

std::array<double, 4> diff(const Point4& p, const Point4& q) {
    return {p[0] - q[0], p[1] - q[1], p[2] - q[2], p[3] - q[3]};
}

// Five affinely independent points by scanning: float Gram-Schmidt as a
// cheap filter, every acceptance certified exactly; if the filter leaves the
// basis short, everything is rescanned with the exact test alone.
std::array<int, 5> find_initial_simplex(const std::vector<Point4>& p) {
    const int n = static_cast<int>(p.size());
    std::array<int, 5> idx{0, -1, -1, -1, -1};
    int found = 1;
    ExactRank4 exact;
    std::vector<std::array<double, 4>> ortho;
    std::vector<char> tried_ok(static_cast<std::size_t>(n), 0);
    tried_ok[0] = 1;

    for (int i = 1; i < n && found < 5; ++i) {
        const auto v = diff(p[static_cast<std::size_t>(i)], p[0]);
        double w[4] = {v[0], v[1], v[2], v[3]};
        const double vn = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
        for (const auto& o : ortho) {
            const double d = w[0] * o[0] + w[1] * o[1] + w[2] * o[2] + w[3] * o[3];
            for (int j = 0; j < 4; ++j) w[j] -= d * o[static_cast<std::size_t>(j)];
        }
        const double wn = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3]);
        if (wn > 1e-8 * (vn + 1.0) && exact.try_add(v)) {
            idx[static_cast<std::size_t>(found++)] = i;
            tried_ok[static_cast<std::size_t>(i)] = 1;
            ortho.push_back({w[0] / wn, w[1] / wn, w[2] / wn, w[3] / wn});
        }
    }
    if (found < 5) {
        for (int i = 1; i < n && found < 5; ++i) {
            if (tried_ok[static_cast<std::size_t>(i)]) continue;
            if (exact.try_add(diff(p[static_cast<std::size_t>(i)], p[0])))
                idx[static_cast<std::size_t>(found++)] = i;
        }
    }
    if (found < 5)
        throw DegeneratePredicateTie("input has no five affinely independent points");
    return idx;
}

inline std::uint64_t pair_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

inline std::uint64_t triple_key(int a, int b, int c) {
    // callers sort; 21 bits per index caps inputs at ~2M points, far above use
    return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) |
           static_cast<std::uint64_t>(c);
}

} // namespace

HullComplex build_hull(const std::vector<Point4>& pts) {
    HullComplex h;
    h.points = pts;
    const int n = static_cast<int>(pts.size());
    if (n <= 4) {
        h.degenerate = true;
        for (int i = 0; i < n; ++i) h.vertices.push_back(i);
        return h;
    }

    const std::array<int, 5> sidx = find_initial_simplex(pts);
    h.base = sidx;

    auto orient_facet = [&](std::array<int, 4>& v) {
        int s = 0;
        for (int pb : sidx) {
            if (pb == v[0] || pb == v[1] || pb == v[2] || pb == v[3]) continue;
            s = orient4d_sign(pts[static_cast<std::size_t>(v[0])], pts[static_cast<std::size_t>(v[1])],
                              pts[static_cast<std::size_t>(v[2])], pts[static_cast<std::size_t>(v[3])],
                              pts[static_cast<std::size_t>(pb)]);
            if (s != 0) break;
        }
        if (s == 0) throw DegeneratePredicateTie("facet hyperplane contains all probe vertices");
        if (s > 0) std::swap(v[0], v[1]); // probes are hull points: interior side is negative
    };

    auto beyond = [&](const Facet& f, int q) {
        const int s = orient4d_sign(
            pts[static_cast<std::size_t>(f.v[0])], pts[static_cast<std::size_t>(f.v[1])],
            pts[static_cast<std::size_t>(f.v[2])], pts[static_cast<std::size_t>(f.v[3])],
            pts[static_cast<std::size_t>(q)]);
        if (s == 0)
            throw DegeneratePredicateTie("point exactly on a facet hyperplane");
        return s > 0;
    };

    std::vector<Facet> F;
    F.reserve(static_cast<std::size_t>(16 * n));

    // Initial 4-simplex: facet k drops sidx[k]; facets k and m share the ridge
    // dropping both, so adjacency is read off the vertex identities.
    for (int k = 0; k < 5; ++k) {
        Facet f;
        int t = 0;
        for (int m = 0; m < 5; ++m)
            if (m != k) f.v[static_cast<std::size_t>(t++)] = sidx[static_cast<std::size_t>(m)];
        orient_facet(f.v);
        for (int i = 0; i < 4; ++i)
            for (int m = 0; m < 5; ++m)
                if (sidx[static_cast<std::size_t>(m)] == f.v[static_cast<std::size_t>(i)]) {
                    f.nbr[static_cast<std::size_t>(i)] = m;
                    break;
                }
        F.push_back(std::move(f));
    }

    // Remaining points in deterministically shuffled order.
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    {
        std::vector<char> in_simplex(static_cast<std::size_t>(n), 0);
        for (int id : sidx) in_simplex[static_cast<std::size_t>(id)] = 1;
        for (int i = 0; i < n; ++i)
            if (!in_simplex[static_cast<std::size_t>(i)]) order.push_back(i);
        Xoshiro256pp rng(SeedSpec{0x5EEDC11FF0D07011ull, static_cast<std::uint64_t>(n)});
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next() % i);
            std::swap(order[i - 1], order[j]);
        }
    }

    std::vector<std::vector<int>> pconf(static_cast<std::size_t>(n));
    for (int q : order)
        for (int fk = 0; fk < 5; ++fk)
            if (beyond(F[static_cast<std::size_t>(fk)], q)) {
                F[static_cast<std::size_t>(fk)].pts.push_back(q);
                pconf[static_cast<std::size_t>(q)].push_back(fk);
            }

    std::uint32_t stamp = 0;
    std::vector<std::uint32_t> pstamp(static_cast<std::size_t>(n), 0);
    std::uint32_t qstamp = 0;
    std::vector<int> visible, cand, new_ids;
    std::unordered_map<std::uint64_t, std::pair<int, int>> ridge_map;

    for (int p : order) {
        visible.clear();
        ++stamp;
        for (int f : pconf[static_cast<std::size_t>(p)]) {
            Facet& ff = F[static_cast<std::size_t>(f)];
            if (ff.alive && ff.visit != stamp) {
                ff.visit = stamp;
                visible.push_back(f);
            }
        }
        pconf[static_cast<std::size_t>(p)] = {};
        if (visible.empty()) continue; // inside current hull

        new_ids.clear();
        ridge_map.clear();
        for (int f : visible) {
            for (int s = 0; s < 4; ++s) {
                const int g = F[static_cast<std::size_t>(f)].nbr[static_cast<std::size_t>(s)];
                if (F[static_cast<std::size_t>(g)].visit == stamp) continue; // internal ridge
                // horizon ridge between visible f and surviving g
                std::array<int, 4> nv;
                int t = 0;
                for (int m = 0; m < 4; ++m)
                    if (m != s) nv[static_cast<std::size_t>(t++)] = F[static_cast<std::size_t>(f)].v[static_cast<std::size_t>(m)];
                nv[3] = p;
                orient_facet(nv); // may swap slots 0 and 1; p stays at slot 3

                const int id = static_cast<int>(F.size());
                Facet nf;
                nf.v = nv;
                nf.nbr[3] = g;
                for (int m = 0; m < 4; ++m)
                    if (F[static_cast<std::size_t>(g)].nbr[static_cast<std::size_t>(m)] == f) {
                        F[static_cast<std::size_t>(g)].nbr[static_cast<std::size_t>(m)] = id;
                        break;
                    }
                // ridges through p pair up among the new facets of this insertion
                for (int m = 0; m < 3; ++m) {
                    const int u = nv[static_cast<std::size_t>((m + 1) % 3)];
                    const int w = nv[static_cast<std::size_t>((m + 2) % 3)];
                    const std::uint64_t key = pair_key(u, w);
                    auto it = ridge_map.find(key);
                    if (it == ridge_map.end()) {
                        ridge_map.emplace(key, std::make_pair(id, m));
                    } else {
                        nf.nbr[static_cast<std::size_t>(m)] = it->second.first;
                        F[static_cast<std::size_t>(it->second.first)]
                            .nbr[static_cast<std::size_t>(it->second.second)] = id;
                        ridge_map.erase(it);
                    }
                }

                // conflicts: a point beyond the new facet saw f or g
                ++qstamp;
                cand.clear();
                for (int q : F[static_cast<std::size_t>(f)].pts)
                    if (q != p && pstamp[static_cast<std::size_t>(q)] != qstamp) {
                        pstamp[static_cast<std::size_t>(q)] = qstamp;
                        cand.push_back(q);
                    }
                for (int q : F[static_cast<std::size_t>(g)].pts)
                    if (q != p && pstamp[static_cast<std::size_t>(q)] != qstamp) {
                        pstamp[static_cast<std::size_t>(q)] = qstamp;
                        cand.push_back(q);
                    }
                for (int q : cand)
                    if (beyond(nf, q)) {
                        nf.pts.push_back(q);
                        pconf[static_cast<std::size_t>(q)].push_back(id);
                    }

                F.push_back(std::move(nf));
                new_ids.push_back(id);
            }
        }
        for (int f : visible) {
            F[static_cast<std::size_t>(f)].alive = false;
            F[static_cast<std::size_t>(f)].pts = {};
        }
    }

    // Compact the surviving facets.
    std::vector<int> remap(F.size(), -1);
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (!F[i].alive) continue;
        remap[i] = static_cast<int>(h.facets.size());
        h.facets.push_back(F[i].v);
        h.neighbors.push_back(F[i].nbr);
    }
    for (auto& nb : h.neighbors)
        for (int& g : nb) g = remap[static_cast<std::size_t>(g)];

    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (const auto& f : h.facets)
        for (int v : f) used[static_cast<std::size_t>(v)] = 1;
    for (int i = 0; i < n; ++i)
        if (used[static_cast<std::size_t>(i)]) h.vertices.push_back(i);
    return h;
}

FVector f_vector(const HullComplex& h) {
    if (h.degenerate) {
        static constexpr long long table[5][4] = {
            {0, 0, 0, 0}, {1, 0, 0, 0}, {2, 1, 0, 0}, {3, 3, 1, 0}, {4, 6, 4, 2}};
        const auto& row = table[h.points.size()];
        return FVector{row[0], row[1], row[2], row[3]};
    }
    FVector f;
    f.f3 = static_cast<long long>(h.facets.size());
    f.f0 = static_cast<long long>(h.vertices.size());

    std::vector<std::uint64_t> keys;
    keys.reserve(6 * h.facets.size());
    for (const auto& fc : h.facets)
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                keys.push_back(pair_key(fc[static_cast<std::size_t>(i)], fc[static_cast<std::size_t>(j)]));
    std::sort(keys.begin(), keys.end());
    f.f1 = static_cast<long long>(std::unique(keys.begin(), keys.end()) - keys.begin());

    keys.clear();
    keys.reserve(4 * h.facets.size());
    for (const auto& fc : h.facets)
        for (int drop = 0; drop < 4; ++drop) {
            int t[3];
            int m = 0;
            for (int i = 0; i < 4; ++i)
                if (i != drop) t[m++] = fc[static_cast<std::size_t>(i)];
            if (t[0] > t[1]) std::swap(t[0], t[1]);
            if (t[1] > t[2]) std::swap(t[1], t[2]);
            if (t[0] > t[1]) std::swap(t[0], t[1]);
            keys.push_back(triple_key(t[0], t[1], t[2]));
        }
    std::sort(keys.begin(), keys.end());
    f.f2 = static_cast<long long>(std::unique(keys.begin(), keys.end()) - keys.begin());
    return f;
}

double mean_valence(const FVector& f) {
    if (f.f0 == 0) return 0.0;
    return 2.0 * static_cast<double>(f.f1) / static_cast<double>(f.f0);
}

DehnSommervilleReport validate(const HullComplex& h) {
    const FVector f = f_vector(h);
    DehnSommervilleReport rep;
    rep.degenerate = h.degenerate;
    rep.euler_residual = f.f0 - f.f1 + f.f2 - f.f3;
    rep.r1_residual = f.f1 - (f.f0 + f.f3);
    rep.r2_residual = f.f2 - 2 * f.f3;
    if (h.degenerate) return rep;

    std::unordered_map<std::uint64_t, int> ridge_count;
    ridge_count.reserve(4 * h.facets.size());
    for (const auto& fc : h.facets)
        for (int drop = 0; drop < 4; ++drop) {
            int t[3];
            int m = 0;
            for (int i = 0; i < 4; ++i)
                if (i != drop) t[m++] = fc[static_cast<std::size_t>(i)];
            if (t[0] > t[1]) std::swap(t[0], t[1]);
            if (t[1] > t[2]) std::swap(t[1], t[2]);
            if (t[0] > t[1]) std::swap(t[0], t[1]);
            ++ridge_count[triple_key(t[0], t[1], t[2])];
        }
    for (const auto& [k, c] : ridge_count)
        if (c != 2) { rep.ridges_ok = false; break; }
    for (std::size_t i = 0; i < h.neighbors.size() && rep.ridges_ok; ++i)
        for (int g : h.neighbors[i]) {
            if (g < 0 || g >= static_cast<int>(h.facets.size())) { rep.ridges_ok = false; break; }
            const auto& back = h.neighbors[static_cast<std::size_t>(g)];
            if (std::find(back.begin(), back.end(), static_cast<int>(i)) == back.end()) {
                rep.ridges_ok = false;
                break;
            }
        }

    for (const auto& fc : h.facets) {
        int s = 0;
        for (int pb : h.base) {
            if (pb == fc[0] || pb == fc[1] || pb == fc[2] || pb == fc[3]) continue;
            s = orient4d_sign(h.points[static_cast<std::size_t>(fc[0])], h.points[static_cast<std::size_t>(fc[1])],
                              h.points[static_cast<std::size_t>(fc[2])], h.points[static_cast<std::size_t>(fc[3])],
                              h.points[static_cast<std::size_t>(pb)]);
            if (s != 0) break;
        }
        if (s >= 0) { rep.orientation_ok = false; break; }
    }
    return rep;
}

} // namespace cliffhull
