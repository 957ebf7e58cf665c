#pragma once

#include <array>
#include <vector>

#include "cliffhull/torus.hpp"

namespace cliffhull {

struct FVector {
    long long f0 = 0, f1 = 0, f2 = 0, f3 = 0;
};

// Boundary complex of a 4-dimensional convex hull. Facets are tetrahedra,
// oriented so every hull point lies on the non-positive side.
// neighbors[f][i] is the facet across the ridge obtained by dropping
// facets[f][i]. With fewer than 5 input points no complex is built and
// `degenerate` is set; f_vector then falls back to simplex conventions.
struct HullComplex {
    std::vector<Point4> points;               // input copy, indices refer here
    bool degenerate = false;
    std::vector<std::array<int, 4>> facets;
    std::vector<std::array<int, 4>> neighbors;
    std::vector<int> vertices;                // sorted, every index appearing in a facet
    std::array<int, 5> base{-1, -1, -1, -1, -1}; // initial simplex, used as orientation probes
};

struct DehnSommervilleReport {
    long long euler_residual = 0; // f0 - f1 + f2 - f3
    long long r1_residual = 0;    // f1 - (f0 + f3)
    long long r2_residual = 0;    // f2 - 2*f3
    bool degenerate = false;
    bool ridges_ok = true;        // every ridge in exactly two facets, adjacency reciprocal
    bool orientation_ok = true;   // facets still see a hull vertex on the negative side
};

// Randomized incremental insertion with conflict lists. Orientation tests are
// exact (filtered double with rational fallback); an exact zero anywhere
// throws DegeneratePredicateTie rather than perturbing the input.
// Deterministic: the insertion order is shuffled with a fixed internal seed,
// so identical input yields identical output.
HullComplex build_hull(const std::vector<Point4>& pts);

// Face counts by direct enumeration of distinct edges and triangles from the
// facet list; degenerate inputs use the simplex convention table
// (4,6,4,2), (3,3,1,0), (2,1,0,0), (1,0,0,0), (0,0,0,0).
FVector f_vector(const HullComplex& h);

// 2*f1/f0, zero for an empty hull.
double mean_valence(const FVector& f);

DehnSommervilleReport validate(const HullComplex& h);

} // namespace cliffhull
