#pragma once

#include <array>
#include <memory>

#include "cliffhull/torus.hpp"

namespace cliffhull {

// Sign of det[b-a; c-a; d-a; e-a]: +1 when e lies on the positive side of the
// oriented hyperplane through (a,b,c,d). Double evaluation with a forward
// error bound; when inconclusive, recomputed with exact rational arithmetic.
// A result of 0 is an exact zero, never a guess.
int orient4d_sign(const Point4& a, const Point4& b, const Point4& c,
                  const Point4& d, const Point4& e);

// Unfiltered double value of the same determinant (diagnostics and oracles).
double orient4d_double(const Point4& a, const Point4& b, const Point4& c,
                       const Point4& d, const Point4& e);

// Incremental exact rank tracker over direction vectors in R^4. try_add
// reduces the candidate against the current echelon (exact rationals) and
// keeps it if independent. Used to certify an initial simplex.
class ExactRank4 {
public:
    ExactRank4();
    ~ExactRank4();
    ExactRank4(const ExactRank4&) = delete;
    ExactRank4& operator=(const ExactRank4&) = delete;

    bool try_add(const std::array<double, 4>& dir); // true if rank grew
    int rank() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace cliffhull
