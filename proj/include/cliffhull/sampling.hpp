#pragma once

#include <cstdint>
#include <vector>

#include "cliffhull/rng.hpp"
#include "cliffhull/torus.hpp"

namespace cliffhull {

// Poisson(nu) variate. Sequential inversion below nu = 30, PTRS rejection above.
// Throws InvalidRate for nu < 0 or non-finite nu.
std::uint64_t poisson_count(double nu, Xoshiro256pp& rng);

// Point uniform in the flat square [-pi, pi)^2 of angle coordinates.
TorusPoint uniform_torus_point(Xoshiro256pp& rng);

// Poisson process of intensity lambda on the torus: N ~ Poisson(4 pi^2 lambda)
// points, each uniform and independent. Throws InvalidRate for lambda <= 0.
std::vector<TorusPoint> sample_poisson_process(double lambda, Xoshiro256pp& rng);

// Exactly n independent uniform points (the process conditioned on its count).
std::vector<TorusPoint> sample_uniform_points(std::size_t n, Xoshiro256pp& rng);

std::vector<Point4> embed_all(const std::vector<TorusPoint>& pts);

} // namespace cliffhull
