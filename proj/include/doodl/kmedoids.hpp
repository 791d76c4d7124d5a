#pragma once

#include <vector>

#include "doodl/types.hpp"

namespace doodl {

// Deterministic K-medoids on a precomputed symmetric distance matrix:
// farthest-first seeding from the 1-medoid, then PAM swap refinement.
// Ties break toward the lowest index, so the result needs no RNG.
std::vector<Index> k_medoids(const RMatrix& dist, Index k, int max_swap_rounds = 200);

// Objective value: mean distance to the nearest medoid.
double k_medoids_objective(const RMatrix& dist, const std::vector<Index>& medoids);

}  // namespace doodl
