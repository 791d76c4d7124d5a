#pragma once

#include <string>

#include "doodl/types.hpp"

namespace doodl {

// Low-rank spectral decomposition G = R Diag(eigvals) L* with the
// bi-orthogonality constraint L* R = I_r. Values are immutable after
// construction by convention; every operation returns a fresh object.
struct SpectralDecomposition {
    Index p = 0;       // ambient dimension
    Index r = 0;       // rank
    CVector eigvals;   // length r
    CMatrix left;      // p x r
    CMatrix right;     // p x r
};

struct OperatorMatrix {
    Index p = 0;
    CMatrix matrix;    // p x p
    Index rank_hint = 0;
};

// Feasibility residual ||L* R - I_r||_F.
double biorthogonality_residual(const SpectralDecomposition& sd);

// Throws (InvalidShape / DegenerateSpectrum / RankDeficient) if the stored
// decomposition violates its invariants: shapes, finiteness, bi-orthogonality
// within tol, pairwise-distinct eigenvalues, sane column scaling.
void validate_feasible(const SpectralDecomposition& sd, double tol = 1e-8);

bool is_canonically_sorted(const SpectralDecomposition& sd);

// G = R Diag(eigvals) L*.
OperatorMatrix assemble_operator(const SpectralDecomposition& sd);

// Leading rank-r spectral part of op: truncated SVD op ~ U V*, eigendecompose
// the r x r core V* U, lift left/right eigenvectors, rescale to <l_i, r_i> = 1.
// Output is canonically sorted and gauge-normalized.
SpectralDecomposition spectral_decompose(const OperatorMatrix& op, Index r);

// Deterministic atom order: |lambda| descending, ties by Re descending,
// then Im ascending. Idempotent; columns permuted consistently.
SpectralDecomposition canonical_sort(const SpectralDecomposition& sd);

// Fixes the (C*)^r gauge: each right column gets unit norm and a real
// nonnegative first nonzero entry; the left column absorbs the scale so the
// assembled operator is unchanged.
SpectralDecomposition normalize_gauge(const SpectralDecomposition& sd);

}  // namespace doodl
