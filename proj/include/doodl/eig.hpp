#pragma once

#include "doodl/types.hpp"

namespace doodl {

// Dense complex nonsymmetric eigendecomposition, A V = V Diag(values).
//
// Householder reduction to upper Hessenberg form followed by shifted QR
// iteration with deflation (Wilkinson shift, exceptional shifts on stall).
// Eigenvectors come from back-substitution on the triangular Schur factor.
// Intended for the small cores that arise here (n up to a few dozen);
// throws DegenerateSpectrum if the iteration budget is exhausted.
struct EigDecomposition {
    CVector values;   // eigenvalues, in deflation order
    CMatrix vectors;  // right eigenvectors as unit-norm columns
};

EigDecomposition eig_complex(const CMatrix& a, int max_sweeps_per_eigenvalue = 60);

}  // namespace doodl
