#pragma once

#include "doodl/spectral.hpp"
#include "doodl/types.hpp"

namespace doodl {

// Tangent direction at a feasible decomposition: (dLambda, xi, zeta) with the
// linearized bi-orthogonality constraint xi* R + L* zeta = 0.
struct TangentVector {
    CVector dlambda;  // length r
    CMatrix xi;       // p x r, left direction
    CMatrix zeta;     // p x r, right direction
};

// Ambient perturbation / Euclidean gradient triple, same shapes as a tangent
// vector but unconstrained. Gradients use the Wirtinger d/d(conjugate)
// convention: for real f, Df[v] = 2 Re <g, v>.
struct AmbientTriple {
    CVector dlambda;
    CMatrix xi;
    CMatrix zeta;
};

enum class MetricKind { natural, stable };

struct MetricConfig {
    MetricKind kind = MetricKind::stable;
    double regularizer = 0.0;  // jitter added to the Gram matrices, in [0, 1e-6]
};

double tangency_residual(const SpectralDecomposition& base, const TangentVector& v);

// Orthogonal projection of an ambient triple onto the tangent space at base,
// in the stable metric (eigenvalue factor is Euclidean and passes through).
TangentVector project_tangent(const SpectralDecomposition& base, const AmbientTriple& ambient,
                              const MetricConfig& cfg = {});

// Riemannian gradient from the Euclidean (Wirtinger) gradient: metric-raise
// (gL (L*L), gR (R*R), factor 2 for the FD-matching scale) then project.
TangentVector riemannian_gradient(const SpectralDecomposition& base, const AmbientTriple& euclid_grad,
                                  const MetricConfig& cfg = {});

// Two-stage retraction: move the right factor, then restore bi-orthogonality
// of the left factor in closed form. Exact feasibility for any admissible step.
SpectralDecomposition retract(const SpectralDecomposition& base, const TangentVector& v, double step);

// Largest safe step along v before the right factor can lose rank:
// 0.9 * sigma_min(R) / ||zeta||_op. +inf when zeta = 0.
double safe_step(const SpectralDecomposition& base, const TangentVector& v);

// Feasibility projection P_N: keeps (Lambda, R), replaces L by the closest
// (Frobenius) left factor satisfying L* R = I_r:
//   L~ = L + R (R*R)^-1 (I - L*R)*.
SpectralDecomposition project_feasible(const CVector& eigvals, const CMatrix& left, const CMatrix& right);

// Stable Riemannian metric, realified:
//   g(u,v) = Re[ u_lam* v_lam + Tr(u_xi* v_xi (L*L)^-1) + Tr(u_zeta* v_zeta (R*R)^-1) ].
double metric_inner(const SpectralDecomposition& base, const TangentVector& u, const TangentVector& v,
                    const MetricConfig& cfg = {});

}  // namespace doodl
