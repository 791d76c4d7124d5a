#pragma once

#include <utility>
#include <vector>

#include "doodl/manifold.hpp"
#include "doodl/spectral.hpp"
#include "doodl/types.hpp"

namespace doodl {

enum class ProjectorMetric { geodesic, chordal, procrustes, log_martin };

struct SgotConfig {
    double eta = 0.25;                                      // eigenvalue-vs-projector weight, in (0,1)
    int q = 2;                                              // cost exponent, >= 1
    ProjectorMetric metric = ProjectorMetric::log_martin;
    double delta_clamp = 1e-12;                             // floor for the spectral overlap
};

// One weighted spectral component: eigenvalue plus the (l, r) pair encoding
// the rank-1 projector P = r l*.
struct SpectralAtom {
    Complex lambda;
    CVector left;
    CVector right;
};

struct SpectralMeasure {
    std::vector<SpectralAtom> atoms;
    RVector weights;  // nonnegative, sums to 1
};

struct TransportPlan {
    RMatrix matrix;  // nonnegative, row sums = source weights, col sums = target weights
};

// Uniform-weight measure over the decomposition's eigen-triplets, atoms in
// canonical order.
SpectralMeasure to_measure(const SpectralDecomposition& sd);

// Spectral overlap delta = |<r_a,r_b><l_b,l_a>| / (norms), the cosine of the
// principal angle between the two rank-1 projectors. Gauge invariant.
double spectral_overlap(const SpectralAtom& a, const SpectralAtom& b);

// Table metric on rank-1 projectors; delta is clamped to [clamp, 1] first.
double projector_distance(const SpectralAtom& a, const SpectralAtom& b, ProjectorMetric metric,
                          double clamp);

// C = eta |lambda - lambda'|^q + (1 - eta) d_E(P, P')^q.
double ground_cost(const SpectralAtom& a, const SpectralAtom& b, const SgotConfig& cfg);

// Exact optimal transport between two discrete spectral measures. Equal-size
// uniform measures go through an assignment solver (plan is a scaled
// permutation); general weights through successive-shortest-path min-cost flow.
std::pair<TransportPlan, double> solve_transport(const SpectralMeasure& mu, const SpectralMeasure& nu,
                                                 const SgotConfig& cfg);

double sgot_divergence(const SpectralDecomposition& g1, const SpectralDecomposition& g2,
                       const SgotConfig& cfg);

// Wirtinger gradient (d/d conjugate) of sum_ij pi_ij C_ij with the plan held
// fixed, taken w.r.t. recon's (Lambda, L, R); returned as (dlambda, xi, zeta).
// Plan rows must be indexed by recon's stored component order. Pairs with
// clamped overlap contribute zero to the projector term.
AmbientTriple grad_sgot_fixed_plan(const SpectralDecomposition& recon, const SpectralMeasure& target,
                                   const TransportPlan& plan, const SgotConfig& cfg);

// Measure that keeps the decomposition's stored component order; the
// divergence value is identical (permutation invariance) and plan indices
// then align with (Lambda, L, R) columns for the gradient.
SpectralMeasure to_measure_unsorted(const SpectralDecomposition& sd);

// Exact minimum-cost assignment on a square cost matrix (row -> col),
// shortest-augmenting-path method. Exposed for the transport tests.
std::vector<int> min_cost_assignment(const RMatrix& cost);

}  // namespace doodl
