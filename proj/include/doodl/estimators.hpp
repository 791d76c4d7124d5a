#pragma once

#include <cstdint>
#include <vector>

#include "doodl/dictionary.hpp"
#include "doodl/features.hpp"
#include "doodl/spectral.hpp"

namespace doodl {

// Random Fourier features for the RBF kernel exp(-||x-y||^2 / (2 gamma^2)):
// phi(x) = p^{-1/2} [ sqrt(2) cos(w_k^T x + b_k) ]_k, so ||phi(x)|| <= sqrt(2).
// Frequencies and phases regenerate deterministically from the seed.
struct RffMap {
    Index input_dim = 0;
    Index num_features = 0;
    RMatrix frequencies;  // p x input_dim, iid N(0, 1/gamma^2)
    RVector phases;       // p, uniform [0, 2pi)
    double bandwidth = 1.0;
    std::uint64_t seed = 0;
};

RffMap make_rff_map(Index input_dim, Index num_features, double bandwidth, std::uint64_t seed);

RVector rff_embed(const RffMap& map, const RVector& window);

// Sliding-window embedding: row t of the output embeds samples [t, t+window).
FeatureSeries featurize_trajectory(const RVector& traj, const RffMap& map, Index window, double dt);

struct RrrConfig {
    Index rank = 3;
    double tikhonov = 1e-6;
    Index window = 50;
};

// Reduced-rank ridge regression in feature space. The returned matrix A acts
// on features through its adjoint: z_{t+1} ~ A* z_t. Exact rank-r minimizer of
// the regularized one-step objective (Gram-weighted SVD truncation).
OperatorMatrix rrr_estimate(const FeatureSeries& features, const RrrConfig& cfg);

// Classical linear dictionary learning on vectorized operator matrices with
// simplex-constrained codes; alternating exact atom least squares and
// projected-gradient code fits. Baseline only.
struct LinearDlModel {
    std::vector<CMatrix> atoms;
    RMatrix codes;                  // N x d
    std::vector<double> errors;    // mean squared Frobenius error per sweep
};

LinearDlModel linear_dl_baseline(const std::vector<OperatorMatrix>& operators, Index d,
                                 std::uint64_t seed);

// Simplex code for the linear model minimizing the one-step feature loss of
// G(alpha) = sum_j alpha_j D_j; used for short-trajectory evaluation.
std::pair<RVector, CMatrix> linear_dl_short_fit(const LinearDlModel& model,
                                                const TransitionStats& stats);

// Constant predictor: decode of the mean training coefficient vector.
SpectralDecomposition mean_reconstruction_baseline(const Dictionary& dict,
                                                   const std::vector<Coefficients>& train_coeffs);

// Euclidean projection onto the probability simplex.
RVector project_to_simplex(const RVector& v);

}  // namespace doodl
