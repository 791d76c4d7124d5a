#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "doodl/features.hpp"
#include "doodl/manifold.hpp"
#include "doodl/sgot.hpp"

namespace doodl {

// Ordered dictionary of spectral-decomposition atoms sharing (p, r), plus the
// divergence configuration they were trained under.
struct Dictionary {
    std::vector<SpectralDecomposition> atoms;
    SgotConfig cfg;
    std::map<std::string, std::string> created_from;

    Index size() const { return static_cast<Index>(atoms.size()); }
    Index p() const { return atoms.empty() ? 0 : atoms.front().p; }
    Index r() const { return atoms.empty() ? 0 : atoms.front().r; }
};

// Simplex coefficients with their softmax pre-image.
struct Coefficients {
    RVector logits;
    RVector alpha;
};

struct TrainConfig {
    int epochs = 3;
    int batch_size = 32;
    double coeff_lr = 0.5;
    int coeff_iters = 100;
    double dict_lr = 1e-2;
    std::uint64_t seed = 0;
};

Coefficients coefficients_from_logits(const RVector& logits);

void validate_dictionary(const Dictionary& dict);

// Projection decoder: convex combination of the atoms' spectral components,
// then the closed-form left-factor feasibility projection. Eigenvalues and the
// right factor are exactly the convex combinations.
SpectralDecomposition decode(const Coefficients& coeffs, const Dictionary& dict);

// Adjoint of the decoder at coeffs: pushes a cost gradient at the decoded
// point back to the pre-projection aggregates and to the coefficients.
// Per-atom gradients follow by linearity: grad_atom_k = alpha_k * aggregate.
struct DecodeAdjoint {
    AmbientTriple aggregate;  // d cost / d (conj aggregates)
    RVector dcost_dalpha;     // real gradient w.r.t. alpha
};

DecodeAdjoint decode_adjoint(const Coefficients& coeffs, const Dictionary& dict,
                             const AmbientTriple& cost_grad);

// Full chain cost -> decode -> softmax: gradient w.r.t. the logits.
RVector decode_grad_chain(const Coefficients& coeffs, const Dictionary& dict,
                          const AmbientTriple& cost_grad);

struct FitResult {
    Coefficients coeffs;
    double loss = 0.0;
};

// Per-target simplex codes minimizing d_S(decode(alpha), target): logits
// initialized from proximity to the atoms, Adam updates, best iterate kept.
std::vector<FitResult> fit_coefficients(const std::vector<SpectralDecomposition>& targets,
                                        const Dictionary& dict, const TrainConfig& cfg);

struct TrainingLog {
    double init_loss = 0.0;                 // K-medoids objective of the initial atoms
    std::vector<double> batch_losses;       // epochs x ceil(N / batch) entries
    std::vector<double> epoch_mean_losses;  // one entry per epoch
};

// Stochastic block-coordinate training: per batch, fit codes, then one
// Riemannian gradient step per atom (envelope gradient, plan and codes held
// fixed), with safe-step capping and halving on retraction failure.
// Initial atoms are the K-medoids of the training operators under d_S.
Dictionary train_dictionary(const std::vector<SpectralDecomposition>& operators, Index d,
                            const TrainConfig& cfg, const SgotConfig& sgot,
                            TrainingLog* log = nullptr);

// Average one-step prediction loss of the assembled operator acting through
// its adjoint, and its Wirtinger gradient w.r.t. the decomposition slots.
double one_step_loss(const TransitionStats& stats, const SpectralDecomposition& sd);
AmbientTriple one_step_loss_grad(const TransitionStats& stats, const SpectralDecomposition& sd);

struct ShortTrajectoryEstimate {
    Coefficients coeffs;
    SpectralDecomposition decoded;
    double loss = 0.0;
};

// Dictionary-constrained operator estimation from a featurized trajectory:
// minimize the one-step loss over the decoder image, uniform initialization,
// analytic gradients, best iterate kept.
ShortTrajectoryEstimate estimate_short_trajectory(const FeatureSeries& features,
                                                  const Dictionary& dict, const TrainConfig& cfg);

// Short-trajectory estimates over sliding windows of feature rows; each entry
// is (window start row, coefficients).
std::vector<std::pair<Index, Coefficients>> rolling_coefficients(const FeatureSeries& features,
                                                                 const Dictionary& dict, Index window,
                                                                 Index stride, const TrainConfig& cfg);

}  // namespace doodl
