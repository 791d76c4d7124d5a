#pragma once

#include "doodl/types.hpp"

namespace doodl {

// Raw scalar state samples at a fixed sampling interval.
struct Trajectory {
    RVector x;
    double dt = 0.01;
    Index halving_events = 0;  // integrator step rejections, diagnostics only
};

// Featurized trajectory: row t embeds raw samples [t, t + window).
struct FeatureSeries {
    RMatrix samples;  // T x p
    double dt = 0.01;
};

// Sufficient statistics of one-step feature transitions, so the quadratic
// one-step loss ||z_{t+1} - G* z_t||^2 averages to
//   c0 - 2 Re Tr(G Syx) + Tr(G G* S0),  Syx = (1/n) sum z_{t+1} z_t^T.
struct TransitionStats {
    CMatrix s0;   // (1/n) sum z_t z_t^T
    CMatrix sxy;  // (1/n) sum z_t z_{t+1}^T  (= Syx^T)
    double c0 = 0.0;
    Index n = 0;
    Index p = 0;
};

TransitionStats make_transition_stats(const FeatureSeries& features);

}  // namespace doodl
