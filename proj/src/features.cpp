#include "doodl/features.hpp"

#include "doodl/errors.hpp"

namespace doodl {

TransitionStats make_transition_stats(const FeatureSeries& features) {
    const Index t = features.samples.rows();
    if (t < 2) throw InsufficientData("make_transition_stats: need at least 2 feature rows");
    const Index n = t - 1;
    const RMatrix x = features.samples.topRows(n);
    const RMatrix y = features.samples.bottomRows(n);
    TransitionStats stats;
    stats.p = features.samples.cols();
    stats.n = n;
    const double inv = 1.0 / static_cast<double>(n);
    stats.s0 = (x.transpose() * x * inv).cast<Complex>();
    stats.sxy = (x.transpose() * y * inv).cast<Complex>();
    stats.c0 = y.squaredNorm() * inv;
    return stats;
}

}  // namespace doodl
