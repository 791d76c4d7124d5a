#include "doodl/kmedoids.hpp"

#include <algorithm>
#include <limits>

#include "doodl/errors.hpp"

namespace doodl {

namespace {

double objective(const RMatrix& dist, const std::vector<Index>& medoids) {
    double total = 0.0;
    for (Index i = 0; i < dist.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Index m : medoids) best = std::min(best, dist(i, m));
        total += best;
    }
    return total / static_cast<double>(dist.rows());
}

}  // namespace

double k_medoids_objective(const RMatrix& dist, const std::vector<Index>& medoids) {
    return objective(dist, medoids);
}

std::vector<Index> k_medoids(const RMatrix& dist, Index k, int max_swap_rounds) {
    const Index n = dist.rows();
    if (dist.cols() != n) throw InvalidShape("k_medoids: distance matrix must be square");
    if (k < 1 || k > n) throw InvalidInput("k_medoids: need 1 <= k <= n");

    std::vector<Index> medoids;
    medoids.reserve(k);
    // Seed with the point of least total distance.
    Index first = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
        const double t = dist.row(i).sum();
        if (t < best_total) {
            best_total = t;
            first = i;
        }
    }
    medoids.push_back(first);
    // Farthest-first for the rest.
    while (static_cast<Index>(medoids.size()) < k) {
        Index far = -1;
        double far_dist = -1.0;
        for (Index i = 0; i < n; ++i) {
            if (std::find(medoids.begin(), medoids.end(), i) != medoids.end()) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (Index m : medoids) nearest = std::min(nearest, dist(i, m));
            if (nearest > far_dist) {
                far_dist = nearest;
                far = i;
            }
        }
        medoids.push_back(far);
    }

    // PAM swap refinement.
    double cur = objective(dist, medoids);
    for (int round = 0; round < max_swap_rounds; ++round) {
        double best_gain = 1e-15;
        Index best_slot = -1, best_cand = -1;
        for (Index slot = 0; slot < k; ++slot) {
            for (Index cand = 0; cand < n; ++cand) {
                if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end()) continue;
                std::vector<Index> trial = medoids;
                trial[slot] = cand;
                const double val = objective(dist, trial);
                if (cur - val > best_gain) {
                    best_gain = cur - val;
                    best_slot = slot;
                    best_cand = cand;
                }
            }
        }
        if (best_slot < 0) break;
        medoids[best_slot] = best_cand;
        cur = objective(dist, medoids);
    }
    std::sort(medoids.begin(), medoids.end());
    return medoids;
}

}  // namespace doodl
