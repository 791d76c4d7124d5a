#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "doodl/features.hpp"
#include "doodl/types.hpp"

namespace doodl {

// Two-well potential U_w(x) = w^-4 (x^2 - w^2)^2; wells at +-w, barrier height
// 1 at the origin for every w.
struct TwoWellPotential {
    double w = 1.0;
};

struct SimConfig {
    double sigma = 0.5;   // temperature
    double dt = 0.01;     // 100 Hz
    Index n_samples = 0;  // trajectory length, including the initial state
    double x0 = 0.0;
    std::uint64_t seed = 0;
};

// Returns (U, dU/dx).
std::pair<double, double> potential_and_grad(const TwoWellPotential& pot, double x);

// Euler-Maruyama integration of dX = -dU(X) dt + sqrt(2 sigma dt) xi_t with
// counter-based Gaussian increments (bitwise reproducible). A step whose
// result would leave |X| <= 1e3 is retried with halved dt (same draw), up to
// 20 times, then SimulationDiverged.
Trajectory simulate(const TwoWellPotential& pot, const SimConfig& cfg);

struct Regime {
    TwoWellPotential pot;
    Index duration;  // samples contributed by this regime
};

// Concatenated simulation with state continuity across regime switches; each
// regime segment draws from its own noise stream. Returns the trajectory and
// the exact switch indices (start of each regime after the first).
std::pair<Trajectory, std::vector<Index>> simulate_switching(const std::vector<Regime>& regimes,
                                                             const SimConfig& cfg);

}  // namespace doodl
