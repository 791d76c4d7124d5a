#include "doodl/langevin.hpp"

#include <cmath>

#include "doodl/errors.hpp"
#include "doodl/rng.hpp"

namespace doodl {

namespace {

constexpr double kBlowupGuard = 1e3;

double em_step(const TwoWellPotential& pot, double x, double dt, double sigma, double xi) {
    const double du = 4.0 * x * (x * x - pot.w * pot.w) / (pot.w * pot.w * pot.w * pot.w);
    return x - du * dt + std::sqrt(2.0 * sigma * dt) * xi;
}

// One recorded sample: reject-and-halve on blow-up, reusing the same draw.
double guarded_step(const TwoWellPotential& pot, double x, const SimConfig& cfg, double xi,
                    Index* halvings) {
    double dt = cfg.dt;
    for (int k = 0; k <= 20; ++k) {
        const double next = em_step(pot, x, dt, cfg.sigma, xi);
        if (std::abs(next) <= kBlowupGuard) {
            if (k > 0 && halvings) *halvings += k;
            return next;
        }
        dt *= 0.5;
    }
    throw SimulationDiverged("simulate: state blow-up persisted through 20 halvings");
}

}  // namespace

std::pair<double, double> potential_and_grad(const TwoWellPotential& pot, double x) {
    if (!(pot.w > 0)) throw InvalidInput("potential_and_grad: w must be positive");
    const double w4 = pot.w * pot.w * pot.w * pot.w;
    const double q = x * x - pot.w * pot.w;
    return {q * q / w4, 4.0 * x * q / w4};
}

Trajectory simulate(const TwoWellPotential& pot, const SimConfig& cfg) {
    if (!(pot.w > 0)) throw InvalidInput("simulate: w must be positive");
    if (cfg.n_samples < 1 || !(cfg.dt > 0)) throw InvalidInput("simulate: invalid SimConfig");
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.x.resize(cfg.n_samples);
    traj.x(0) = cfg.x0;
    double x = cfg.x0;
    for (Index t = 1; t < cfg.n_samples; ++t) {
        const double xi = cfg.sigma > 0 ? rng::gaussian(cfg.seed, 0, static_cast<std::uint64_t>(t)) : 0.0;
        x = guarded_step(pot, x, cfg, xi, &traj.halving_events);
        traj.x(t) = x;
    }
    return traj;
}

std::pair<Trajectory, std::vector<Index>> simulate_switching(const std::vector<Regime>& regimes,
                                                             const SimConfig& cfg) {
    if (regimes.empty()) throw InvalidInput("simulate_switching: no regimes");
    Index total = 0;
    for (const auto& reg : regimes) {
        if (reg.duration < 1) throw InvalidInput("simulate_switching: empty regime");
        total += reg.duration;
    }
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.x.resize(total);
    std::vector<Index> switch_times;
    double x = cfg.x0;
    Index pos = 0;
    for (std::size_t seg = 0; seg < regimes.size(); ++seg) {
        if (seg > 0) switch_times.push_back(pos);
        const auto& reg = regimes[seg];
        for (Index t = 0; t < reg.duration; ++t) {
            if (pos == 0) {
                traj.x(0) = x;
                ++pos;
                continue;
            }
            const double xi =
                cfg.sigma > 0 ? rng::gaussian(cfg.seed, seg, static_cast<std::uint64_t>(t)) : 0.0;
            x = guarded_step(reg.pot, x, cfg, xi, &traj.halving_events);
            traj.x(pos++) = x;
        }
    }
    return {std::move(traj), std::move(switch_times)};
}

}  // namespace doodl
