#include "doodl/sgot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "doodl/errors.hpp"

namespace doodl {

namespace {

constexpr double kMarginalTol = 1e-9;
constexpr double kFlowTol = 1e-12;

SpectralMeasure measure_from(const SpectralDecomposition& sd) {
    SpectralMeasure m;
    m.atoms.reserve(sd.r);
    for (Index i = 0; i < sd.r; ++i)
        m.atoms.push_back({sd.eigvals(i), sd.left.col(i), sd.right.col(i)});
    m.weights = RVector::Constant(sd.r, 1.0 / static_cast<double>(sd.r));
    return m;
}

double metric_value(double delta, ProjectorMetric metric) {
    switch (metric) {
        case ProjectorMetric::geodesic: {
            const double t = std::acos(delta);
            return t * t;
        }
        case ProjectorMetric::chordal:
            return 1.0 - delta * delta;
        case ProjectorMetric::procrustes:
            return 2.0 * (1.0 - delta);
        case ProjectorMetric::log_martin:
            return -std::log(delta * delta);
    }
    throw InvalidInput("sgot: unknown projector metric");
}

double metric_derivative(double delta, ProjectorMetric metric) {
    switch (metric) {
        case ProjectorMetric::geodesic: {
            const double t = std::acos(delta);
            return -2.0 * t / std::sqrt(std::max(1.0 - delta * delta, 1e-300));
        }
        case ProjectorMetric::chordal:
            return -2.0 * delta;
        case ProjectorMetric::procrustes:
            return -2.0;
        case ProjectorMetric::log_martin:
            return -2.0 / delta;
    }
    throw InvalidInput("sgot: unknown projector metric");
}

void validate_cfg(const SgotConfig& cfg) {
    if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) throw InvalidInput("sgot: eta must be in (0,1)");
    if (cfg.q < 1) throw InvalidInput("sgot: q must be >= 1");
    if (!(cfg.delta_clamp > 0.0 && cfg.delta_clamp < 1.0))
        throw InvalidInput("sgot: delta_clamp must be in (0,1)");
}

void validate_measure(const SpectralMeasure& m) {
    if (m.atoms.empty() || m.weights.size() != static_cast<Index>(m.atoms.size()))
        throw InvalidMeasure("sgot: measure atoms/weights mismatch");
    if (m.weights.minCoeff() < -kFlowTol) throw InvalidMeasure("sgot: negative weight");
    if (std::abs(m.weights.sum() - 1.0) > 1e-9) throw InvalidMeasure("sgot: weights must sum to 1");
}

bool uniform_weights(const RVector& w) {
    const double target = 1.0 / static_cast<double>(w.size());
    return (w.array() - target).abs().maxCoeff() < 1e-12;
}

// Min-cost flow on the complete bipartite transportation graph via successive
// shortest augmenting paths with node potentials (Dijkstra on reduced costs).
std::pair<RMatrix, double> transport_flow(const RMatrix& cost, RVector supply, RVector demand) {
    const Index nr = cost.rows(), nc = cost.cols();
    RMatrix flow = RMatrix::Zero(nr, nc);
    RVector pot_row = RVector::Zero(nr), pot_col = RVector::Zero(nc);

    double remaining = supply.sum();
    long iter_cap = 4 * (nr + nc) * (nr * nc + 1);
    while (remaining > kFlowTol) {
        if (--iter_cap < 0) throw InvalidMeasure("sgot: transport solver failed to terminate");
        // Multi-source Dijkstra: sources are rows with remaining supply.
        const double inf = std::numeric_limits<double>::infinity();
        RVector dist_row = RVector::Constant(nr, inf), dist_col = RVector::Constant(nc, inf);
        std::vector<int> parent_col(nc, -1);   // row used to reach this col
        std::vector<int> parent_row(nr, -1);   // col used to reach this row (backward arc)
        std::vector<bool> done_row(nr, false), done_col(nc, false);
        using Node = std::pair<double, int>;  // (dist, id); id < nr => row, else col
        std::priority_queue<Node, std::vector<Node>, std::greater<Node>> pq;
        for (Index i = 0; i < nr; ++i)
            if (supply(i) > kFlowTol) {
                dist_row(i) = 0.0;
                pq.push({0.0, static_cast<int>(i)});
            }
        while (!pq.empty()) {
            auto [d, id] = pq.top();
            pq.pop();
            if (id < nr) {
                const Index i = id;
                if (done_row[i] || d > dist_row(i)) continue;
                done_row[i] = true;
                for (Index j = 0; j < nc; ++j) {
                    const double rc = cost(i, j) + pot_row(i) - pot_col(j);
                    const double nd = d + std::max(rc, 0.0);
                    if (nd < dist_col(j) - 1e-15) {
                        dist_col(j) = nd;
                        parent_col[j] = static_cast<int>(i);
                        pq.push({nd, static_cast<int>(nr + j)});
                    }
                }
            } else {
                const Index j = id - nr;
                if (done_col[j] || d > dist_col(j)) continue;
                done_col[j] = true;
                for (Index i = 0; i < nr; ++i) {
                    if (flow(i, j) <= kFlowTol) continue;  // backward arc needs positive flow
                    const double rc = -cost(i, j) + pot_col(j) - pot_row(i);
                    const double nd = d + std::max(rc, 0.0);
                    if (nd < dist_row(i) - 1e-15) {
                        dist_row(i) = nd;
                        parent_row[i] = static_cast<int>(j);
                        pq.push({nd, static_cast<int>(i)});
                    }
                }
            }
        }
        // Closest reachable column with unmet demand.
        int best = -1;
        for (Index j = 0; j < nc; ++j)
            if (demand(j) > kFlowTol && dist_col(j) < inf && (best < 0 || dist_col(j) < dist_col(best)))
                best = static_cast<int>(j);
        if (best < 0) throw InvalidMeasure("sgot: transport marginals not balanced");

        // Trace the augmenting path back to a source row, find the bottleneck.
        double bottleneck = demand(best);
        {
            int j = best;
            while (true) {
                const int i = parent_col[j];
                if (parent_row[i] < 0) {
                    bottleneck = std::min(bottleneck, supply(i));
                    break;
                }
                const int jprev = parent_row[i];
                bottleneck = std::min(bottleneck, flow(i, jprev));
                j = jprev;
            }
        }
        // Apply the augmentation.
        {
            int j = best;
            while (true) {
                const int i = parent_col[j];
                flow(i, j) += bottleneck;
                if (parent_row[i] < 0) {
                    supply(i) -= bottleneck;
                    break;
                }
                const int jprev = parent_row[i];
                flow(i, jprev) -= bottleneck;
                j = jprev;
            }
            demand(best) -= bottleneck;
        }
        remaining -= bottleneck;
        // Johnson potential update keeps reduced costs nonnegative.
        const double dstar = dist_col(best);
        for (Index i = 0; i < nr; ++i)
            pot_row(i) += std::isfinite(dist_row(i)) ? std::min(dist_row(i), dstar) : dstar;
        for (Index j = 0; j < nc; ++j)
            pot_col(j) += std::isfinite(dist_col(j)) ? std::min(dist_col(j), dstar) : dstar;
    }
    const double total = (flow.array() * cost.array()).sum();
    return {std::move(flow), total};
}

}  // namespace

SpectralMeasure to_measure(const SpectralDecomposition& sd) {
    return measure_from(canonical_sort(sd));
}

SpectralMeasure to_measure_unsorted(const SpectralDecomposition& sd) {
    return measure_from(sd);
}

double spectral_overlap(const SpectralAtom& a, const SpectralAtom& b) {
    const double num = std::abs(a.right.dot(b.right)) * std::abs(a.left.dot(b.left));
    const double den = a.right.norm() * b.right.norm() * a.left.norm() * b.left.norm();
    if (den <= 0) return 0.0;
    return num / den;
}

double projector_distance(const SpectralAtom& a, const SpectralAtom& b, ProjectorMetric metric,
                          double clamp) {
    const double delta = std::clamp(spectral_overlap(a, b), clamp, 1.0);
    return metric_value(delta, metric);
}

double ground_cost(const SpectralAtom& a, const SpectralAtom& b, const SgotConfig& cfg) {
    validate_cfg(cfg);
    const double ev = std::pow(std::abs(a.lambda - b.lambda), cfg.q);
    const double pd = std::pow(projector_distance(a, b, cfg.metric, cfg.delta_clamp), cfg.q);
    return cfg.eta * ev + (1.0 - cfg.eta) * pd;
}

std::vector<int> min_cost_assignment(const RMatrix& cost) {
    // Shortest augmenting path assignment (Jonker-Volgenant flavour) with
    // potentials; 1-based scratch arrays, 0 is the virtual root column.
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> way(n + 1, 0), matched_row(n + 1, -1);
    for (int i = 0; i < n; ++i) {
        matched_row[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = matched_row[j0];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j - 1) - u[i0 + 1] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[matched_row[j] + 1] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (matched_row[j0] != -1);
        do {
            const int j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (matched_row[j] >= 0) row_to_col[matched_row[j]] = j - 1;
    return row_to_col;
}

std::pair<TransportPlan, double> solve_transport(const SpectralMeasure& mu, const SpectralMeasure& nu,
                                                 const SgotConfig& cfg) {
    validate_cfg(cfg);
    validate_measure(mu);
    validate_measure(nu);
    if (std::abs(mu.weights.sum() - nu.weights.sum()) > kMarginalTol)
        throw InvalidMeasure("sgot: marginal mass mismatch");

    const Index nr = static_cast<Index>(mu.atoms.size());
    const Index nc = static_cast<Index>(nu.atoms.size());
    RMatrix cost(nr, nc);
    for (Index i = 0; i < nr; ++i)
        for (Index j = 0; j < nc; ++j) cost(i, j) = ground_cost(mu.atoms[i], nu.atoms[j], cfg);

    TransportPlan plan;
    double total = 0.0;
    if (nr == nc && uniform_weights(mu.weights) && uniform_weights(nu.weights)) {
        const std::vector<int> assign = min_cost_assignment(cost);
        plan.matrix = RMatrix::Zero(nr, nc);
        const double w = 1.0 / static_cast<double>(nr);
        for (Index i = 0; i < nr; ++i) {
            plan.matrix(i, assign[i]) = w;
            total += w * cost(i, assign[i]);
        }
    } else {
        auto [flow, c] = transport_flow(cost, mu.weights, nu.weights);
        plan.matrix = std::move(flow);
        total = c;
    }
    return {std::move(plan), total};
}

double sgot_divergence(const SpectralDecomposition& g1, const SpectralDecomposition& g2,
                       const SgotConfig& cfg) {
    if (g1.p != g2.p) throw InvalidShape("sgot_divergence: ambient dimensions differ");
    return solve_transport(to_measure_unsorted(g1), to_measure_unsorted(g2), cfg).second;
}

AmbientTriple grad_sgot_fixed_plan(const SpectralDecomposition& recon, const SpectralMeasure& target,
                                   const TransportPlan& plan, const SgotConfig& cfg) {
    validate_cfg(cfg);
    const Index r = recon.r;
    const Index nt = static_cast<Index>(target.atoms.size());
    if (plan.matrix.rows() != r || plan.matrix.cols() != nt)
        throw InvalidShape("grad_sgot_fixed_plan: plan shape mismatch");

    AmbientTriple g;
    g.dlambda = CVector::Zero(r);
    g.xi = CMatrix::Zero(recon.p, r);
    g.zeta = CMatrix::Zero(recon.p, r);
    const double q = static_cast<double>(cfg.q);

    for (Index i = 0; i < r; ++i) {
        const CVector ra = recon.right.col(i), la = recon.left.col(i);
        const double na2 = ra.squaredNorm(), ma2 = la.squaredNorm();
        for (Index j = 0; j < nt; ++j) {
            const double pij = plan.matrix(i, j);
            if (pij <= 0.0) continue;
            const SpectralAtom& b = target.atoms[j];

            // Eigenvalue term: eta |d|^q, d/d(conj lambda_i) = (q/2)|d|^{q-2} d.
            const Complex d = recon.eigvals(i) - b.lambda;
            const double dabs = std::abs(d);
            if (dabs > 0.0)
                g.dlambda(i) += pij * cfg.eta * 0.5 * q * std::pow(dabs, q - 2.0) * d;

            // Projector term: (1-eta) d_E(delta)^q through the overlap delta.
            const Complex h = ra.dot(b.right);  // <r_a, r_b>
            const Complex gg = la.dot(b.left);  // <l_a, l_b>
            const double aa = std::abs(h), bb = std::abs(gg);
            const double delta = spectral_overlap({recon.eigvals(i), la, ra}, b);
            if (delta <= cfg.delta_clamp || delta >= 1.0 - 1e-14) continue;  // clamped: flat
            const double de = metric_value(delta, cfg.metric);
            const double w =
                pij * (1.0 - cfg.eta) * q * std::pow(de, q - 1.0) * metric_derivative(delta, cfg.metric);
            // d delta / d(conj r_a) = (delta/2) [ conj(h) r_b / |h|^2 - r_a / ||r_a||^2 ]
            g.zeta.col(i) += w * (0.5 * delta) * (std::conj(h) / (aa * aa) * b.right - ra / na2);
            g.xi.col(i) += w * (0.5 * delta) * (std::conj(gg) / (bb * bb) * b.left - la / ma2);
        }
    }
    return g;
}

}  // namespace doodl
