#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "doodl/errors.hpp"
#include "doodl/sgot.hpp"
#include "test_utils.hpp"

using namespace doodl;
namespace dt = doodl::testing;

namespace {

SgotConfig chordal_cfg() {
    SgotConfig cfg;
    cfg.eta = 0.25;
    cfg.q = 2;
    cfg.metric = ProjectorMetric::chordal;
    return cfg;
}

// Exhaustive minimum over permutations for equal-size uniform measures.
double brute_force_divergence(const SpectralMeasure& mu, const SpectralMeasure& nu,
                              const SgotConfig& cfg) {
    const Index r = static_cast<Index>(mu.atoms.size());
    std::vector<Index> perm(r);
    std::iota(perm.begin(), perm.end(), Index(0));
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (Index i = 0; i < r; ++i) cost += ground_cost(mu.atoms[i], nu.atoms[perm[i]], cfg);
        best = std::min(best, cost / static_cast<double>(r));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Exact LP oracle by basic-solution enumeration for tiny transportation
// problems: some optimal vertex uses at most l+l'-1 cells.
double enumerate_transport(const RMatrix& cost, const RVector& a, const RVector& b) {
    const Index nr = cost.rows(), nc = cost.cols();
    const Index cells = nr * nc;
    const Index basis = nr + nc - 1;
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(cells, false);
    std::fill(pick.begin(), pick.begin() + basis, true);
    std::sort(pick.begin(), pick.end());
    do {
        std::vector<Index> chosen;
        for (Index c = 0; c < cells; ++c)
            if (pick[c]) chosen.push_back(c);
        RMatrix sys = RMatrix::Zero(nr + nc, basis);
        RVector rhs(nr + nc);
        rhs.head(nr) = a;
        rhs.tail(nc) = b;
        for (Index k = 0; k < basis; ++k) {
            sys(chosen[k] / nc, k) = 1.0;
            sys(nr + chosen[k] % nc, k) = 1.0;
        }
        const RVector x = sys.colPivHouseholderQr().solve(rhs);
        if ((sys * x - rhs).norm() > 1e-9) continue;
        if (x.minCoeff() < -1e-9) continue;
        double total = 0.0;
        for (Index k = 0; k < basis; ++k) total += x(k) * cost(chosen[k] / nc, chosen[k] % nc);
        best = std::min(best, total);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

}  // namespace

TEST_SUITE("sgot") {

TEST_CASE("to_measure: uniform weights, canonical order, gauge-invariant overlaps") {
    std::mt19937_64 rng(41);
    const SpectralDecomposition sd = dt::random_sd(rng, 6, 3);
    const SpectralMeasure m = to_measure(sd);
    CHECK(m.atoms.size() == 3);
    CHECK((m.weights - RVector::Constant(3, 1.0 / 3)).norm() < 1e-15);

    // Gauge transform leaves every pairwise overlap unchanged.
    SpectralDecomposition t = sd;
    std::uniform_real_distribution<double> unif(0.3, 2.0);
    for (Index i = 0; i < 3; ++i) {
        const Complex z = std::polar(unif(rng), unif(rng));
        t.right.col(i) /= z;
        t.left.col(i) *= std::conj(z);
    }
    const SpectralMeasure mt = to_measure(t);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(spectral_overlap(m.atoms[i], m.atoms[j]) -
                           spectral_overlap(mt.atoms[i], mt.atoms[j])) < 1e-12);

    // Rank-1 identity projector: single atom, weight 1.
    SpectralDecomposition one;
    one.p = 2;
    one.r = 1;
    one.eigvals = CVector::Constant(1, Complex(1, 0));
    one.left = one.right = CMatrix::Zero(2, 1);
    one.left(0, 0) = one.right(0, 0) = 1.0;
    const SpectralMeasure m1 = to_measure(one);
    CHECK(m1.atoms.size() == 1);
    CHECK(m1.weights(0) == 1.0);
}

TEST_CASE("projector_distance: table values") {
    SpectralAtom a{Complex(1, 0), CVector::Unit(3, 0), CVector::Unit(3, 0)};
    for (auto metric : {ProjectorMetric::geodesic, ProjectorMetric::chordal,
                        ProjectorMetric::procrustes, ProjectorMetric::log_martin})
        CHECK(projector_distance(a, a, metric, 1e-12) < 1e-12);

    // Orthogonal rank-1 projectors: delta = 0.
    SpectralAtom b{Complex(1, 0), CVector::Unit(3, 1), CVector::Unit(3, 1)};
    CHECK(projector_distance(a, b, ProjectorMetric::chordal, 1e-12) == doctest::Approx(1.0));
    CHECK(projector_distance(a, b, ProjectorMetric::procrustes, 1e-12) == doctest::Approx(2.0));
    // Clamped log-Martin: -log(1e-24) = 24 ln 10 ~ 55.26.
    CHECK(projector_distance(a, b, ProjectorMetric::log_martin, 1e-12) ==
          doctest::Approx(-std::log(1e-24)).epsilon(1e-12));
    CHECK(projector_distance(a, b, ProjectorMetric::log_martin, 1e-12) ==
          doctest::Approx(55.26).epsilon(1e-3));
}

TEST_CASE("ground_cost: closed-form examples") {
    SpectralAtom a{Complex(0, 0), CVector::Unit(3, 0), CVector::Unit(3, 0)};
    SpectralAtom b{Complex(3, 0), CVector::Unit(3, 1), CVector::Unit(3, 1)};
    SgotConfig cfg = chordal_cfg();
    CHECK(ground_cost(a, a, cfg) == 0.0);

    // eta -> 1 limit: projector term weight goes to zero.
    cfg.eta = 1.0 - 1e-12;
    CHECK(ground_cost(a, b, cfg) == doctest::Approx(9.0).epsilon(1e-9));

    // eta=0.25, q=2, |d|=2, chordal with delta=0: 0.25*4 + 0.75*1 = 1.75.
    cfg.eta = 0.25;
    SpectralAtom c{Complex(2, 0), CVector::Unit(3, 1), CVector::Unit(3, 1)};
    CHECK(ground_cost(a, c, cfg) == doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("solve_transport: identity and reversed-order plans") {
    std::mt19937_64 rng(42);
    const SpectralDecomposition sd = dt::random_sd(rng, 5, 3);
    const SgotConfig cfg = chordal_cfg();
    const SpectralMeasure m = to_measure_unsorted(sd);
    auto [plan, cost] = solve_transport(m, m, cfg);
    CHECK(cost < 1e-12);
    CHECK((plan.matrix - RMatrix::Identity(3, 3) / 3.0).norm() < 1e-12);

    SpectralMeasure rev = m;
    std::reverse(rev.atoms.begin(), rev.atoms.end());
    auto [plan2, cost2] = solve_transport(m, rev, cfg);
    CHECK(cost2 < 1e-12);
}

TEST_CASE("solve_transport: matches brute force over permutations (r <= 5)") {
    std::mt19937_64 rng(43);
    const SgotConfig cfgs[2] = {chordal_cfg(), SgotConfig{}};
    for (int trial = 0; trial < 200; ++trial) {
        const Index r = 1 + static_cast<Index>(trial % 5);
        const Index p = r + 2 + static_cast<Index>(trial % 3);
        const SpectralDecomposition a = dt::random_sd(rng, p, r);
        const SpectralDecomposition b = dt::random_sd(rng, p, r);
        const SgotConfig& cfg = cfgs[trial % 2];
        const SpectralMeasure ma = to_measure_unsorted(a), mb = to_measure_unsorted(b);
        const double got = solve_transport(ma, mb, cfg).second;
        const double want = brute_force_divergence(ma, mb, cfg);
        CHECK(std::abs(got - want) < 1e-10 * std::max(1.0, want));
    }
}

TEST_CASE("solve_transport: general weights match LP enumeration") {
    std::mt19937_64 rng(44);
    const SgotConfig cfg = chordal_cfg();
    for (int trial = 0; trial < 25; ++trial) {
        const Index nr = 2 + static_cast<Index>(trial % 2);
        const Index nc = 3 + static_cast<Index>(trial % 2);
        const SpectralDecomposition a = dt::random_sd(rng, 6, nr);
        const SpectralDecomposition b = dt::random_sd(rng, 6, nc);
        const SpectralMeasure ma = to_measure_unsorted(a), mb = to_measure_unsorted(b);

        RMatrix cost(nr, nc);
        for (Index i = 0; i < nr; ++i)
            for (Index j = 0; j < nc; ++j) cost(i, j) = ground_cost(ma.atoms[i], mb.atoms[j], cfg);

        auto [plan, got] = solve_transport(ma, mb, cfg);
        CHECK((plan.matrix.rowwise().sum() - ma.weights).norm() < 1e-9);
        CHECK((plan.matrix.colwise().sum().transpose() - mb.weights).norm() < 1e-9);
        const double want = enumerate_transport(cost, ma.weights, mb.weights);
        CHECK(std::abs(got - want) < 1e-9 * std::max(1.0, want));
    }
}

TEST_CASE("solve_transport: mismatched mass is rejected") {
    std::mt19937_64 rng(45);
    const SpectralDecomposition a = dt::random_sd(rng, 4, 2);
    SpectralMeasure ma = to_measure_unsorted(a);
    SpectralMeasure bad = ma;
    bad.weights *= 0.5;
    CHECK_THROWS_AS(solve_transport(ma, bad, chordal_cfg()), InvalidMeasure);
}

TEST_CASE("sgot_divergence: identity, symmetry, eigenvalue-only shift") {
    std::mt19937_64 rng(46);
    const SpectralDecomposition g = dt::random_sd(rng, 6, 3);
    SgotConfig cfg = chordal_cfg();
    CHECK(sgot_divergence(g, g, cfg) <= 1e-12);

    const SpectralDecomposition h = dt::random_sd(rng, 6, 3);
    CHECK(std::abs(sgot_divergence(g, h, cfg) - sgot_divergence(h, g, cfg)) < 1e-10);

    // Same eigenvectors, eigenvalues shifted by c: divergence = eta |c|^2.
    SpectralDecomposition shifted = g;
    const Complex c(0.3, -0.2);
    shifted.eigvals.array() += c;
    const double want = cfg.eta * std::norm(c);
    CHECK(std::abs(sgot_divergence(g, shifted, cfg) - want) < 1e-10);
}

TEST_CASE("sgot_divergence: permutation and gauge invariance") {
    std::mt19937_64 rng(47);
    const SgotConfig cfg = chordal_cfg();
    for (int trial = 0; trial < 10; ++trial) {
        const SpectralDecomposition a = dt::random_sd(rng, 6, 3);
        const SpectralDecomposition b = dt::random_sd(rng, 6, 3);
        const double want = sgot_divergence(a, b, cfg);

        std::vector<Index> perm{0, 1, 2};
        std::shuffle(perm.begin(), perm.end(), rng);
        SpectralDecomposition pa = a;
        for (Index i = 0; i < 3; ++i) {
            pa.eigvals(i) = a.eigvals(perm[i]);
            pa.left.col(i) = a.left.col(perm[i]);
            pa.right.col(i) = a.right.col(perm[i]);
        }
        CHECK(std::abs(sgot_divergence(pa, b, cfg) - want) < 1e-10);

        std::uniform_real_distribution<double> unif(0.3, 2.0);
        SpectralDecomposition gb = b;
        for (Index i = 0; i < 3; ++i) {
            const Complex z = std::polar(unif(rng), unif(rng));
            gb.right.col(i) /= z;
            gb.left.col(i) *= std::conj(z);
        }
        CHECK(std::abs(sgot_divergence(a, gb, cfg) - want) < 1e-8);
    }
}

TEST_CASE("grad_sgot_fixed_plan: trivial cases") {
    std::mt19937_64 rng(48);
    const SpectralDecomposition g = dt::random_sd(rng, 5, 2);
    SgotConfig cfg = chordal_cfg();
    const SpectralMeasure target = to_measure_unsorted(g);
    auto [plan, cost] = solve_transport(to_measure_unsorted(g), target, cfg);

    // At the target itself, the eigenvalue gradient vanishes.
    const AmbientTriple grad = grad_sgot_fixed_plan(g, target, plan, cfg);
    CHECK(grad.dlambda.norm() < 1e-12);

    // eta -> 1: vector gradients vanish identically.
    SgotConfig ev_only = cfg;
    ev_only.eta = 1.0 - 1e-15;
    const SpectralDecomposition h = dt::random_sd(rng, 5, 2);
    auto [plan2, cost2] = solve_transport(to_measure_unsorted(h), target, ev_only);
    const AmbientTriple grad2 = grad_sgot_fixed_plan(h, target, plan2, ev_only);
    CHECK(grad2.xi.norm() < 1e-12);
    CHECK(grad2.zeta.norm() < 1e-12);
}

TEST_CASE("grad_sgot_fixed_plan: finite-difference match on random instances") {
    std::mt19937_64 rng(49);
    int compared = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Index r = 1 + static_cast<Index>(trial % 3);
        const Index p = r + 3;
        const SpectralDecomposition recon = dt::random_sd(rng, p, r);
        const SpectralDecomposition target_sd = dt::random_sd(rng, p, r);
        const SpectralMeasure target = to_measure_unsorted(target_sd);
        SgotConfig cfg;
        switch (trial % 4) {
            case 0: cfg.metric = ProjectorMetric::chordal; break;
            case 1: cfg.metric = ProjectorMetric::procrustes; break;
            case 2: cfg.metric = ProjectorMetric::log_martin; break;
            default: cfg.metric = ProjectorMetric::geodesic; break;
        }
        cfg.eta = (trial % 2) ? 0.75 : 0.25;
        cfg.q = 2;

        auto [plan, cost] = solve_transport(to_measure_unsorted(recon), target, cfg);
        const AmbientTriple grad = grad_sgot_fixed_plan(recon, target, plan, cfg);

        auto fixed_plan_cost = [&](const SpectralDecomposition& sd) {
            double total = 0.0;
            for (Index i = 0; i < r; ++i)
                for (std::size_t j = 0; j < target.atoms.size(); ++j) {
                    const double pij = plan.matrix(i, static_cast<Index>(j));
                    if (pij <= 0) continue;
                    const SpectralAtom atom{sd.eigvals(i), sd.left.col(i), sd.right.col(i)};
                    total += pij * ground_cost(atom, target.atoms[j], cfg);
                }
            return total;
        };

        const CVector dlam = dt::random_cvector(rng, r);
        const CMatrix dxi = dt::random_cmatrix(rng, p, r);
        const CMatrix dzeta = dt::random_cmatrix(rng, p, r);
        const double fd = dt::ambient_directional_fd(fixed_plan_cost, recon, dlam, dxi, dzeta);
        const double analytic = dt::pairing(grad, dlam, dxi, dzeta);
        if (std::abs(fd) > 1e-8) {
            CHECK(dt::rel_err(analytic, fd) < 1e-4);
            ++compared;
        }
    }
    CHECK(compared >= 40);
}

TEST_CASE("assignment solver: tiny hand instance") {
    RMatrix cost(3, 3);
    cost << 4, 1, 3,
            2, 0, 5,
            3, 2, 2;
    const std::vector<int> assign = min_cost_assignment(cost);
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += cost(i, assign[i]);
    CHECK(total == doctest::Approx(5.0));
}

}  // TEST_SUITE
