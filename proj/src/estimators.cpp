#include "doodl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doodl/errors.hpp"
#include "doodl/kmedoids.hpp"
#include "doodl/rng.hpp"

namespace doodl {

namespace {

constexpr std::uint64_t kFreqStream = 11;
constexpr std::uint64_t kPhaseStream = 12;

// Exact minimizer of ||alpha - v||^2 over the simplex (sort-based).
RVector simplex_projection(const RVector& v) {
    const Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0, theta = 0.0;
    Index rho = 0;
    for (Index i = 0; i < n; ++i) {
        cssv += u[i];
        const double t = (cssv - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0) {
            rho = i;
            theta = t;
        }
    }
    (void)rho;
    return (v.array() - theta).max(0.0);
}

// Monotone projected gradient descent for min 0.5 a^T Q a - b^T a on the
// simplex; Q symmetric positive semidefinite. Deterministic, keeps the best
// iterate.
RVector simplex_qp(const RMatrix& q, const RVector& b, RVector a0, int iters = 300) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(q);
    const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12);
    RVector a = simplex_projection(std::move(a0));
    auto value = [&](const RVector& x) { return 0.5 * x.dot(q * x) - b.dot(x); };
    double best_val = value(a);
    RVector best = a;
    for (int it = 0; it < iters; ++it) {
        const RVector grad = q * a - b;
        a = simplex_projection(a - grad / lip);
        const double val = value(a);
        if (val < best_val - 1e-15) {
            best_val = val;
            best = a;
        }
    }
    return best;
}

}  // namespace

RVector project_to_simplex(const RVector& v) { return simplex_projection(v); }

RffMap make_rff_map(Index input_dim, Index num_features, double bandwidth, std::uint64_t seed) {
    if (input_dim < 1 || num_features < 1)
        throw InvalidInput("make_rff_map: dimensions must be positive");
    if (!(bandwidth > 0)) throw InvalidInput("make_rff_map: bandwidth must be positive");
    RffMap map;
    map.input_dim = input_dim;
    map.num_features = num_features;
    map.bandwidth = bandwidth;
    map.seed = seed;
    map.frequencies.resize(num_features, input_dim);
    map.phases.resize(num_features);
    const double scale = 1.0 / bandwidth;
    for (Index i = 0; i < num_features; ++i) {
        for (Index k = 0; k < input_dim; ++k)
            map.frequencies(i, k) =
                scale * rng::gaussian(seed, kFreqStream, static_cast<std::uint64_t>(i * input_dim + k));
        map.phases(i) = 2.0 * M_PI * rng::uniform01(seed, kPhaseStream, static_cast<std::uint64_t>(i));
    }
    return map;
}

RVector rff_embed(const RffMap& map, const RVector& window) {
    if (window.size() != map.input_dim)
        throw InvalidShape("rff_embed: window length != input_dim");
    const double amp = std::sqrt(2.0 / static_cast<double>(map.num_features));
    return amp * ((map.frequencies * window + map.phases).array().cos()).matrix();
}

FeatureSeries featurize_trajectory(const RVector& traj, const RffMap& map, Index window, double dt) {
    if (window != map.input_dim)
        throw InvalidShape("featurize_trajectory: window != map input_dim");
    const Index t = traj.size();
    if (t < window) throw TrajectoryTooShort("featurize_trajectory: trajectory shorter than window");
    const Index rows = t - window + 1;
    FeatureSeries out;
    out.dt = dt;
    out.samples.resize(rows, map.num_features);
    for (Index i = 0; i < rows; ++i)
        out.samples.row(i) = rff_embed(map, traj.segment(i, window)).transpose();
    return out;
}

OperatorMatrix rrr_estimate(const FeatureSeries& features, const RrrConfig& cfg) {
    if (cfg.rank < 1) throw InvalidInput("rrr_estimate: rank must be >= 1");
    if (!(cfg.tikhonov > 0)) throw InvalidInput("rrr_estimate: tikhonov must be > 0");
    const Index t = features.samples.rows();
    if (t < 2) throw InsufficientData("rrr_estimate: need at least 2 feature rows");
    const Index p = features.samples.cols();
    const Index n = t - 1;
    const RMatrix x = features.samples.topRows(n);
    const RMatrix y = features.samples.bottomRows(n);
    const double inv = 1.0 / static_cast<double>(n);
    const RMatrix cx = x.transpose() * x * inv;
    const RMatrix cxy = x.transpose() * y * inv;

    // Rank-r minimizer of (1/n)|| X A - Y ||^2 + gamma ||A||^2:
    //   A = Gw^{-1/2} svd_r(Gw^{-1/2} Cxy),  Gw = Cx + gamma I.
    Eigen::SelfAdjointEigenSolver<RMatrix> es(cx + cfg.tikhonov * RMatrix::Identity(p, p));
    const RVector ev = es.eigenvalues();
    const RVector inv_sqrt = ev.cwiseMax(0.0).cwiseSqrt().cwiseInverse();
    const RMatrix gw_inv_sqrt = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();

    const RMatrix m = gw_inv_sqrt * cxy;
    Eigen::JacobiSVD<RMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index r = std::min(cfg.rank, p);
    const RMatrix m_r = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                        svd.matrixV().leftCols(r).transpose();

    OperatorMatrix op;
    op.p = p;
    op.rank_hint = r;
    op.matrix = (gw_inv_sqrt * m_r).cast<Complex>();
    return op;
}

LinearDlModel linear_dl_baseline(const std::vector<OperatorMatrix>& operators, Index d,
                                 std::uint64_t seed) {
    (void)seed;  // initialization is fully deterministic
    const Index n = static_cast<Index>(operators.size());
    if (n < d || d < 1) throw InvalidInput("linear_dl_baseline: need at least d operators");
    const Index p = operators.front().p;
    for (const auto& op : operators)
        if (op.p != p || op.matrix.rows() != p || op.matrix.cols() != p)
            throw InvalidShape("linear_dl_baseline: operators must share dimension");

    RMatrix dist = RMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            dist(i, j) = dist(j, i) = (operators[i].matrix - operators[j].matrix).norm();
    const std::vector<Index> medoids = k_medoids(dist, d);

    LinearDlModel model;
    for (Index m : medoids) model.atoms.push_back(operators[m].matrix);
    model.codes = RMatrix::Constant(n, d, 1.0 / static_cast<double>(d));

    auto mean_error = [&]() {
        double err = 0.0;
        for (Index i = 0; i < n; ++i) {
            CMatrix recon = CMatrix::Zero(p, p);
            for (Index j = 0; j < d; ++j) recon += model.codes(i, j) * model.atoms[j];
            err += (recon - operators[i].matrix).squaredNorm();
        }
        return err / static_cast<double>(n);
    };

    for (int sweep = 0; sweep < 25; ++sweep) {
        // Code step: exact simplex QP per item on Gram matrices of the atoms.
        RMatrix gram(d, d);
        for (Index a = 0; a < d; ++a)
            for (Index b = 0; b < d; ++b)
                gram(a, b) = (model.atoms[a].conjugate().array() * model.atoms[b].array()).sum().real();
        for (Index i = 0; i < n; ++i) {
            RVector lin(d);
            for (Index a = 0; a < d; ++a)
                lin(a) =
                    (model.atoms[a].conjugate().array() * operators[i].matrix.array()).sum().real();
            model.codes.row(i) = simplex_qp(gram, lin, model.codes.row(i).transpose()).transpose();
        }
        // Atom step: exact least squares given the codes (jittered normal equations).
        const RMatrix ata =
            model.codes.transpose() * model.codes + 1e-12 * RMatrix::Identity(d, d);
        const Eigen::LDLT<RMatrix> ldlt(ata);
        std::vector<CMatrix> rhs(d, CMatrix::Zero(p, p));
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < d; ++j) rhs[j] += model.codes(i, j) * operators[i].matrix;
        // Solve (A^T A) D = A^T G entrywise across the p x p slots.
        for (Index row = 0; row < p; ++row)
            for (Index col = 0; col < p; ++col) {
                CVector b(d);
                for (Index j = 0; j < d; ++j) b(j) = rhs[j](row, col);
                const CVector sol = ldlt.solve(b.real()).cast<Complex>() +
                                    Complex(0, 1) * ldlt.solve(b.imag()).cast<Complex>();
                for (Index j = 0; j < d; ++j) model.atoms[j](row, col) = sol(j);
            }
        model.errors.push_back(mean_error());
        if (model.errors.size() >= 2 &&
            model.errors[model.errors.size() - 2] - model.errors.back() < 1e-12)
            break;
    }
    return model;
}

std::pair<RVector, CMatrix> linear_dl_short_fit(const LinearDlModel& model,
                                                const TransitionStats& stats) {
    const Index d = static_cast<Index>(model.atoms.size());
    // One-step loss of G(alpha) = sum_j alpha_j D_j is quadratic in alpha:
    //   0.5 a^T Q a - b^T a + const, Q_jk = 2 Re Tr(D_j D_k* S0), b_j = 2 Re Tr(D_j Syx).
    RMatrix q(d, d);
    RVector b(d);
    for (Index j = 0; j < d; ++j) {
        b(j) = 2.0 * (model.atoms[j] * stats.sxy.transpose()).trace().real();
        for (Index k = 0; k < d; ++k)
            q(j, k) = 2.0 * (model.atoms[j] * model.atoms[k].adjoint() * stats.s0).trace().real();
    }
    const RVector alpha =
        simplex_qp(q, b, RVector::Constant(d, 1.0 / static_cast<double>(d)), 500);
    CMatrix g = CMatrix::Zero(model.atoms.front().rows(), model.atoms.front().cols());
    for (Index j = 0; j < d; ++j) g += alpha(j) * model.atoms[j];
    return {alpha, std::move(g)};
}

SpectralDecomposition mean_reconstruction_baseline(const Dictionary& dict,
                                                   const std::vector<Coefficients>& train_coeffs) {
    if (train_coeffs.empty())
        throw InvalidInput("mean_reconstruction_baseline: no training coefficients");
    RVector mean = RVector::Zero(dict.size());
    for (const auto& c : train_coeffs) mean += c.alpha;
    mean /= static_cast<double>(train_coeffs.size());
    Coefficients c;
    c.alpha = mean;
    c.logits = mean.array().max(1e-300).log();
    return decode(c, dict);
}

}  // namespace doodl
