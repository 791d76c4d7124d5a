#include "doodl/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doodl/errors.hpp"
#include "doodl/kmedoids.hpp"

namespace doodl {

namespace {

RVector softmax(const RVector& logits) {
    const double m = logits.maxCoeff();
    RVector e = (logits.array() - m).exp();
    return e / e.sum();
}

void check_alpha(const RVector& alpha) {
    if (alpha.minCoeff() < -1e-12 || std::abs(alpha.sum() - 1.0) > 1e-12)
        throw InvalidInput("dictionary: coefficients must lie on the simplex");
}

// Aggregates (sum_j alpha_j Lambda_j, sum_j alpha_j L_j, sum_j alpha_j R_j).
void aggregate(const RVector& alpha, const Dictionary& dict, CVector& lam, CMatrix& l, CMatrix& r) {
    const Index p = dict.p(), rr = dict.r();
    lam = CVector::Zero(rr);
    l = CMatrix::Zero(p, rr);
    r = CMatrix::Zero(p, rr);
    for (Index j = 0; j < dict.size(); ++j) {
        lam += alpha(j) * dict.atoms[j].eigvals;
        l += alpha(j) * dict.atoms[j].left;
        r += alpha(j) * dict.atoms[j].right;
    }
}

struct AdamState {
    RVector m, v;
    int t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit AdamState(Index n) : m(RVector::Zero(n)), v(RVector::Zero(n)) {}

    RVector step(const RVector& grad, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const RVector mhat = m / (1.0 - std::pow(beta1, t));
        const RVector vhat = v / (1.0 - std::pow(beta2, t));
        return (-lr * mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    }
};

// Inner optimizer shared by the coefficient fit and the short-trajectory
// estimator. `eval` returns (loss, dloss/dlogits) and may throw
// InfeasibleAggregate; the step backs off by halving toward the previous
// iterate, failing after 20 halvings. Best iterate is returned.
template <typename Eval>
FitResult optimize_logits(RVector logits, int iters, double lr, double grad_tol, Eval&& eval) {
    AdamState adam(logits.size());
    RVector grad(logits.size());
    double loss = 0.0;
    auto evaluate = [&](const RVector& lg, double& out_loss, RVector& out_grad) {
        out_loss = eval(lg, out_grad);
    };
    try {
        evaluate(logits, loss, grad);
    } catch (const InfeasibleAggregate&) {
        throw CoefficientFitFailed("dictionary: infeasible at initialization");
    }
    RVector best_logits = logits;
    double best_loss = loss;

    for (int it = 0; it < iters; ++it) {
        if (grad.norm() <= grad_tol) break;
        const RVector delta = adam.step(grad, lr);
        RVector proposal = logits + delta;
        int halvings = 0;
        while (true) {
            try {
                evaluate(proposal, loss, grad);
                break;
            } catch (const InfeasibleAggregate&) {
                if (++halvings > 20)
                    throw CoefficientFitFailed("dictionary: no feasible iterate after 20 halvings");
                proposal = logits + 0.5 * (proposal - logits);
            }
        }
        logits = proposal;
        if (loss < best_loss) {
            best_loss = loss;
            best_logits = logits;
        }
    }
    FitResult out;
    out.coeffs = coefficients_from_logits(best_logits);
    out.loss = best_loss;
    return out;
}

}  // namespace

Coefficients coefficients_from_logits(const RVector& logits) {
    Coefficients c;
    c.logits = logits;
    c.alpha = softmax(logits);
    return c;
}

void validate_dictionary(const Dictionary& dict) {
    if (dict.size() < 2) throw InvalidInput("dictionary: need at least 2 atoms");
    const Index p = dict.p(), r = dict.r();
    for (const auto& a : dict.atoms) {
        if (a.p != p || a.r != r) throw InvalidShape("dictionary: atoms must share (p, r)");
        validate_feasible(a);
    }
}

SpectralDecomposition decode(const Coefficients& coeffs, const Dictionary& dict) {
    if (coeffs.alpha.size() != dict.size())
        throw InvalidShape("decode: coefficient length != dictionary size");
    check_alpha(coeffs.alpha);
    CVector lam;
    CMatrix l, r;
    aggregate(coeffs.alpha, dict, lam, l, r);
    return project_feasible(lam, l, r);
}

DecodeAdjoint decode_adjoint(const Coefficients& coeffs, const Dictionary& dict,
                             const AmbientTriple& cost_grad) {
    CVector lam;
    CMatrix lhat, rhat;
    aggregate(coeffs.alpha, dict, lam, lhat, rhat);

    const Index r = dict.r();
    Eigen::LLT<CMatrix> llt(CMatrix(rhat.adjoint() * rhat));
    if (llt.info() != Eigen::Success)
        throw InfeasibleAggregate("decode_adjoint: aggregated right factor rank deficient");

    // Through the closed-form projection L~ = Lhat + Rhat K, K = W (I - Rhat* Lhat):
    //   dL~ = Pi dLhat               with Pi = I - Rhat W Rhat*   (so  gLhat = Pi gL)
    //   gRhat = gR + Pi gL K* - L~ gL* Rhat W
    const CMatrix w = llt.solve(CMatrix::Identity(r, r));
    const CMatrix k = w * (CMatrix::Identity(r, r) - rhat.adjoint() * lhat);
    const CMatrix ltilde = lhat + rhat * k;
    const CMatrix pi_gl = cost_grad.xi - rhat * (w * (rhat.adjoint() * cost_grad.xi));

    DecodeAdjoint adj;
    adj.aggregate.dlambda = cost_grad.dlambda;
    adj.aggregate.xi = pi_gl;
    adj.aggregate.zeta =
        cost_grad.zeta + pi_gl * k.adjoint() - ltilde * ((cost_grad.xi.adjoint() * rhat) * w);

    adj.dcost_dalpha.resize(dict.size());
    for (Index j = 0; j < dict.size(); ++j) {
        const auto& atom = dict.atoms[j];
        Complex acc = adj.aggregate.dlambda.dot(atom.eigvals);
        acc += (adj.aggregate.xi.conjugate().array() * atom.left.array()).sum();
        acc += (adj.aggregate.zeta.conjugate().array() * atom.right.array()).sum();
        adj.dcost_dalpha(j) = 2.0 * acc.real();
    }
    return adj;
}

RVector decode_grad_chain(const Coefficients& coeffs, const Dictionary& dict,
                          const AmbientTriple& cost_grad) {
    const DecodeAdjoint adj = decode_adjoint(coeffs, dict, cost_grad);
    // Softmax Jacobian: dlogit_m = alpha_m (dalpha_m - <dalpha, alpha>).
    const double mean = adj.dcost_dalpha.dot(coeffs.alpha);
    return coeffs.alpha.array() * (adj.dcost_dalpha.array() - mean);
}

std::vector<FitResult> fit_coefficients(const std::vector<SpectralDecomposition>& targets,
                                        const Dictionary& dict, const TrainConfig& cfg) {
    validate_dictionary(dict);
    std::vector<FitResult> out;
    out.reserve(targets.size());
    for (const auto& target : targets) {
        if (target.p != dict.p() || target.r != dict.r())
            throw InvalidShape("fit_coefficients: target shape != dictionary shape");
        const SpectralMeasure target_measure = to_measure_unsorted(target);

        RVector logits(dict.size());
        for (Index j = 0; j < dict.size(); ++j)
            logits(j) = -sgot_divergence(target, dict.atoms[j], dict.cfg);

        auto eval = [&](const RVector& lg, RVector& grad) -> double {
            const Coefficients c = coefficients_from_logits(lg);
            const SpectralDecomposition sd = decode(c, dict);
            auto [plan, cost] = solve_transport(to_measure_unsorted(sd), target_measure, dict.cfg);
            const AmbientTriple g = grad_sgot_fixed_plan(sd, target_measure, plan, dict.cfg);
            grad = decode_grad_chain(c, dict, g);
            return cost;
        };
        out.push_back(optimize_logits(logits, cfg.coeff_iters, cfg.coeff_lr, 0.0, eval));
    }
    return out;
}

Dictionary train_dictionary(const std::vector<SpectralDecomposition>& operators, Index d,
                            const TrainConfig& cfg, const SgotConfig& sgot, TrainingLog* log) {
    const Index n = static_cast<Index>(operators.size());
    if (n < d) throw InvalidInput("train_dictionary: need at least d training operators");
    if (d < 2) throw InvalidInput("train_dictionary: need d >= 2");
    for (const auto& op : operators)
        if (op.p != operators.front().p || op.r != operators.front().r)
            throw InvalidShape("train_dictionary: operators must share (p, r)");

    // K-medoids initialization under d_S: atoms start as data points.
    RMatrix dist = RMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            dist(i, j) = dist(j, i) = sgot_divergence(operators[i], operators[j], sgot);
    const std::vector<Index> medoids = k_medoids(dist, d);

    Dictionary dict;
    dict.cfg = sgot;
    for (Index m : medoids) dict.atoms.push_back(operators[m]);
    if (log) {
        log->init_loss = k_medoids_objective(dist, medoids);
        log->batch_losses.clear();
        log->epoch_mean_losses.clear();
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index(0));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss_sum = 0.0;
        Index epoch_batches = 0;
        for (Index start = 0; start < n; start += cfg.batch_size) {
            const Index bsz = std::min<Index>(cfg.batch_size, n - start);
            std::vector<SpectralDecomposition> batch;
            batch.reserve(bsz);
            for (Index b = 0; b < bsz; ++b) batch.push_back(operators[order[start + b]]);

            const std::vector<FitResult> fits = fit_coefficients(batch, dict, cfg);

            // Envelope gradient: codes and transport plans held fixed.
            std::vector<AmbientTriple> atom_grad(d);
            for (Index k = 0; k < d; ++k) {
                atom_grad[k].dlambda = CVector::Zero(dict.r());
                atom_grad[k].xi = CMatrix::Zero(dict.p(), dict.r());
                atom_grad[k].zeta = CMatrix::Zero(dict.p(), dict.r());
            }
            double batch_loss = 0.0;
            for (Index b = 0; b < bsz; ++b) {
                const SpectralMeasure tm = to_measure_unsorted(batch[b]);
                const SpectralDecomposition sd = decode(fits[b].coeffs, dict);
                auto [plan, cost] = solve_transport(to_measure_unsorted(sd), tm, sgot);
                batch_loss += cost;
                const AmbientTriple g = grad_sgot_fixed_plan(sd, tm, plan, sgot);
                const DecodeAdjoint adj = decode_adjoint(fits[b].coeffs, dict, g);
                for (Index k = 0; k < d; ++k) {
                    const double a = fits[b].coeffs.alpha(k);
                    atom_grad[k].dlambda += a * adj.aggregate.dlambda;
                    atom_grad[k].xi += a * adj.aggregate.xi;
                    atom_grad[k].zeta += a * adj.aggregate.zeta;
                }
            }
            batch_loss /= static_cast<double>(bsz);
            if (log) log->batch_losses.push_back(batch_loss);
            epoch_loss_sum += batch_loss;
            ++epoch_batches;

            for (Index k = 0; k < d; ++k) {
                atom_grad[k].dlambda /= static_cast<double>(bsz);
                atom_grad[k].xi /= static_cast<double>(bsz);
                atom_grad[k].zeta /= static_cast<double>(bsz);
                TangentVector rg = riemannian_gradient(dict.atoms[k], atom_grad[k]);
                TangentVector dir{-rg.dlambda, -rg.xi, -rg.zeta};
                const double norm2 = rg.dlambda.squaredNorm() + rg.xi.squaredNorm() + rg.zeta.squaredNorm();
                if (norm2 == 0.0) continue;
                double step = std::min(cfg.dict_lr, safe_step(dict.atoms[k], dir));
                bool applied = false;
                for (int attempt = 0; attempt < 10 && !applied; ++attempt) {
                    try {
                        dict.atoms[k] = retract(dict.atoms[k], dir, step);
                        applied = true;
                    } catch (const StepTooLarge&) {
                        step *= 0.5;
                    }
                }
                // After 10 failed halvings the atom update is skipped.
            }
        }
        if (log) log->epoch_mean_losses.push_back(epoch_loss_sum / static_cast<double>(epoch_batches));
    }
    return dict;
}

double one_step_loss(const TransitionStats& stats, const SpectralDecomposition& sd) {
    if (stats.p != sd.p) throw InvalidShape("one_step_loss: feature dimension mismatch");
    if (stats.n < 1) throw InsufficientData("one_step_loss: no transitions");
    // loss = c0 - 2 Re Tr(G Syx) + Tr(G G* S0), G = R D L*, Syx = sxy^T.
    const CMatrix a = sd.left.adjoint() * stats.sxy.transpose();  // r x p
    const Complex t1 = (sd.eigvals.array() * (a * sd.right).diagonal().array()).sum();
    const CMatrix c1 = sd.left.adjoint() * sd.left;
    const CMatrix c2 = sd.right.adjoint() * stats.s0 * sd.right;
    const Complex t2 =
        (sd.eigvals.asDiagonal() * c1 * sd.eigvals.conjugate().asDiagonal() * c2).trace();
    return stats.c0 - 2.0 * t1.real() + t2.real();
}

AmbientTriple one_step_loss_grad(const TransitionStats& stats, const SpectralDecomposition& sd) {
    if (stats.p != sd.p) throw InvalidShape("one_step_loss_grad: feature dimension mismatch");
    const CMatrix g = sd.right * sd.eigvals.asDiagonal() * sd.left.adjoint();
    const CMatrix gg = stats.s0 * g - stats.sxy;  // d loss / d (conj G)
    AmbientTriple out;
    out.xi = gg.adjoint() * sd.right * sd.eigvals.asDiagonal();
    out.zeta = gg * sd.left * sd.eigvals.conjugate().asDiagonal();
    out.dlambda = (sd.right.adjoint() * gg * sd.left).diagonal();
    return out;
}

ShortTrajectoryEstimate estimate_short_trajectory(const FeatureSeries& features,
                                                  const Dictionary& dict, const TrainConfig& cfg) {
    validate_dictionary(dict);
    if (features.samples.rows() < 2)
        throw InsufficientData("estimate_short_trajectory: need at least 2 feature samples");
    if (features.samples.cols() != dict.p())
        throw InvalidShape("estimate_short_trajectory: feature dimension != dictionary p");
    const TransitionStats stats = make_transition_stats(features);

    auto eval = [&](const RVector& lg, RVector& grad) -> double {
        const Coefficients c = coefficients_from_logits(lg);
        const SpectralDecomposition sd = decode(c, dict);
        const AmbientTriple g = one_step_loss_grad(stats, sd);
        grad = decode_grad_chain(c, dict, g);
        return one_step_loss(stats, sd);
    };
    const FitResult fit =
        optimize_logits(RVector::Zero(dict.size()), cfg.coeff_iters, cfg.coeff_lr, 1e-6, eval);

    ShortTrajectoryEstimate out;
    out.coeffs = fit.coeffs;
    out.loss = fit.loss;
    out.decoded = decode(fit.coeffs, dict);
    return out;
}

std::vector<std::pair<Index, Coefficients>> rolling_coefficients(const FeatureSeries& features,
                                                                 const Dictionary& dict, Index window,
                                                                 Index stride, const TrainConfig& cfg) {
    if (window < 2) throw InvalidInput("rolling_coefficients: window must be >= 2");
    if (stride < 1) throw InvalidInput("rolling_coefficients: stride must be >= 1");
    const Index rows = features.samples.rows();
    std::vector<std::pair<Index, Coefficients>> out;
    for (Index start = 0; start + window <= rows; start += stride) {
        FeatureSeries slice;
        slice.samples = features.samples.middleRows(start, window);
        slice.dt = features.dt;
        out.emplace_back(start, estimate_short_trajectory(slice, dict, cfg).coeffs);
    }
    return out;
}

}  // namespace doodl
