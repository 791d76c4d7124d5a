#include "doodl/manifold.hpp"

#include <cmath>
#include <limits>

#include "doodl/errors.hpp"

namespace doodl {

namespace {

// Cholesky of a Hermitian positive definite Gram matrix X*X (+ jitter), with a
// condition gate so near-singular bases fail loudly instead of silently.
Eigen::LLT<CMatrix> gram_cholesky(const CMatrix& x, double regularizer, const char* what) {
    CMatrix gram = x.adjoint() * x;
    if (regularizer > 0) gram += regularizer * CMatrix::Identity(x.cols(), x.cols());
    Eigen::LLT<CMatrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw IllConditionedBase(std::string("manifold: Gram Cholesky failed for ") + what);
    const RVector d = llt.matrixLLT().diagonal().real();
    const double dmin = d.minCoeff(), dmax = d.maxCoeff();
    if (!(dmin > 0) || dmin < 1e-14 * dmax)
        throw IllConditionedBase(std::string("manifold: Gram matrix near singular for ") + what);
    return llt;
}

void require_stable(const MetricConfig& cfg) {
    if (cfg.kind != MetricKind::stable)
        throw InvalidInput("manifold: only the stable metric is implemented");
    if (cfg.regularizer < 0 || cfg.regularizer > 1e-6)
        throw InvalidInput("manifold: regularizer out of [0, 1e-6]");
}

}  // namespace

double tangency_residual(const SpectralDecomposition& base, const TangentVector& v) {
    return (v.xi.adjoint() * base.right + base.left.adjoint() * v.zeta).norm();
}

TangentVector project_tangent(const SpectralDecomposition& base, const AmbientTriple& ambient,
                              const MetricConfig& cfg) {
    require_stable(cfg);
    const auto llt_l = gram_cholesky(base.left, cfg.regularizer, "L*L");
    const auto llt_r = gram_cholesky(base.right, cfg.regularizer, "R*R");
    // Constraint defect of the ambient direction; the metric-orthogonal
    // correction splits it evenly between the two factors.
    const CMatrix s = ambient.xi.adjoint() * base.right + base.left.adjoint() * ambient.zeta;
    TangentVector out;
    out.dlambda = ambient.dlambda;
    out.xi = ambient.xi - 0.5 * base.right * llt_r.solve(s.adjoint());
    out.zeta = ambient.zeta - 0.5 * base.left * llt_l.solve(s);
    return out;
}

TangentVector riemannian_gradient(const SpectralDecomposition& base, const AmbientTriple& euclid_grad,
                                  const MetricConfig& cfg) {
    require_stable(cfg);
    AmbientTriple raised;
    raised.dlambda = 2.0 * euclid_grad.dlambda;
    raised.xi = 2.0 * euclid_grad.xi * (base.left.adjoint() * base.left);
    raised.zeta = 2.0 * euclid_grad.zeta * (base.right.adjoint() * base.right);
    return project_tangent(base, raised, cfg);
}

SpectralDecomposition retract(const SpectralDecomposition& base, const TangentVector& v, double step) {
    const CMatrix rt = base.right + step * v.zeta;
    Eigen::JacobiSVD<CMatrix> svd(rt);
    const RVector sig = svd.singularValues();
    if (sig(sig.size() - 1) <= 1e-12 * std::max(sig(0), 1e-300))
        throw StepTooLarge("retract: stepped right factor is rank deficient");
    const CMatrix a = base.left + step * v.xi;
    SpectralDecomposition out = project_feasible(base.eigvals + step * v.dlambda, a, rt);
    return out;
}

double safe_step(const SpectralDecomposition& base, const TangentVector& v) {
    const double zeta_op = v.zeta.size() == 0 ? 0.0 : v.zeta.jacobiSvd().singularValues()(0);
    if (zeta_op == 0.0) return std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<CMatrix> svd(base.right);
    const double sigma_min = svd.singularValues()(base.right.cols() - 1);
    return 0.9 * sigma_min / zeta_op;
}

SpectralDecomposition project_feasible(const CVector& eigvals, const CMatrix& left, const CMatrix& right) {
    const Index p = right.rows(), r = right.cols();
    if (left.rows() != p || left.cols() != r || eigvals.size() != r)
        throw InvalidShape("project_feasible: inconsistent shapes");
    Eigen::JacobiSVD<CMatrix> svd(right, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector sig = svd.singularValues();
    if (sig(r - 1) <= 1e-10)
        throw InfeasibleAggregate("project_feasible: right factor rank deficient");
    // L~ = L + R (R*R)^-1 (I - L*R)*, with R (R*R)^-1 formed from the SVD.
    const CMatrix pinv_h =
        svd.matrixU() * sig.cwiseInverse().asDiagonal() * svd.matrixV().adjoint();  // (R^+)* = U S^-1 V*
    const CMatrix defect = CMatrix::Identity(r, r) - left.adjoint() * right;
    SpectralDecomposition out;
    out.p = p;
    out.r = r;
    out.eigvals = eigvals;
    out.right = right;
    out.left = left + pinv_h * defect.adjoint();
    return out;
}

double metric_inner(const SpectralDecomposition& base, const TangentVector& u, const TangentVector& v,
                    const MetricConfig& cfg) {
    require_stable(cfg);
    const auto llt_l = gram_cholesky(base.left, cfg.regularizer, "L*L");
    const auto llt_r = gram_cholesky(base.right, cfg.regularizer, "R*R");
    const Complex lam = u.dlambda.dot(v.dlambda);
    const Complex txi = llt_l.solve(u.xi.adjoint() * v.xi).trace();
    const Complex tzeta = llt_r.solve(u.zeta.adjoint() * v.zeta).trace();
    return (lam + txi + tzeta).real();
}

}  // namespace doodl
