#pragma once

#include <complex>
#include <random>

#include "doodl/manifold.hpp"
#include "doodl/spectral.hpp"

namespace doodl::testing {

inline CMatrix random_cmatrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    return m;
}

inline CVector random_cvector(std::mt19937_64& rng, Index n) {
    return random_cmatrix(rng, n, 1).col(0);
}

// Well-separated random eigenvalues (pairwise gap >= 0.1).
inline CVector random_eigvals(std::mt19937_64& rng, Index r) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    CVector ev(r);
    for (Index i = 0; i < r; ++i) {
        while (true) {
            const Complex cand(unif(rng), unif(rng));
            bool ok = true;
            for (Index j = 0; j < i; ++j)
                if (std::abs(cand - ev(j)) < 0.1) ok = false;
            if (ok) {
                ev(i) = cand;
                break;
            }
        }
    }
    return ev;
}

// Random feasible decomposition: L is the feasibility projection of a random
// matrix onto {L : L* R = I}, so the pair is exactly bi-orthogonal.
inline SpectralDecomposition random_sd(std::mt19937_64& rng, Index p, Index r) {
    while (true) {
        const CMatrix right = random_cmatrix(rng, p, r);
        Eigen::JacobiSVD<CMatrix> svd(right);
        if (svd.singularValues()(r - 1) < 0.3) continue;  // keep well conditioned
        const CMatrix left0 = random_cmatrix(rng, p, r);
        SpectralDecomposition sd = project_feasible(random_eigvals(rng, r), left0, right);
        if (sd.left.colwise().norm().maxCoeff() < 20.0) return sd;
    }
}

// Random tangent vector at base (projection of a random ambient direction).
inline TangentVector random_tangent(std::mt19937_64& rng, const SpectralDecomposition& base) {
    AmbientTriple amb;
    amb.dlambda = random_cvector(rng, base.r);
    amb.xi = random_cmatrix(rng, base.p, base.r);
    amb.zeta = random_cmatrix(rng, base.p, base.r);
    return project_tangent(base, amb);
}

// Centered finite difference of f along an ambient direction, treating the
// decomposition slots as flat complex coordinates.
template <typename F>
double ambient_directional_fd(const F& f, const SpectralDecomposition& base, const CVector& dlam,
                              const CMatrix& dxi, const CMatrix& dzeta, double h = 1e-6) {
    auto shifted = [&](double s) {
        SpectralDecomposition sd = base;
        sd.eigvals += s * dlam;
        sd.left += s * dxi;
        sd.right += s * dzeta;
        return sd;
    };
    return (f(shifted(h)) - f(shifted(-h))) / (2.0 * h);
}

// Df[v] under the Wirtinger convention: 2 Re <g, v>.
inline double pairing(const AmbientTriple& g, const CVector& dlam, const CMatrix& dxi,
                      const CMatrix& dzeta) {
    Complex acc = g.dlambda.dot(dlam);
    acc += (g.xi.conjugate().array() * dxi.array()).sum();
    acc += (g.zeta.conjugate().array() * dzeta.array()).sum();
    return 2.0 * acc.real();
}

inline double rel_err(double got, double want, double floor = 1e-8) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor});
}

// Independent constrained-least-squares oracle for the feasibility projection:
// parametrize all feasible left factors through the nullspace of R* and
// minimize ||L~ - L||_F in that affine coordinate system.
inline CMatrix project_feasible_oracle(const CMatrix& left, const CMatrix& right) {
    const Index p = right.rows(), r = right.cols();
    Eigen::JacobiSVD<CMatrix> svd(right, Eigen::ComputeFullU | Eigen::ComputeThinV);
    const CMatrix u = svd.matrixU();
    const CMatrix l0 = u.leftCols(r) * svd.singularValues().cwiseInverse().asDiagonal() *
                       svd.matrixV().adjoint();  // L0* R = I
    const CMatrix nullspace = u.rightCols(p - r);
    return l0 + nullspace * (nullspace.adjoint() * (left - l0));
}

// Random real rank-r matrix with distinct real eigenvalues and its exact
// spectral factors (A = V diag(lam) W^T, W^T V = I).
inline RMatrix random_real_lowrank(std::mt19937_64& rng, Index p, Index r, RVector* eigs = nullptr) {
    std::uniform_real_distribution<double> unif(0.3, 0.9);
    while (true) {
        RMatrix v(p, r);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Index i = 0; i < p; ++i)
            for (Index j = 0; j < r; ++j) v(i, j) = gauss(rng);
        Eigen::JacobiSVD<RMatrix> svd(v);
        if (svd.singularValues()(r - 1) < 0.3) continue;
        RVector lam(r);
        for (Index i = 0; i < r; ++i) {
            double cand;
            while (true) {
                cand = unif(rng) * ((i % 2) ? -1.0 : 1.0);
                bool ok = true;
                for (Index j = 0; j < i; ++j)
                    if (std::abs(cand - lam(j)) < 0.05) ok = false;
                if (ok) break;
            }
            lam(i) = cand;
        }
        const RMatrix w = v * (v.transpose() * v).inverse();
        if (eigs) *eigs = lam;
        return v * lam.asDiagonal() * w.transpose();
    }
}

}  // namespace doodl::testing
