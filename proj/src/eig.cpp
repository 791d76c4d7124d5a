#include "doodl/eig.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "doodl/errors.hpp"

namespace doodl {

namespace {

// Reduce a to upper Hessenberg form h = q* a q, accumulating the unitary q.
void hessenberg(CMatrix& h, CMatrix& q) {
    const Index n = h.rows();
    q = CMatrix::Identity(n, n);
    for (Index k = 0; k + 2 < n; ++k) {
        CVector x = h.col(k).segment(k + 1, n - k - 1);
        const double xnorm = x.norm();
        if (xnorm == 0.0) continue;
        // Householder vector v with phase chosen to avoid cancellation.
        Complex alpha = x(0);
        const double aabs = std::abs(alpha);
        Complex phase = (aabs == 0.0) ? Complex(1, 0) : alpha / aabs;
        CVector v = x;
        v(0) += phase * xnorm;
        const double vnorm = v.norm();
        if (vnorm == 0.0) continue;
        v /= vnorm;
        // h <- P h P with P = I - 2 v v* acting on the trailing block.
        auto rows = Eigen::seq(k + 1, n - 1);
        h(rows, Eigen::all) -= 2.0 * v * (v.adjoint() * h(rows, Eigen::all));
        h(Eigen::all, rows) -= 2.0 * (h(Eigen::all, rows) * v) * v.adjoint();
        q(Eigen::all, rows) -= 2.0 * (q(Eigen::all, rows) * v) * v.adjoint();
    }
    // Clean the strictly-lower part below the first subdiagonal.
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 2; i < n; ++i) h(i, j) = Complex(0, 0);
}

// Eigenvalue of the trailing 2x2 of h(0..hi, 0..hi) closest to h(hi,hi).
Complex wilkinson_shift(const CMatrix& h, Index hi) {
    const Complex a = h(hi - 1, hi - 1), b = h(hi - 1, hi);
    const Complex c = h(hi, hi - 1), d = h(hi, hi);
    const Complex tr = a + d;
    const Complex det = a * d - b * c;
    Complex disc = std::sqrt(tr * tr - 4.0 * det);
    Complex mu1 = 0.5 * (tr + disc), mu2 = 0.5 * (tr - disc);
    return (std::abs(mu1 - d) < std::abs(mu2 - d)) ? mu1 : mu2;
}

struct Givens {
    Complex c;  // real in exact arithmetic after normalization below
    Complex s;
};

// Rotation G with G* [f; g] = [r; 0].
Givens make_givens(Complex f, Complex g) {
    const double norm = std::sqrt(std::norm(f) + std::norm(g));
    if (norm == 0.0) return {Complex(1, 0), Complex(0, 0)};
    return {f / norm, g / norm};
}

}  // namespace

EigDecomposition eig_complex(const CMatrix& a, int max_sweeps_per_eigenvalue) {
    if (a.rows() != a.cols()) throw InvalidShape("eig_complex: matrix must be square");
    const Index n = a.rows();
    if (n == 0) throw InvalidShape("eig_complex: empty matrix");

    CMatrix t = a;
    CMatrix z;
    hessenberg(t, z);

    const double scale = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
    const double eps = std::numeric_limits<double>::epsilon();

    Index hi = n - 1;
    int stall = 0;
    long budget = static_cast<long>(max_sweeps_per_eigenvalue) * n + 16;
    while (hi > 0) {
        if (--budget < 0)
            throw DegenerateSpectrum("eig_complex: QR iteration did not converge");
        // Deflate any negligible subdiagonal inside the active block.
        Index lo = hi;
        while (lo > 0) {
            const double sub = std::abs(t(lo, lo - 1));
            const double diag = std::abs(t(lo - 1, lo - 1)) + std::abs(t(lo, lo));
            if (sub <= eps * std::max(diag, scale)) {
                t(lo, lo - 1) = Complex(0, 0);
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            stall = 0;
            continue;
        }

        Complex mu = wilkinson_shift(t, hi);
        ++stall;
        if (stall % 12 == 0) {
            // Exceptional shift to break symmetric-cycle stalls.
            mu = t(hi, hi) + Complex(1.1 * std::abs(t(hi, hi - 1)), 0.3 * scale * eps * stall);
        }

        // One explicit shifted QR sweep on the active block [lo, hi]:
        // t - mu I = Q R via Givens, then t <- R Q + mu I, z <- z Q.
        for (Index k = lo; k <= hi; ++k) t(k, k) -= mu;
        std::vector<Givens> rot(hi - lo);
        for (Index k = lo; k < hi; ++k) {
            Givens g = make_givens(t(k, k), t(k + 1, k));
            rot[k - lo] = g;
            for (Index j = k; j < n; ++j) {
                const Complex t1 = t(k, j), t2 = t(k + 1, j);
                t(k, j) = std::conj(g.c) * t1 + std::conj(g.s) * t2;
                t(k + 1, j) = -g.s * t1 + g.c * t2;
            }
            t(k + 1, k) = Complex(0, 0);
        }
        for (Index k = lo; k < hi; ++k) {
            const Givens g = rot[k - lo];
            const Index top = std::min(k + 1, hi);
            for (Index i = 0; i <= top; ++i) {
                const Complex t1 = t(i, k), t2 = t(i, k + 1);
                t(i, k) = t1 * g.c + t2 * g.s;
                t(i, k + 1) = -t1 * std::conj(g.s) + t2 * std::conj(g.c);
            }
            for (Index i = 0; i < n; ++i) {
                const Complex z1 = z(i, k), z2 = z(i, k + 1);
                z(i, k) = z1 * g.c + z2 * g.s;
                z(i, k + 1) = -z1 * std::conj(g.s) + z2 * std::conj(g.c);
            }
        }
        for (Index k = lo; k <= hi; ++k) t(k, k) += mu;
    }

    // t is now the (upper triangular) Schur factor, a = z t z*.
    CVector values(n);
    for (Index i = 0; i < n; ++i) values(i) = t(i, i);

    // Back-substitution for the eigenvectors of t: (t - lambda_i) y = 0.
    const double tnorm = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
    CMatrix y = CMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        y(i, i) = Complex(1, 0);
        for (Index k = i - 1; k >= 0; --k) {
            Complex acc(0, 0);
            for (Index j = k + 1; j <= i; ++j) acc += t(k, j) * y(j, i);
            Complex denom = t(k, k) - values(i);
            if (std::abs(denom) < eps * tnorm) denom = Complex(eps * tnorm, 0);
            y(k, i) = -acc / denom;
        }
    }

    CMatrix vectors = z * y;
    for (Index i = 0; i < n; ++i) {
        const double vn = vectors.col(i).norm();
        if (vn > 0) vectors.col(i) /= vn;
    }
    return {std::move(values), std::move(vectors)};
}

}  // namespace doodl
