#include "doodl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doodl/eig.hpp"
#include "doodl/errors.hpp"

namespace doodl {

namespace {

void check_shapes(const SpectralDecomposition& sd) {
    if (sd.r < 1 || sd.p < sd.r) throw InvalidShape("spectral: need 1 <= r <= p");
    if (sd.eigvals.size() != sd.r || sd.left.rows() != sd.p || sd.left.cols() != sd.r ||
        sd.right.rows() != sd.p || sd.right.cols() != sd.r)
        throw InvalidShape("spectral: inconsistent field shapes");
}

bool all_finite(const CMatrix& m) {
    return m.allFinite();
}

// Strict-weak order: |lambda| desc, Re desc, Im asc.
bool atom_before(const Complex& a, const Complex& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
}

}  // namespace

double biorthogonality_residual(const SpectralDecomposition& sd) {
    return (sd.left.adjoint() * sd.right - CMatrix::Identity(sd.r, sd.r)).norm();
}

void validate_feasible(const SpectralDecomposition& sd, double tol) {
    check_shapes(sd);
    if (!all_finite(sd.left) || !all_finite(sd.right) || !sd.eigvals.allFinite())
        throw InvalidShape("spectral: non-finite entries");
    if (biorthogonality_residual(sd) > tol)
        throw InfeasibleAggregate("spectral: bi-orthogonality violated");
    for (Index i = 0; i < sd.r; ++i)
        for (Index j = i + 1; j < sd.r; ++j)
            if (std::abs(sd.eigvals(i) - sd.eigvals(j)) <= 1e-12)
                throw DegenerateSpectrum("spectral: repeated eigenvalues");
    for (Index i = 0; i < sd.r; ++i) {
        const double ln = sd.left.col(i).norm(), rn = sd.right.col(i).norm();
        if (ln < 1e-12 || ln > 1e12 || rn < 1e-12 || rn > 1e12)
            throw RankDeficient("spectral: degenerate column scaling");
    }
}

bool is_canonically_sorted(const SpectralDecomposition& sd) {
    for (Index i = 0; i + 1 < sd.r; ++i)
        if (atom_before(sd.eigvals(i + 1), sd.eigvals(i))) return false;
    return true;
}

OperatorMatrix assemble_operator(const SpectralDecomposition& sd) {
    check_shapes(sd);
    OperatorMatrix op;
    op.p = sd.p;
    op.rank_hint = sd.r;
    op.matrix = sd.right * sd.eigvals.asDiagonal() * sd.left.adjoint();
    return op;
}

SpectralDecomposition spectral_decompose(const OperatorMatrix& op, Index r) {
    if (op.matrix.rows() != op.p || op.matrix.cols() != op.p)
        throw InvalidShape("spectral_decompose: operator matrix must be p x p");
    if (r < 1 || r > op.p) throw InvalidShape("spectral_decompose: need 1 <= r <= p");

    Eigen::JacobiSVD<CMatrix> svd(op.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector sigma = svd.singularValues();
    if (sigma(0) <= 1e-14 * std::max<double>(1.0, op.p))
        throw RankDeficient("spectral_decompose: zero operator");

    const CMatrix u = svd.matrixU().leftCols(r) * sigma.head(r).asDiagonal();
    const CMatrix v = svd.matrixV().leftCols(r);  // op ~ u v*
    const CMatrix core = v.adjoint() * u;         // r x r, same nonzero spectrum

    EigDecomposition eg = eig_complex(core);
    for (Index i = 0; i < r; ++i)
        for (Index j = i + 1; j < r; ++j)
            if (std::abs(eg.values(i) - eg.values(j)) < 1e-10)
                throw DegenerateSpectrum("spectral_decompose: eigenvalue gap below 1e-10");

    const CMatrix y_inv_h = eg.vectors.inverse().adjoint();
    SpectralDecomposition sd;
    sd.p = op.p;
    sd.r = r;
    sd.eigvals = eg.values;
    sd.right = u * eg.vectors;
    sd.left = v * y_inv_h;
    // The lift gives <l_i, r_i> = lambda_i; rescale the left columns to 1.
    for (Index i = 0; i < r; ++i) {
        const Complex s = sd.left.col(i).dot(sd.right.col(i));
        if (std::abs(s) < 1e-13)
            throw RankDeficient("spectral_decompose: vanishing spectral mode");
        sd.left.col(i) /= std::conj(s);
    }
    return normalize_gauge(canonical_sort(sd));
}

SpectralDecomposition canonical_sort(const SpectralDecomposition& sd) {
    check_shapes(sd);
    std::vector<Index> order(sd.r);
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return atom_before(sd.eigvals(a), sd.eigvals(b));
    });
    SpectralDecomposition out;
    out.p = sd.p;
    out.r = sd.r;
    out.eigvals.resize(sd.r);
    out.left.resize(sd.p, sd.r);
    out.right.resize(sd.p, sd.r);
    for (Index i = 0; i < sd.r; ++i) {
        out.eigvals(i) = sd.eigvals(order[i]);
        out.left.col(i) = sd.left.col(order[i]);
        out.right.col(i) = sd.right.col(order[i]);
    }
    return out;
}

SpectralDecomposition normalize_gauge(const SpectralDecomposition& sd) {
    check_shapes(sd);
    SpectralDecomposition out = sd;
    for (Index i = 0; i < sd.r; ++i) {
        const double norm = out.right.col(i).norm();
        if (norm < 1e-300) continue;
        Complex phase(1, 0);
        const double thresh = 1e-12 * norm;
        for (Index k = 0; k < sd.p; ++k) {
            const Complex e = out.right(k, i);
            if (std::abs(e) > thresh) {
                phase = e / std::abs(e);
                break;
            }
        }
        // Already canonical within roundoff: leave the column bitwise intact.
        if (std::abs(norm - 1.0) <= 1e-12 && std::abs(phase - Complex(1, 0)) <= 1e-12) continue;
        const Complex z = norm * phase;  // r_i <- r_i / z, l_i <- conj(z) l_i
        out.right.col(i) /= z;
        out.left.col(i) *= std::conj(z);
    }
    return out;
}

}  // namespace doodl
