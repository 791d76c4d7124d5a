#include <random>

#include "doctest.h"
#include "doodl/errors.hpp"
#include "doodl/serialize.hpp"
#include "doodl/spectral.hpp"
#include "test_utils.hpp"

using namespace doodl;
namespace dt = doodl::testing;

namespace {

SpectralDecomposition canonical(const SpectralDecomposition& sd) {
    return normalize_gauge(canonical_sort(sd));
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("assemble: rank-1 identity projector") {
    SpectralDecomposition sd;
    sd.p = 3;
    sd.r = 1;
    sd.eigvals = CVector::Constant(1, Complex(1, 0));
    sd.left = CMatrix::Zero(3, 1);
    sd.right = CMatrix::Zero(3, 1);
    sd.left(0, 0) = sd.right(0, 0) = Complex(1, 0);
    const OperatorMatrix op = assemble_operator(sd);
    CMatrix want = CMatrix::Zero(3, 3);
    want(0, 0) = Complex(1, 0);
    CHECK((op.matrix - want).norm() < 1e-15);
}

TEST_CASE("assemble: zero eigenvalues give the zero matrix") {
    std::mt19937_64 rng(1);
    SpectralDecomposition sd = dt::random_sd(rng, 5, 2);
    sd.eigvals.setZero();
    CHECK(assemble_operator(sd).matrix.norm() < 1e-12);
}

TEST_CASE("assemble: eigenvalues match a dense eigensolver oracle") {
    std::mt19937_64 rng(2);
    const SpectralDecomposition sd = dt::random_sd(rng, 6, 3);
    const OperatorMatrix op = assemble_operator(sd);
    Eigen::ComplexEigenSolver<CMatrix> oracle(op.matrix);
    for (Index i = 0; i < sd.r; ++i) {
        double best = 1e18;
        for (Index j = 0; j < 6; ++j)
            best = std::min(best, std::abs(oracle.eigenvalues()(j) - sd.eigvals(i)));
        CHECK(best < 1e-8);
    }
}

TEST_CASE("decompose: diagonal matrix, truncation to leading modes") {
    OperatorMatrix op;
    op.p = 4;
    op.rank_hint = 2;
    op.matrix = CMatrix::Zero(4, 4);
    op.matrix(0, 0) = 3;
    op.matrix(1, 1) = 2;
    op.matrix(2, 2) = 1;
    const SpectralDecomposition sd = spectral_decompose(op, 2);
    CHECK(std::abs(sd.eigvals(0) - Complex(3, 0)) < 1e-12);
    CHECK(std::abs(sd.eigvals(1) - Complex(2, 0)) < 1e-12);
    // Gauge-normalized columns are exactly the basis vectors.
    CHECK((sd.right.col(0) - CVector::Unit(4, 0)).norm() < 1e-10);
    CHECK((sd.right.col(1) - CVector::Unit(4, 1)).norm() < 1e-10);
    CHECK((sd.left.col(0) - CVector::Unit(4, 0)).norm() < 1e-10);
    CHECK((sd.left.col(1) - CVector::Unit(4, 1)).norm() < 1e-10);
}

TEST_CASE("decompose: rotation matrix eigenvalues are +-i") {
    OperatorMatrix op;
    op.p = 2;
    op.rank_hint = 2;
    op.matrix = CMatrix::Zero(2, 2);
    op.matrix(0, 1) = Complex(-1, 0);
    op.matrix(1, 0) = Complex(1, 0);
    const SpectralDecomposition sd = spectral_decompose(op, 2);
    // Canonical tie-break on equal modulus and real part: Im ascending.
    CHECK(std::abs(sd.eigvals(0) - Complex(0, -1)) < 1e-12);
    CHECK(std::abs(sd.eigvals(1) - Complex(0, 1)) < 1e-12);
}

TEST_CASE("decompose: round trip over random feasible decompositions") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Index p = 4 + static_cast<Index>(trial % 5);
        const Index r = 1 + static_cast<Index>(trial % 3);
        const SpectralDecomposition sd = dt::random_sd(rng, p, r);
        const OperatorMatrix op = assemble_operator(sd);
        const SpectralDecomposition back = spectral_decompose(op, r);

        const SpectralDecomposition a = canonical(sd);
        CHECK(biorthogonality_residual(back) < 1e-8);
        // Eigenvalues recovered exactly (canonical order on both sides).
        for (Index i = 0; i < r; ++i) CHECK(std::abs(a.eigvals(i) - back.eigvals(i)) < 1e-8);
        // Projectors r_i l_i* recovered.
        for (Index i = 0; i < r; ++i) {
            const CMatrix pa = a.right.col(i) * a.left.col(i).adjoint();
            const CMatrix pb = back.right.col(i) * back.left.col(i).adjoint();
            CHECK((pa - pb).norm() < 1e-8);
        }
        // Assembled matrices agree.
        CHECK((assemble_operator(back).matrix - op.matrix).norm() <
              1e-7 * std::max(1.0, op.matrix.norm()));
    }
}

TEST_CASE("decompose: zero operator is rank deficient") {
    OperatorMatrix op;
    op.p = 3;
    op.rank_hint = 1;
    op.matrix = CMatrix::Zero(3, 3);
    CHECK_THROWS_AS(spectral_decompose(op, 1), RankDeficient);
}

TEST_CASE("decompose: near-repeated spectrum is degenerate") {
    SpectralDecomposition sd;
    std::mt19937_64 rng(4);
    sd = dt::random_sd(rng, 5, 2);
    sd.eigvals(0) = Complex(0.7, 0.2);
    sd.eigvals(1) = sd.eigvals(0) + Complex(1e-12, 0);
    const OperatorMatrix op = assemble_operator(sd);
    CHECK_THROWS_AS(spectral_decompose(op, 2), DegenerateSpectrum);
}

TEST_CASE("canonical_sort: modulus descending with tie rules") {
    SpectralDecomposition sd;
    std::mt19937_64 rng(5);
    sd = dt::random_sd(rng, 4, 2);
    sd.eigvals(0) = Complex(1, 0);
    sd.eigvals(1) = Complex(2, 0);
    const SpectralDecomposition sorted = canonical_sort(sd);
    CHECK(sorted.eigvals(0) == Complex(2, 0));
    CHECK(sorted.eigvals(1) == Complex(1, 0));
    CHECK((sorted.right.col(0) - sd.right.col(1)).norm() == 0.0);
    CHECK((sorted.left.col(1) - sd.left.col(0)).norm() == 0.0);

    // Equal modulus and real part: imaginary ascending.
    sd.eigvals(0) = Complex(-1, 1);
    sd.eigvals(1) = Complex(-1, -1);
    const SpectralDecomposition tie = canonical_sort(sd);
    CHECK(tie.eigvals(0) == Complex(-1, -1));
    CHECK(tie.eigvals(1) == Complex(-1, 1));

    // Idempotence.
    const SpectralDecomposition twice = canonical_sort(tie);
    CHECK((twice.eigvals - tie.eigvals).norm() == 0.0);
    CHECK((twice.right - tie.right).norm() == 0.0);
}

TEST_CASE("canonical_sort preserves the eigen-triplet multiset") {
    std::mt19937_64 rng(6);
    const SpectralDecomposition sd = dt::random_sd(rng, 6, 3);
    const SpectralDecomposition sorted = canonical_sort(sd);
    for (Index i = 0; i < 3; ++i) {
        bool found = false;
        for (Index j = 0; j < 3; ++j)
            if (sd.eigvals(i) == sorted.eigvals(j) &&
                (sd.right.col(i) - sorted.right.col(j)).norm() == 0)
                found = true;
        CHECK(found);
    }
}

TEST_CASE("normalize_gauge: orbit invariance and idempotence") {
    std::mt19937_64 rng(7);
    SpectralDecomposition sd = dt::random_sd(rng, 5, 2);

    SpectralDecomposition scaled = sd;
    const Complex z(0, 2);  // r_1 scaled by 2i, l_1 by the dual factor
    scaled.right.col(0) /= z;
    scaled.left.col(0) *= std::conj(z);
    const SpectralDecomposition a = normalize_gauge(sd);
    const SpectralDecomposition b = normalize_gauge(scaled);
    CHECK((a.left - b.left).norm() < 1e-12);
    CHECK((a.right - b.right).norm() < 1e-12);

    const SpectralDecomposition again = normalize_gauge(a);
    CHECK((again.left - a.left).norm() == 0.0);
    CHECK((again.right - a.right).norm() == 0.0);

    // Assembly unchanged.
    CHECK((assemble_operator(a).matrix - assemble_operator(sd).matrix).norm() < 1e-10);
    // Unit columns with a consistent left rescale.
    for (Index i = 0; i < 2; ++i) {
        CHECK(std::abs(a.right.col(i).norm() - 1.0) < 1e-12);
        CHECK(std::abs(a.left.col(i).dot(a.right.col(i)) - Complex(1, 0)) < 1e-10);
    }
}

TEST_CASE("assemble is gauge invariant") {
    std::mt19937_64 rng(8);
    const SpectralDecomposition sd = dt::random_sd(rng, 6, 3);
    const CMatrix base = assemble_operator(sd).matrix;
    std::uniform_real_distribution<double> unif(0.2, 3.0);
    for (int k = 0; k < 10; ++k) {
        SpectralDecomposition t = sd;
        for (Index i = 0; i < sd.r; ++i) {
            const Complex z = std::polar(unif(rng), unif(rng));
            t.right.col(i) /= z;
            t.left.col(i) *= std::conj(z);
        }
        CHECK((assemble_operator(t).matrix - base).norm() < 1e-12 * std::max(1.0, base.norm()));
    }
}

TEST_CASE("full round trip with canonicalization") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const SpectralDecomposition sd = dt::random_sd(rng, 7, 3);
        const SpectralDecomposition via = canonical(spectral_decompose(assemble_operator(sd), sd.r));
        const SpectralDecomposition direct = canonical(sd);
        CHECK((assemble_operator(via).matrix - assemble_operator(direct).matrix).norm() < 1e-7);
        for (Index i = 0; i < sd.r; ++i)
            CHECK(std::abs(std::abs(via.eigvals(i)) - std::abs(direct.eigvals(i))) < 1e-7);
    }
}

TEST_CASE("validation rejects broken invariants") {
    std::mt19937_64 rng(10);
    SpectralDecomposition sd = dt::random_sd(rng, 5, 2);
    CHECK_NOTHROW(validate_feasible(sd));

    SpectralDecomposition bad = sd;
    bad.left.col(0) *= 3.0;  // breaks bi-orthogonality
    CHECK_THROWS_AS(validate_feasible(bad), InfeasibleAggregate);

    bad = sd;
    bad.eigvals(1) = bad.eigvals(0);
    CHECK_THROWS_AS(validate_feasible(bad), DegenerateSpectrum);

    bad = sd;
    bad.right.resize(5, 1);
    CHECK_THROWS_AS(validate_feasible(bad), InvalidShape);
}

TEST_CASE("json round trip is bit exact") {
    std::mt19937_64 rng(11);
    const SpectralDecomposition sd = dt::random_sd(rng, 5, 3);
    const Json j = sd_to_json(sd);
    const std::string text = j.dump();
    const SpectralDecomposition back = sd_from_json(Json::parse(text));
    CHECK((back.eigvals - sd.eigvals).norm() == 0.0);
    CHECK((back.left - sd.left).norm() == 0.0);
    CHECK((back.right - sd.right).norm() == 0.0);
    // Serializing the parsed value reproduces the same bytes.
    CHECK(sd_to_json(back).dump() == text);
}

}  // TEST_SUITE
