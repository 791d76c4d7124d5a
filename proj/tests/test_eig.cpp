#include <random>

#include "doctest.h"
#include "doodl/eig.hpp"
#include "doodl/errors.hpp"
#include "test_utils.hpp"

using namespace doodl;
namespace dt = doodl::testing;

TEST_SUITE("eig") {

TEST_CASE("diagonal matrix") {
    CMatrix a = CMatrix::Zero(3, 3);
    a(0, 0) = Complex(3, 0);
    a(1, 1) = Complex(-1, 2);
    a(2, 2) = Complex(0.5, -0.5);
    const EigDecomposition eg = eig_complex(a);
    std::vector<Complex> want{{3, 0}, {-1, 2}, {0.5, -0.5}};
    for (const auto& w : want) {
        double best = 1e9;
        for (Index i = 0; i < 3; ++i) best = std::min(best, std::abs(eg.values(i) - w));
        CHECK(best < 1e-12);
    }
}

TEST_CASE("rotation matrix has eigenvalues +-i") {
    CMatrix a(2, 2);
    a << Complex(0, 0), Complex(-1, 0), Complex(1, 0), Complex(0, 0);
    const EigDecomposition eg = eig_complex(a);
    const double d1 = std::min(std::abs(eg.values(0) - Complex(0, 1)),
                               std::abs(eg.values(0) - Complex(0, -1)));
    const double d2 = std::min(std::abs(eg.values(1) - Complex(0, 1)),
                               std::abs(eg.values(1) - Complex(0, -1)));
    CHECK(d1 < 1e-12);
    CHECK(d2 < 1e-12);
    CHECK(std::abs(eg.values(0) - eg.values(1)) > 1.0);
}

TEST_CASE("random matrices match the dense oracle") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 2 + static_cast<Index>(trial % 7);
        const CMatrix a = dt::random_cmatrix(rng, n, n);
        const EigDecomposition eg = eig_complex(a);

        // Residual check: A v = lambda v for every pair.
        for (Index i = 0; i < n; ++i) {
            const double resid = (a * eg.vectors.col(i) - eg.values(i) * eg.vectors.col(i)).norm();
            CHECK(resid < 1e-9);
        }
        // Eigenvalue multiset matches Eigen's independent solver.
        Eigen::ComplexEigenSolver<CMatrix> oracle(a);
        std::vector<bool> used(n, false);
        for (Index i = 0; i < n; ++i) {
            double best = 1e18;
            Index arg = -1;
            for (Index j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double dist = std::abs(eg.values(i) - oracle.eigenvalues()(j));
                if (dist < best) {
                    best = dist;
                    arg = j;
                }
            }
            used[arg] = true;
            CHECK(best < 1e-9 * std::max(1.0, a.norm()));
        }
    }
}

TEST_CASE("upper triangular input converges without iterations") {
    CMatrix a(3, 3);
    a << Complex(2, 1), Complex(1, 0), Complex(0, 3),
         Complex(0, 0), Complex(-1, 0), Complex(2, 2),
         Complex(0, 0), Complex(0, 0), Complex(0.25, -1);
    const EigDecomposition eg = eig_complex(a);
    for (const Complex want : {Complex(2, 1), Complex(-1, 0), Complex(0.25, -1)}) {
        double best = 1e9;
        for (Index i = 0; i < 3; ++i) best = std::min(best, std::abs(eg.values(i) - want));
        CHECK(best < 1e-12);
    }
}

TEST_CASE("rejects non-square input") {
    CHECK_THROWS_AS(eig_complex(CMatrix::Zero(2, 3)), InvalidShape);
}

}  // TEST_SUITE
