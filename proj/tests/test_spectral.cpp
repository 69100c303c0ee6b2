#include <doctest.h>

#include <cmath>
#include <random>

#include "fermichain/errors.hpp"
#include "fermichain/spectral.hpp"
#include "test_util.hpp"

using namespace fermichain;

TEST_CASE("gauge_to_real flips a negative coupling by a unit sign") {
    HermitianTridiagonal m{{1.0, 2.0}, {cplx(-0.5, 0.0)}};
    const GaugeResult g = gauge_to_real(m);
    CHECK(g.matrix.diag == std::vector<double>{1.0, 2.0});
    CHECK(g.matrix.off[0] == 0.5);
    CHECK(g.phases[0] == cplx(1.0, 0.0));
    CHECK(g.phases[1] == cplx(-1.0, 0.0));
}

TEST_CASE("gauge_to_real on imaginary couplings: D m D^H real by direct multiplication") {
    HermitianTridiagonal m{{0.0, 0.0, 0.0}, {cplx(0.0, 1.0), cplx(0.0, 1.0)}};
    const GaugeResult g = gauge_to_real(m);
    CHECK(g.matrix.off[0] == 1.0);
    CHECK(g.matrix.off[1] == 1.0);
    CHECK(g.phases[0] == cplx(1.0, 0.0));

    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) d(i, i) = g.phases[static_cast<std::size_t>(i)];
    const Eigen::MatrixXcd transformed = d * m.dense() * d.adjoint();
    CHECK((transformed - g.matrix.dense().cast<cplx>()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("gauge_to_real keeps a real non-negative chain unchanged") {
    HermitianTridiagonal m{{0.2, -0.4, 1.0}, {cplx(0.7, 0.0), cplx(0.0, 0.0)}};
    const GaugeResult g = gauge_to_real(m);
    CHECK(g.matrix.off[0] == 0.7);
    CHECK(g.matrix.off[1] == 0.0);
    for (const cplx& p : g.phases) CHECK(p == cplx(1.0, 0.0));
}

TEST_CASE("eig_tridiagonal: 1x1") {
    const Spectrum s = eig_tridiagonal({{0.0}, {}});
    CHECK(s.values == std::vector<double>{0.0});
    CHECK(s.vectors(0, 0) == 1.0);
}

TEST_CASE("eig_tridiagonal: symmetry-forced 2x2") {
    const Spectrum s = eig_tridiagonal({{0.0, 0.0}, {1.0}});
    CHECK(s.values[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(s.values[1] == doctest::Approx(1.0).epsilon(1e-15));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(s.vectors(0, 0) - r) <= 1e-15);
    CHECK(std::abs(s.vectors(1, 0) + r) <= 1e-15);
    CHECK(std::abs(s.vectors(0, 1) - r) <= 1e-15);
    CHECK(std::abs(s.vectors(1, 1) - r) <= 1e-15);
}

TEST_CASE("eig_tridiagonal: 3x3 roots of lambda^3 - 2 lambda") {
    // Characteristic polynomial of tridiag(0; 1,1) is lambda^3 - 2 lambda.
    const Spectrum s = eig_tridiagonal({{0.0, 0.0, 0.0}, {1.0, 1.0}});
    const double r2 = std::sqrt(2.0);
    CHECK(std::abs(s.values[0] + r2) <= 1e-14);
    CHECK(std::abs(s.values[1]) <= 1e-14);
    CHECK(std::abs(s.values[2] - r2) <= 1e-14);
}

TEST_CASE("eig_dense_hermitian: identity and diagonal") {
    const Spectrum s1 = eig_dense_hermitian(Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3)));
    for (double v : s1.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 0.3;
    d(1, 1) = 0.7;
    const Spectrum s2 = eig_dense_hermitian(d);
    CHECK(s2.values[0] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(s2.values[1] == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("eig_dense_hermitian rejects non-Hermitian input") {
    Eigen::MatrixXd a(2, 2);
    a << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS((void)eig_dense_hermitian(a), std::invalid_argument);
    Eigen::MatrixXcd b(2, 2);
    b << cplx(0, 0), cplx(0, 1), cplx(0, 1), cplx(0, 0);
    CHECK_THROWS_AS((void)eig_dense_hermitian(b), std::invalid_argument);
}

TEST_CASE("property: gauge + tridiagonal QL reproduces the dense Hermitian solver") {
    std::mt19937_64 rng(0xfee1f00du);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    for (int round = 0; round < 30; ++round) {
        const std::size_t n = size(rng);
        const HermitianTridiagonal m = testutil::random_hermitian_tridiagonal(rng, n);
        const GaugeResult g = gauge_to_real(m);
        const Spectrum tri = eig_tridiagonal(g.matrix);
        const ComplexSpectrum dense = eig_dense_hermitian(m.dense());

        REQUIRE(tri.size() == n);
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(tri.values[k] - dense.values[k]) <= 1e-11);

        // Phases applied back: columns D^H v diagonalize the original matrix.
        Eigen::MatrixXcd v(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    std::conj(g.phases[i]) *
                    tri.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        const Eigen::MatrixXcd a = m.dense();
        const double scale = std::max(max_row_norm(a), 1.0);
        CHECK(testutil::offdiag_in_basis(a, v) <= 1e-10 * scale);
    }
}

TEST_CASE("property: spectrum invariants on random symmetric tridiagonals") {
    std::mt19937_64 rng(0x5eedbeefu);
    std::uniform_int_distribution<std::size_t> size(2, 80);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> mag(0.1, 2.0);
    for (int round = 0; round < 25; ++round) {
        const std::size_t n = size(rng);
        SymmetricTridiagonal m;
        m.diag.resize(n);
        m.off.resize(n - 1);
        for (double& d : m.diag) d = u(rng);
        for (double& e : m.off) e = mag(rng) * (rng() % 2 ? 1.0 : -1.0); // irreducible
        const Spectrum s = eig_tridiagonal(m);
        const double scale = std::max(max_row_norm(m), 1.0);

        CHECK(testutil::orthonormality_error(s.vectors) <= 1e-12);
        for (std::size_t k = 0; k < n; ++k) {
            const Eigen::VectorXd col = s.vectors.col(static_cast<Eigen::Index>(k));
            CHECK((apply(m, col) - s.values[k] * col).norm() <= 1e-11 * scale);
        }
        // Irreducible input: eigenvalues strictly separated.
        for (std::size_t k = 0; k + 1 < n; ++k) CHECK(s.values[k + 1] - s.values[k] > 0.0);
        CHECK(testutil::offdiag_in_basis(Eigen::MatrixXd(m.dense()), s.vectors) <=
              1e-10 * scale);
    }
}

TEST_CASE("eigenvector sign convention: largest-magnitude component positive") {
    std::mt19937_64 rng(7);
    const HermitianTridiagonal m = testutil::random_hermitian_tridiagonal(rng, 12, false);
    const Spectrum s = eig_tridiagonal(as_symmetric(m));
    for (Eigen::Index k = 0; k < 12; ++k) {
        Eigen::Index imax = 0;
        for (Eigen::Index i = 0; i < 12; ++i)
            if (std::abs(s.vectors(i, k)) > std::abs(s.vectors(imax, k))) imax = i;
        CHECK(s.vectors(imax, k) > 0.0);
    }
}
