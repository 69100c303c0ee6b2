#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fermichain/chain.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/ground_state.hpp"
#include "fermichain/heun.hpp"
#include "fermichain/spectral.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fermichain;

namespace {

constexpr double pi = std::numbers::pi;

Spectrum chain_spectrum(const ChainSpec& c) {
    return eig_tridiagonal(as_symmetric(build_hamiltonian(c)));
}

struct Built {
    Model model;
    Spectrum spectrum;
    FermiData fermi;
    CorrelationFull correlation;
};

Built build(Model m) {
    Built b{std::move(m), {}, {}, {}};
    b.spectrum = chain_spectrum(b.model.chain);
    b.fermi = fermi_index(b.spectrum);
    if (b.model.bispectral.analytic_omega) {
        b.fermi.omega_K = (*b.model.bispectral.analytic_omega)[b.fermi.K];
        b.fermi.omega_K1 = (*b.model.bispectral.analytic_omega)[b.fermi.K + 1];
    }
    b.correlation = full_correlation(b.spectrum, b.fermi);
    return b;
}

double band_deviation(const PositionTridiagonal& t, const Eigen::MatrixXcd& dense) {
    return (t.dense() - dense).cwiseAbs().maxCoeff();
}

double matrix_scale(const SymmetricTridiagonal& a, const SymmetricTridiagonal& b) {
    return std::max({max_row_norm(a), max_row_norm(b), 1e-300});
}

void check_commutant_pair(const CommutantT& generic, const CommutantT& closed, double tol) {
    REQUIRE(generic.matrix.size() == closed.matrix.size());
    const double scale = matrix_scale(generic.matrix, closed.matrix);
    for (std::size_t n = 0; n < generic.matrix.size(); ++n)
        CHECK(std::abs(generic.matrix.diag[n] - closed.matrix.diag[n]) <= tol * scale);
    for (std::size_t n = 0; n + 1 < generic.matrix.size(); ++n)
        CHECK(std::abs(generic.matrix.off[n] - closed.matrix.off[n]) <= tol * scale);
}

} // namespace

TEST_CASE("heun_full with constant lambda is 2*c0*H") {
    // Degenerate X = c0 * I (test-only input): {X,H} = 2 c0 H.
    std::mt19937_64 rng(11);
    Model m = testutil::random_chain_model(rng, 7);
    const double c0 = 0.8;
    m.bispectral.lambda.assign(7, c0);
    m.bispectral.lambda_next = c0;
    const PositionTridiagonal t = heun_full(m.bispectral, m.chain, {0.0, 0.0, 0.0});
    const Eigen::MatrixXcd expect = 2.0 * c0 * build_hamiltonian(m.chain).dense();
    CHECK(band_deviation(t, expect) <= 1e-15);
}

TEST_CASE("heun_full matches the dense anticommutator on su(2)") {
    const Model m = su2_chain({2, pi / 2, 0.5});
    const HeunParams hp{0.0, 0.0, 0.0};
    const PositionTridiagonal t = heun_full(m.bispectral, m.chain, hp);
    CHECK(band_deviation(t, oracles::dense_heun(m.bispectral, m.chain, hp)) <= 1e-14);
    CHECK(t.is_hermitian());
}

TEST_CASE("heun_full matches the dense bilinear for generic parameters") {
    std::mt19937_64 rng(0xabcdef);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int round = 0; round < 12; ++round) {
        const Model m = testutil::random_chain_model(rng, 6, round % 2 == 1);
        const HeunParams hp{u(rng), u(rng), u(rng)};
        const PositionTridiagonal t = heun_full(m.bispectral, m.chain, hp);
        const Eigen::MatrixXcd expect = oracles::dense_heun(m.bispectral, m.chain, hp);
        CHECK(band_deviation(t, expect) <= 1e-13 * std::max(1.0, max_row_norm(expect)));
    }
}

TEST_CASE("commuting_params on the su(2) worked example") {
    const Built b = build(su2_chain({2, pi / 2, 0.5}));
    const HeunParams hp = commuting_params(b.fermi, b.model.bispectral, 1);
    CHECK(hp.tau == 0.0);
    CHECK(std::abs(hp.mu) <= 1e-15); // omega_1 = -omega_2
    CHECK(hp.nu == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("commuting_params: symmetric filling makes mu vanish") {
    FermiData fd;
    fd.K = 3;
    fd.omega_K = -0.37;
    fd.omega_K1 = 0.37;
    BispectralData bd;
    bd.lambda = {0.0, 1.0, 2.0, 3.0, 4.0};
    bd.lambda_next = 5.0;
    CHECK(commuting_params(fd, bd, 2).mu == 0.0);
}

TEST_CASE("commuting_params: antisymmetric so_q(3) spectrum, mu = 0") {
    // d odd, K = (d-1)/2, b = 0: omega_K = -omega_{K+1} by sine antisymmetry.
    const Built b = build(soq3_chain({12, 9, 0.0}));
    CHECK(b.fermi.K == 4);
    const HeunParams hp = commuting_params(b.fermi, b.model.bispectral, 3);
    CHECK(std::abs(hp.mu) <= 1e-16);
}

TEST_CASE("commutant_matrix reproduces the su(2) 2x2 worked example") {
    const Built b = build(su2_chain({2, pi / 2, 0.5}));
    const CommutantT t = commutant_matrix(b.model, b.fermi, 1);
    CHECK(t.matrix.diag[0] == doctest::Approx(-1.5).epsilon(1e-14));
    CHECK(t.matrix.diag[1] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(t.matrix.off[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
    CHECK_FALSE(t.near_reducible);

    const CorrelationChopped cc = chop(b.correlation, 1);
    CHECK(commutator_residual(t, cc) <= 1e-14);
}

TEST_CASE("commutant_matrix: ell = 0 commutes trivially") {
    const Built b = build(su2_chain({4, 1.1, 0.3}));
    const CommutantT t = commutant_matrix(b.model, b.fermi, 0);
    CHECK(t.matrix.size() == 1);
    CHECK_FALSE(t.near_reducible);
    CHECK(commutator_residual(t, chop(b.correlation, 0)) == 0.0);
}

TEST_CASE("commutant equals the leading block of the commuting heun_full") {
    std::mt19937_64 rng(0x7777);
    std::uniform_int_distribution<std::size_t> size(2, 24);
    for (int round = 0; round < 10; ++round) {
        const std::size_t sites = size(rng);
        Model m = testutil::random_chain_model(rng, sites);
        FermiData fd; // synthetic Fermi data: the identity is purely algebraic
        fd.K = sites / 3;
        fd.omega_K = -0.4;
        fd.omega_K1 = 0.9;
        std::uniform_int_distribution<std::size_t> pick(0, sites - 1);
        const std::size_t ell = pick(rng);

        const CommutantT t = commutant_matrix(m, fd, ell);
        const PositionTridiagonal full =
            heun_full(m.bispectral, m.chain, commuting_params(fd, m.bispectral, ell));
        const double scale = std::max(max_row_norm(t.matrix), 1e-300);
        for (std::size_t n = 0; n <= ell; ++n)
            CHECK(std::abs(full.diag[n] - t.matrix.diag[n]) <= 1e-13 * scale);
        for (std::size_t n = 0; n + 1 <= ell; ++n) {
            CHECK(std::abs(full.super[n].real() - t.matrix.off[n]) <= 1e-13 * scale);
            CHECK(full.super[n].imag() == 0.0);
        }
    }
}

TEST_CASE("block invariance: the commuting parameters cut the chain at ell and K") {
    for (const Model& m :
         {su2_chain({12, 0.8, 0.25}), soq3_chain({14, 9, 0.1}), soq3_chain({10, 8, 0.2})}) {
        const Built b = build(Model(m));
        const std::size_t sites = b.model.chain.sites();
        for (std::size_t ell : {std::size_t{1}, sites / 2, sites - 2}) {
            const HeunParams hp = commuting_params(b.fermi, b.model.bispectral, ell);
            const PositionTridiagonal t = heun_full(b.model.bispectral, b.model.chain, hp);
            // Position basis: the (ell, ell+1) coupling vanishes identically.
            CHECK(std::abs(t.super[ell]) == 0.0);
            CHECK(std::abs(t.sub[ell]) == 0.0);

            // Momentum basis: <omega_K| T |omega_{K+1}> vanishes to rounding.
            double scale = 0.0;
            for (double d : t.diag) scale = std::max(scale, std::abs(d));
            for (const cplx& v : t.super) scale = std::max(scale, std::abs(v));
            const Eigen::MatrixXcd dense = t.dense();
            const Eigen::VectorXd vk =
                b.spectrum.vectors.col(static_cast<Eigen::Index>(b.fermi.K));
            const Eigen::VectorXd vk1 =
                b.spectrum.vectors.col(static_cast<Eigen::Index>(b.fermi.K + 1));
            const double edge =
                std::abs((vk.cast<cplx>().adjoint() * dense * vk1.cast<cplx>())(0, 0));
            CHECK(edge <= 1e-10 * scale);
        }
    }
}

TEST_CASE("closed form vs generic: su(2) grid") {
    std::mt19937_64 rng(0x52d1);
    std::uniform_real_distribution<double> th(0.1, 3.0);
    std::uniform_real_distribution<double> bb(-0.8, 0.8);
    for (int two_s : {3, 10, 41, 100}) {
        const double theta = th(rng);
        const double b0 = 0.25 + bb(rng);
        const Built b = build(su2_chain({two_s, theta, b0}));
        for (std::size_t ell :
             {std::size_t{0}, std::size_t{1}, static_cast<std::size_t>(two_s) / 2,
              static_cast<std::size_t>(two_s)}) {
            const CommutantT generic = commutant_matrix(b.model, b.fermi, ell);
            const CommutantT closed =
                closed_form_commutant(Su2Params{two_s, theta, b0}, b.fermi, ell);
            check_commutant_pair(generic, closed, 1e-12);
        }
    }
}

TEST_CASE("closed form vs generic: so_q(3) all valid rep_dim up to root_order 40") {
    for (int N : {5, 12, 40}) {
        for (int d = 1; d <= N - 1; d += (N > 12 ? 3 : 1)) {
            const Model model = soq3_chain({N, d, 0.0});
            // midgap filling keeps the sea interior for every d
            const std::size_t mid = static_cast<std::size_t>(d) / 2;
            const double b0 = -(model.bispectral.lambda[mid] +
                                model.bispectral.lambda_at(mid + 1)) /
                              2.0;
            const Built b = build(soq3_chain({N, d, b0}));
            for (std::size_t ell : {std::size_t{0}, static_cast<std::size_t>(d) / 2,
                                    static_cast<std::size_t>(d)}) {
                const CommutantT generic = commutant_matrix(b.model, b.fermi, ell);
                const CommutantT closed =
                    closed_form_commutant(SoQ3Params{N, d, b0}, b.fermi, ell);
                check_commutant_pair(generic, closed, 1e-12);
            }
        }
    }
}

TEST_CASE("closed form vs generic: truncated su(1,1)") {
    for (double kappa : {0.5, 1.0, 3.0}) {
        for (double theta : {0.2, 1.0}) {
            Su11Params p{kappa, theta, -kappa / 2 - 3.5, {}};
            const Built b = build(su11_chain_sized(p, 64));
            for (std::size_t ell : {std::size_t{2}, std::size_t{8}}) {
                const CommutantT generic = commutant_matrix(b.model, b.fermi, ell);
                const CommutantT closed = closed_form_commutant(p, b.fermi, ell);
                check_commutant_pair(generic, closed, 1e-12);
            }
        }
    }
}

TEST_CASE("commutation holds on a grid of ell for exact finite models") {
    for (const Model& m : {su2_chain({20, 0.9, 0.25}), soq3_chain({20, 13, 0.07})}) {
        const Built b = build(Model(m));
        const std::size_t sites = b.model.chain.sites();
        for (std::size_t ell = 0; ell < sites; ell += 2) {
            const CommutantT t = commutant_matrix(b.model, b.fermi, ell);
            CHECK(commutator_residual(t, chop(b.correlation, ell)) <= 1e-12);
        }
    }
}

TEST_CASE("negative control: perturbing mu breaks commutation") {
    const Built b = build(su2_chain({10, 1.0, 0.25}));
    const std::size_t ell = 5;
    CommutantT t = commutant_matrix(b.model, b.fermi, ell);
    for (std::size_t n = 0; n <= ell; ++n)
        t.matrix.diag[n] += 0.1 * b.model.bispectral.lambda[n];
    t.params.mu += 0.1;
    CHECK(commutator_residual(t, chop(b.correlation, ell)) > 1e-6);
}

TEST_CASE("theta = 0 produces a reducible commutant and is flagged") {
    const Built b = build(su2_chain({6, 0.0, 0.3}));
    const CommutantT t = commutant_matrix(b.model, b.fermi, 3);
    CHECK(t.near_reducible);
}

TEST_CASE("non-degeneracy: irreducible T has strictly separated eigenvalues") {
    const Built b = build(su2_chain({40, 1.3, 0.25}));
    for (std::size_t ell : {std::size_t{5}, std::size_t{20}, std::size_t{39}}) {
        const CommutantT t = commutant_matrix(b.model, b.fermi, ell);
        REQUIRE_FALSE(t.near_reducible);
        const Spectrum s = eig_tridiagonal(t.matrix);
        for (std::size_t k = 0; k + 1 < s.size(); ++k)
            CHECK(s.values[k + 1] - s.values[k] > 0.0);
    }
}

TEST_CASE("commutator_residual rejects mismatched sizes") {
    const Built b = build(su2_chain({4, 0.9, 0.3}));
    const CommutantT t = commutant_matrix(b.model, b.fermi, 2);
    CHECK_THROWS_AS((void)commutator_residual(t, chop(b.correlation, 1)),
                    std::invalid_argument);
}

TEST_CASE("su(1,1) commutation: residual at the floor for every window size") {
    // Truncation error of the correlation window is far below double
    // precision at these parameters, so the residual is pinned at the
    // rounding floor for every window in the doubling schedule.
    for (double kappa : {0.5, 1.0, 3.0}) {
        for (double theta : {0.2, 1.0}) {
            Su11Params p{kappa, theta, -kappa / 2 - 3.5, {}};
            for (std::size_t M : {std::size_t{64}, std::size_t{128}, std::size_t{256}}) {
                const Built b = build(su11_chain_sized(p, M));
                for (std::size_t ell : {std::size_t{4}, std::size_t{8}}) {
                    const CommutantT t = commutant_matrix(b.model, b.fermi, ell);
                    CHECK(commutator_residual(t, chop(b.correlation, ell)) <= 1e-8);
                }
            }
        }
    }
}
