#pragma once

#include <random>

#include "fermichain/chain.hpp"
#include "fermichain/spectral.hpp"
#include "fermichain/tridiagonal.hpp"

namespace testutil {

using fermichain::cplx;

inline fermichain::HermitianTridiagonal random_hermitian_tridiagonal(std::mt19937_64& rng,
                                                                     std::size_t n,
                                                                     bool complex_off = true) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    fermichain::HermitianTridiagonal m;
    m.diag.resize(n);
    m.off.resize(n ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) m.diag[i] = u(rng);
    for (std::size_t i = 0; i + 1 < n; ++i)
        m.off[i] = complex_off ? cplx(u(rng), u(rng)) : cplx(u(rng), 0.0);
    return m;
}

// Random irreducible chain with distinct lambda (shuffled so lambda ordering
// carries no structure).
inline fermichain::Model random_chain_model(std::mt19937_64& rng, std::size_t sites,
                                            bool complex_couplings = false) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> mag(0.2, 1.5);
    fermichain::Model m;
    m.chain.fields_B.resize(sites);
    m.chain.hoppings_J.resize(sites - 1);
    for (std::size_t i = 0; i < sites; ++i) m.chain.fields_B[i] = u(rng);
    for (std::size_t i = 0; i + 1 < sites; ++i) {
        const double r = mag(rng) * (rng() % 2 ? 1.0 : -1.0);
        m.chain.hoppings_J[i] = complex_couplings ? std::polar(std::abs(r), u(rng)) : cplx(r, 0);
    }
    m.bispectral.lambda.resize(sites);
    for (std::size_t i = 0; i < sites; ++i)
        m.bispectral.lambda[i] = static_cast<double>(i) + 0.3 * u(rng) / 1.5; // spacing >= 0.4
    std::shuffle(m.bispectral.lambda.begin(), m.bispectral.lambda.end(), rng);
    m.bispectral.lambda_next = static_cast<double>(sites) + 0.1;
    return m;
}

// Largest magnitude of (V^H A V) off the diagonal: diagonality of A in the
// eigenbasis.
template <typename Mat>
double offdiag_in_basis(const Mat& a, const Mat& v) {
    Mat m = v.adjoint() * a * v;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) worst = std::max(worst, std::abs(m(i, j)));
    return worst;
}

template <typename Mat>
double orthonormality_error(const Mat& v) {
    const Mat g = v.adjoint() * v;
    return (g - Mat::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

} // namespace testutil
