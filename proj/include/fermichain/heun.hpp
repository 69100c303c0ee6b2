#pragma once

#include <cstddef>

#include "fermichain/chain.hpp"
#include "fermichain/ground_state.hpp"
#include "fermichain/tridiagonal.hpp"

namespace fermichain {

// Parameters of the bilinear operator {X,H} + tau [X,H] + mu X + nu H.
// The specialization that commutes with the chopped correlation matrix has
// tau = 0, mu = -(omega_K + omega_{K+1}), nu = -(lambda_ell + lambda_{ell+1}).
struct HeunParams {
    double tau = 0.0;
    double mu = 0.0;
    double nu = 0.0;
};

// Position-basis matrix of the bilinear operator.  Tridiagonal with
// independent bands: for tau != 0 the commutator part breaks Hermiticity, so
// the general value type keeps sub and super separately.
struct PositionTridiagonal {
    std::vector<double> diag;
    std::vector<cplx> super; // (n, n+1)
    std::vector<cplx> sub;   // (n+1, n)

    std::size_t size() const { return diag.size(); }
    bool is_hermitian(double tol = 1e-12) const;
    Eigen::MatrixXcd dense() const;
};

// Full-size operator on the whole chain, entries per the bilinear expansion:
//   super_n = J_n     (lambda_n (1+tau) + lambda_{n+1} (1-tau) + nu)
//   sub_n   = J_n^*   (lambda_n (1-tau) + lambda_{n+1} (1+tau) + nu)
//   diag_n  = mu lambda_n - 2 B_n lambda_n - nu B_n
PositionTridiagonal heun_full(const BispectralData& bd, const ChainSpec& c,
                              const HeunParams& hp);

HeunParams commuting_params(const FermiData& fd, const BispectralData& bd, std::size_t ell);

// The chopped commutant T: real symmetric tridiagonal of size ell+1 with
//   t_n = J_n (lambda_n + lambda_{n+1} - lambda_ell - lambda_{ell+1})
//   d_n = -B_n (2 lambda_n - lambda_ell - lambda_{ell+1})
//         - lambda_n (omega_K + omega_{K+1}).
// near_reducible marks any |t_n| <= 1e-12 * max|t|: T's spectrum may then be
// degenerate and consumers should take the dense direct path instead.
struct CommutantT {
    SymmetricTridiagonal matrix;
    HeunParams params;
    std::size_t ell = 0;
    bool near_reducible = false;
};

CommutantT commutant_matrix(const Model& m, const FermiData& fd, std::size_t ell);

// Per-model closed forms of the same matrix (printed t_n, d_n), used as the
// algebraic cross-check of the generic construction.
CommutantT closed_form_commutant(const Su2Params& p, const FermiData& fd, std::size_t ell);
CommutantT closed_form_commutant(const Su11Params& p, const FermiData& fd, std::size_t ell);
CommutantT closed_form_commutant(const SoQ3Params& p, const FermiData& fd, std::size_t ell);

// || T C - C T ||_F / (||T||_F ||C||_F + tiny), the scale-free commutation
// metric accepted by the via-commutant spectrum extraction.
double commutator_residual(const CommutantT& t, const CorrelationChopped& c);

} // namespace fermichain
