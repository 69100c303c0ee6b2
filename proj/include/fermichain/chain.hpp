#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fermichain/spectral.hpp"
#include "fermichain/tridiagonal.hpp"

namespace fermichain {

// Couplings of the open free-fermion chain on sites 0..N (sites = N+1):
// fields B_n and nearest-neighbour hoppings J_n.
struct ChainSpec {
    std::vector<double> fields_B;
    std::vector<cplx> hoppings_J; // size sites()-1

    std::size_t sites() const { return fields_B.size(); }
    bool is_real(double tol = 1e-14) const;
    bool is_irreducible() const; // all |J_n| > 0
};

// Data of the diagonal bispectral partner X = sum_n lambda_n |n><n| plus,
// when the model provides them in closed form, the spectrum omega_k and the
// dual couplings (X tridiagonal in the momentum basis).  `lambda_next` is
// lambda at one index past the last site, needed by the commutant at
// ell = sites-1.
struct BispectralData {
    std::vector<double> lambda; // length sites
    double lambda_next = 0.0;
    std::optional<std::vector<double>> analytic_omega; // ascending
    std::optional<std::vector<double>> dual_B;         // length sites
    std::optional<std::vector<double>> dual_J;         // length sites-1

    double lambda_at(std::size_t i) const; // valid for i <= sites
};

struct Model {
    ChainSpec chain;
    BispectralData bispectral;
};

// Spin-s representation data: two_s = 2s, rotation angle theta, field offset b.
struct Su2Params {
    int two_s = 1;
    double theta = 0.0;
    double b = 0.0;
};

// Finite window handling for the semi-infinite chain.  Consumers grow the
// window by growth_factor until the quantities they extract move by less
// than window_tol, giving up at max_size.
struct TruncationConfig {
    std::size_t initial_size = 64;
    double growth_factor = 2.0;
    double window_tol = 1e-10;
    std::size_t max_size = 8192;
};

struct Su11Params {
    double kappa = 1.0; // > 0
    double theta = 0.0;
    double b = 0.0;
    TruncationConfig truncation;
};

// q = exp(2*pi*i/root_order); rep_dim = d gives a (d+1)-site chain.
struct SoQ3Params {
    int root_order = 2;
    int rep_dim = 1;
    double b = 0.0;
};

Model su2_chain(const Su2Params& p);
Model su11_chain(const Su11Params& p); // window = truncation.initial_size sites
Model su11_chain_sized(const Su11Params& p, std::size_t sites);
Model soq3_chain(const SoQ3Params& p);

// One-particle hopping matrix: diag[n] = -B_n, off[n] = J_n.
HermitianTridiagonal build_hamiltonian(const ChainSpec& c);

// Residuals of the two three-term relations satisfied by the wavefunctions
// phi_n(omega_k): the position-basis recurrence (couplings J, B) and the
// momentum-basis difference equation (dual couplings).  The difference
// residual is measured for k < k_limit only; pass a window bound for
// truncated semi-infinite chains.
struct BispectralReport {
    double recurrence_residual = 0.0;
    double difference_residual = 0.0;
    std::size_t k_checked = 0;
};

BispectralReport verify_bispectral(const ChainSpec& c, const BispectralData& bd,
                                   const Spectrum& spec,
                                   std::size_t k_limit = static_cast<std::size_t>(-1));

} // namespace fermichain
