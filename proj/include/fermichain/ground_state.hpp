#pragma once

#include <cstddef>

#include "fermichain/tridiagonal.hpp"

namespace fermichain {

// Fermi sea bookkeeping: K is the label of the highest filled mode
// (omega_K < 0 < omega_{K+1}); ground_energy = sum of the filled omega_k.
struct FermiData {
    std::size_t K = 0;
    double omega_K = 0.0;
    double omega_K1 = 0.0;
    double ground_energy = 0.0;
};

// Locate the Fermi index.  zero_tol is relative: a mode with
// |omega_k| <= zero_tol * max|omega| means a degenerate ground state and is
// refused (shift b to move the spectrum off zero).  An all-positive
// (all-negative) spectrum means an empty (full) sea and is refused too.
FermiData fermi_index(const Spectrum& spec, double zero_tol = 1e-10);

// Ground-state correlation matrix <c_m^dag c_n>: the projector onto the
// filled modes, accumulated as sum_{k<=K} v_k v_k^T in ascending k.
struct CorrelationFull {
    Eigen::MatrixXd entries;

    std::size_t sites() const { return static_cast<std::size_t>(entries.rows()); }
};

CorrelationFull full_correlation(const Spectrum& spec, const FermiData& fd);

// Leading (ell+1) x (ell+1) principal block of the correlation matrix, the
// spatial restriction to the subsystem {0..ell}.
struct CorrelationChopped {
    Eigen::MatrixXd entries;
    std::size_t ell = 0;

    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
};

CorrelationChopped chop(const CorrelationFull& cf, std::size_t ell);

// Forms the spatial projector pi_1 explicitly, computes pi_1 C pi_1 and
// returns the max deviation of its leading block from the chopped matrix.
// The products are exact (0/1 factors), so the deviation must be 0.
double projector_identity_check(const CorrelationFull& cf, const CorrelationChopped& cc);

} // namespace fermichain
