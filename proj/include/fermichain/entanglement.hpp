#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fermichain/ground_state.hpp"
#include "fermichain/heun.hpp"

namespace fermichain {

enum class Method { via_commutant, direct };

std::string_view method_name(Method m);

// Spectrum of the chopped correlation matrix and derived quantities:
// nu_k ascending in [0,1], the single-particle entanglement energies
// epsilon_k = log((1-nu)/nu), and the von Neumann entropy in nats.
// residuals[k] = ||C v_k - nu_k v_k||_2 per mode; commutator_residual is NaN
// on the direct path.
struct EntanglementReport {
    std::vector<double> nu;
    std::vector<double> epsilon;
    std::vector<bool> clamped; // epsilon clamp active (mode effectively disentangled)
    double entropy = 0.0;
    Method method = Method::direct;
    std::vector<double> residuals;
    double commutator_residual = 0.0;
    double max_nu_range_violation = 0.0; // pre-clamp deviation from [0,1]
};

// Stable route: diagonalize the commuting tridiagonal T, take Rayleigh
// quotients nu_k = v_k^T C v_k over its eigenvectors.  Refuses when T is
// near-reducible, when [T,C] exceeds commutator_tol, or when a per-mode
// residual exceeds 1e-8.
EntanglementReport c_spectrum_via_commutant(const CommutantT& t, const CorrelationChopped& c,
                                            double commutator_tol = 1e-8,
                                            double clamp_eps = 1e-15);

// Direct dense diagonalization of C (the ill-conditioned reference path).
EntanglementReport c_spectrum_direct(const CorrelationChopped& c, double clamp_eps = 1e-15);

// Diagnostic variant used by the conditioning benchmark: same Rayleigh
// extraction but with the commutation and residual gates disabled.
EntanglementReport c_spectrum_via_commutant_unchecked(const CommutantT& t,
                                                      const CorrelationChopped& c,
                                                      double clamp_eps = 1e-15);

struct EntanglementSpectrum {
    std::vector<double> epsilon;
    std::vector<bool> clamped;
};

// epsilon_k = log((1-nu~)/nu~) with nu~ clamped to [clamp_eps, 1-clamp_eps].
EntanglementSpectrum entanglement_hamiltonian_spectrum(std::span<const double> nu,
                                                       double clamp_eps = 1e-15);

// S1 = sum_k [-nu ln nu - (1-nu) ln(1-nu)], 0 ln 0 = 0, in nats.
double von_neumann_entropy(std::span<const double> nu);

} // namespace fermichain
