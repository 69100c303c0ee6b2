#pragma once

#include "fermichain/tridiagonal.hpp"

namespace fermichain {

// Diagonal unitary gauge removing hopping phases:  D m D^H is real with
// non-negative off-diagonal, phases[0] = 1.  Zero couplings stay zero and the
// phase carries through unchanged.
struct GaugeResult {
    SymmetricTridiagonal matrix;
    std::vector<cplx> phases;
};

GaugeResult gauge_to_real(const HermitianTridiagonal& m);

// Checked reinterpretation of a Hermitian tridiagonal with (numerically) real
// couplings.  Throws std::invalid_argument if an imaginary part exceeds
// tol * max_row_norm(m).
SymmetricTridiagonal as_symmetric(const HermitianTridiagonal& m, double tol = 1e-12);

// Full eigendecomposition of a symmetric tridiagonal matrix by implicit-shift
// QL iteration with eigenvector accumulation.  Deliberately independent of
// the dense solver below: the two form the stable/oracle pair used by the
// conditioning benchmark.
Spectrum eig_tridiagonal(const SymmetricTridiagonal& m);

// Dense Hermitian/symmetric eigendecomposition (oracle path; also the
// ill-conditioned direct route to the chopped correlation spectrum).
// Rejects inputs whose asymmetry exceeds 1e-12 * max_row_norm.
Spectrum eig_dense_hermitian(const Eigen::MatrixXd& a);
ComplexSpectrum eig_dense_hermitian(const Eigen::MatrixXcd& a);

} // namespace fermichain
