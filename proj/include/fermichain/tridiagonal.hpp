#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace fermichain {

using cplx = std::complex<double>;

// Hermitian tridiagonal matrix stored by bands.  `off[j]` is the (j, j+1)
// entry; the sub-diagonal is its conjugate.  This is the one-particle hopping
// matrix shape: fields on the diagonal (with sign -B_n), couplings J_n above.
struct HermitianTridiagonal {
    std::vector<double> diag;
    std::vector<cplx> off; // size() - 1 entries

    std::size_t size() const { return diag.size(); }

    bool is_real(double tol = 0.0) const;
    Eigen::MatrixXcd dense() const;
};

// Real symmetric tridiagonal matrix, same band layout.
struct SymmetricTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }

    Eigen::MatrixXd dense() const;
};

// Eigendecomposition result: `values` ascending, column k of `vectors` is the
// eigenvector belonging to values[k].  Columns are orthonormal and the sign
// (phase) is fixed so the first component of largest magnitude is positive
// real, which keeps spectra reproducible across runs and backends.
template <typename Scalar>
struct BasicSpectrum {
    std::vector<double> values;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;

    std::size_t size() const { return values.size(); }
};

using Spectrum = BasicSpectrum<double>;
using ComplexSpectrum = BasicSpectrum<cplx>;

// Max row sum norm (infinity norm), the scale used by all relative tolerances.
double max_row_norm(const SymmetricTridiagonal& m);
double max_row_norm(const HermitianTridiagonal& m);
double max_row_norm(const Eigen::MatrixXd& a);
double max_row_norm(const Eigen::MatrixXcd& a);

// y = M x for banded M without forming the dense matrix.
Eigen::VectorXd apply(const SymmetricTridiagonal& m, const Eigen::VectorXd& x);

} // namespace fermichain
