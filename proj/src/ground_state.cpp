#include "fermichain/ground_state.hpp"

#include <cmath>
#include <stdexcept>

#include "fermichain/errors.hpp"

namespace fermichain {

FermiData fermi_index(const Spectrum& spec, double zero_tol) {
    const std::size_t n = spec.size();
    if (n == 0) throw std::invalid_argument("fermi_index: empty spectrum");

    double wmax = 0.0;
    for (double w : spec.values) wmax = std::max(wmax, std::abs(w));
    const double threshold = zero_tol * wmax;
    for (double w : spec.values)
        if (std::abs(w) <= threshold)
            throw physics_error(
                "fermi_index: mode at zero energy (degenerate ground state); perturb b");

    if (spec.values.front() > 0.0)
        throw physics_error("fermi_index: all modes positive (empty ground state)");
    if (spec.values.back() < 0.0)
        throw physics_error("fermi_index: all modes negative (full ground state)");

    std::size_t K = 0;
    double energy = 0.0;
    for (std::size_t k = 0; k < n && spec.values[k] < 0.0; ++k) {
        K = k;
        energy += spec.values[k];
    }
    return FermiData{K, spec.values[K], spec.values[K + 1], energy};
}

CorrelationFull full_correlation(const Spectrum& spec, const FermiData& fd) {
    const auto n = static_cast<Eigen::Index>(spec.size());
    if (fd.K >= spec.size())
        throw std::invalid_argument("full_correlation: Fermi index out of range");

    // Rank-1 accumulation in ascending k; upper triangle computed, mirrored,
    // so the result is symmetric bit-for-bit.
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k <= fd.K; ++k) {
        const auto col = spec.vectors.col(static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) c(i, j) += col(i) * col(j);
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) c(i, j) = c(j, i);
    return CorrelationFull{std::move(c)};
}

CorrelationChopped chop(const CorrelationFull& cf, std::size_t ell) {
    if (ell >= cf.sites())
        throw std::out_of_range("chop: ell must satisfy 0 <= ell <= sites-1");
    const auto m = static_cast<Eigen::Index>(ell) + 1;
    return CorrelationChopped{cf.entries.topLeftCorner(m, m), ell};
}

double projector_identity_check(const CorrelationFull& cf, const CorrelationChopped& cc) {
    const auto n = static_cast<Eigen::Index>(cf.sites());
    const auto m = static_cast<Eigen::Index>(cc.ell) + 1;
    if (m > n || cc.entries.rows() != m)
        throw std::invalid_argument("projector_identity_check: inconsistent pair");

    Eigen::MatrixXd pi1 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < m; ++i) pi1(i, i) = 1.0;

    const Eigen::MatrixXd restricted = pi1 * cf.entries * pi1;
    double dev = (restricted.topLeftCorner(m, m) - cc.entries).cwiseAbs().maxCoeff();
    if (n > m) {
        dev = std::max(dev, restricted.bottomRows(n - m).cwiseAbs().maxCoeff());
        dev = std::max(dev, restricted.rightCols(n - m).cwiseAbs().maxCoeff());
    }
    return dev;
}

} // namespace fermichain
