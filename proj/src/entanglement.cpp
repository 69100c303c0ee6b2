#include "fermichain/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fermichain/errors.hpp"
#include "fermichain/spectral.hpp"

namespace fermichain {

std::string_view method_name(Method m) {
    return m == Method::via_commutant ? "via_commutant" : "direct";
}

double von_neumann_entropy(std::span<const double> nu) {
    double s = 0.0;
    for (double x : nu) {
        const double p = std::clamp(x, 0.0, 1.0);
        if (p > 0.0) s -= p * std::log(p);
        if (p < 1.0) s -= (1.0 - p) * std::log(1.0 - p);
    }
    return s;
}

EntanglementSpectrum entanglement_hamiltonian_spectrum(std::span<const double> nu,
                                                       double clamp_eps) {
    EntanglementSpectrum out;
    out.epsilon.reserve(nu.size());
    out.clamped.reserve(nu.size());
    for (double x : nu) {
        const bool hit = x < clamp_eps || x > 1.0 - clamp_eps;
        const double p = std::clamp(x, clamp_eps, 1.0 - clamp_eps);
        out.epsilon.push_back(std::log((1.0 - p) / p));
        out.clamped.push_back(hit);
    }
    return out;
}

namespace {

// Shared tail: range-check, clamp, sort ascending by nu, fill derived fields.
EntanglementReport assemble(std::vector<double> nu_raw, std::vector<double> residuals,
                            Method method, double commutator_res, double clamp_eps) {
    EntanglementReport rep;
    rep.method = method;
    rep.commutator_residual = commutator_res;

    for (double x : nu_raw)
        rep.max_nu_range_violation =
            std::max({rep.max_nu_range_violation, -x, x - 1.0, 0.0});
    if (rep.max_nu_range_violation > 1e-9)
        throw numerical_error(
            "entanglement: correlation eigenvalue outside [0,1] beyond tolerance");

    std::vector<std::size_t> order(nu_raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return nu_raw[a] < nu_raw[b]; });

    rep.nu.reserve(nu_raw.size());
    rep.residuals.reserve(nu_raw.size());
    for (std::size_t k : order) {
        rep.nu.push_back(std::clamp(nu_raw[k], 0.0, 1.0));
        rep.residuals.push_back(residuals[k]);
    }
    EntanglementSpectrum es = entanglement_hamiltonian_spectrum(rep.nu, clamp_eps);
    rep.epsilon = std::move(es.epsilon);
    rep.clamped = std::move(es.clamped);
    rep.entropy = von_neumann_entropy(rep.nu);
    return rep;
}

EntanglementReport rayleigh_extract(const CommutantT& t, const CorrelationChopped& c,
                                    double commutator_res, bool enforce, double clamp_eps) {
    const auto n = static_cast<Eigen::Index>(t.matrix.size());
    Spectrum ts = eig_tridiagonal(t.matrix);

    // Numerically coincident T eigenvalues: diagonalize C's action inside the
    // cluster so the Rayleigh quotients see C eigenvectors, not an arbitrary
    // rotation of them.
    const double gap_tol = 1e-12 * max_row_norm(t.matrix);
    std::size_t start = 0;
    while (start < ts.size()) {
        std::size_t end = start + 1;
        while (end < ts.size() && ts.values[end] - ts.values[end - 1] < gap_tol) ++end;
        if (end - start > 1) {
            const auto w = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd block = ts.vectors.middleCols(static_cast<Eigen::Index>(start), w);
            Eigen::MatrixXd small = block.transpose() * (c.entries * block);
            small = 0.5 * (small + small.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
            ts.vectors.middleCols(static_cast<Eigen::Index>(start), w) =
                block * es.eigenvectors();
        }
        start = end;
    }

    std::vector<double> nu(static_cast<std::size_t>(n));
    std::vector<double> residuals(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto v = ts.vectors.col(k);
        const Eigen::VectorXd cv = c.entries * v;
        const double q = v.dot(cv);
        nu[static_cast<std::size_t>(k)] = q;
        residuals[static_cast<std::size_t>(k)] = (cv - q * v).norm();
    }

    if (enforce) {
        for (double r : residuals)
            if (r > 1e-8)
                throw numerical_error(
                    "c_spectrum_via_commutant: Rayleigh residual above 1e-8; "
                    "fall back to the direct path");
    }
    return assemble(std::move(nu), std::move(residuals), Method::via_commutant,
                    commutator_res, clamp_eps);
}

} // namespace

EntanglementReport c_spectrum_via_commutant(const CommutantT& t, const CorrelationChopped& c,
                                            double commutator_tol, double clamp_eps) {
    if (t.matrix.size() != c.size())
        throw std::invalid_argument("c_spectrum_via_commutant: size mismatch");
    if (t.near_reducible)
        throw numerical_error(
            "c_spectrum_via_commutant: commutant is near-reducible; "
            "fall back to the direct path");
    const double r = commutator_residual(t, c);
    if (r > commutator_tol)
        throw numerical_error(
            "c_spectrum_via_commutant: [T,C] residual above tolerance; "
            "fall back to the direct path");
    return rayleigh_extract(t, c, r, /*enforce=*/true, clamp_eps);
}

EntanglementReport c_spectrum_via_commutant_unchecked(const CommutantT& t,
                                                      const CorrelationChopped& c,
                                                      double clamp_eps) {
    if (t.matrix.size() != c.size())
        throw std::invalid_argument("c_spectrum_via_commutant: size mismatch");
    return rayleigh_extract(t, c, commutator_residual(t, c), /*enforce=*/false, clamp_eps);
}

EntanglementReport c_spectrum_direct(const CorrelationChopped& c, double clamp_eps) {
    Spectrum s = eig_dense_hermitian(Eigen::MatrixXd(c.entries));
    std::vector<double> residuals(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto v = s.vectors.col(static_cast<Eigen::Index>(k));
        residuals[k] = (c.entries * v - s.values[k] * v).norm();
    }
    return assemble(std::move(s.values), std::move(residuals), Method::direct,
                    std::numeric_limits<double>::quiet_NaN(), clamp_eps);
}

} // namespace fermichain
