#include "fermichain/heun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fermichain/errors.hpp"

namespace fermichain {

namespace {
constexpr double pi = std::numbers::pi;
}

bool PositionTridiagonal::is_hermitian(double tol) const {
    double scale = 0.0;
    for (double d : diag) scale = std::max(scale, std::abs(d));
    for (const cplx& s : super) scale = std::max(scale, std::abs(s));
    for (const cplx& s : sub) scale = std::max(scale, std::abs(s));
    for (std::size_t j = 0; j < super.size(); ++j)
        if (std::abs(super[j] - std::conj(sub[j])) > tol * std::max(scale, 1e-300)) return false;
    return true;
}

Eigen::MatrixXcd PositionTridiagonal::dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = diag[static_cast<std::size_t>(i)];
        if (i + 1 < n) {
            a(i, i + 1) = super[static_cast<std::size_t>(i)];
            a(i + 1, i) = sub[static_cast<std::size_t>(i)];
        }
    }
    return a;
}

PositionTridiagonal heun_full(const BispectralData& bd, const ChainSpec& c,
                              const HeunParams& hp) {
    const std::size_t n = c.sites();
    if (n == 0) throw std::invalid_argument("heun_full: empty chain");
    if (bd.lambda.size() != n)
        throw std::invalid_argument("heun_full: lambda length must equal sites");

    PositionTridiagonal t;
    t.diag.resize(n);
    t.super.resize(n - 1);
    t.sub.resize(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double lam = bd.lambda[j];
        t.diag[j] = hp.mu * lam - 2.0 * c.fields_B[j] * lam - hp.nu * c.fields_B[j];
        if (j + 1 < n) {
            // Written as sum + tau*diff + nu so that with tau = 0 and
            // nu = -(lambda_ell + lambda_{ell+1}) the edge coupling at
            // j = ell cancels bit-exactly.
            const double sum = bd.lambda[j] + bd.lambda[j + 1];
            const double diff = bd.lambda[j + 1] - bd.lambda[j];
            t.super[j] = c.hoppings_J[j] * (sum - hp.tau * diff + hp.nu);
            t.sub[j] = std::conj(c.hoppings_J[j]) * (sum + hp.tau * diff + hp.nu);
        }
    }
    return t;
}

HeunParams commuting_params(const FermiData& fd, const BispectralData& bd, std::size_t ell) {
    if (ell + 1 > bd.lambda.size())
        throw std::invalid_argument("commuting_params: ell out of range");
    HeunParams hp;
    hp.tau = 0.0;
    hp.mu = -(fd.omega_K + fd.omega_K1);
    hp.nu = -(bd.lambda_at(ell) + bd.lambda_at(ell + 1));
    return hp;
}

namespace {

CommutantT finalize(SymmetricTridiagonal&& m, const HeunParams& hp, std::size_t ell) {
    CommutantT out;
    out.matrix = std::move(m);
    out.params = hp;
    out.ell = ell;
    double tmax = 0.0;
    for (double t : out.matrix.off) tmax = std::max(tmax, std::abs(t));
    for (double t : out.matrix.off)
        if (std::abs(t) <= 1e-12 * tmax) out.near_reducible = true;
    return out;
}

} // namespace

CommutantT commutant_matrix(const Model& m, const FermiData& fd, std::size_t ell) {
    const std::size_t sites = m.chain.sites();
    if (ell + 1 > sites) throw std::invalid_argument("commutant_matrix: ell out of range");
    if (!m.chain.is_real())
        throw std::invalid_argument(
            "commutant_matrix: complex couplings; gauge the chain to real first");

    const BispectralData& bd = m.bispectral;
    const HeunParams hp = commuting_params(fd, bd, ell);
    const double lam_edge = bd.lambda_at(ell) + bd.lambda_at(ell + 1);
    const double omega_sum = fd.omega_K + fd.omega_K1;

    SymmetricTridiagonal t;
    t.diag.resize(ell + 1);
    t.off.resize(ell);
    for (std::size_t n = 0; n <= ell; ++n) {
        const double lam = bd.lambda[n];
        t.diag[n] = -m.chain.fields_B[n] * (2.0 * lam - lam_edge) - lam * omega_sum;
        if (n < ell)
            t.off[n] = m.chain.hoppings_J[n].real() *
                       ((bd.lambda[n] + bd.lambda[n + 1]) - lam_edge);
    }
    return finalize(std::move(t), hp, ell);
}

CommutantT closed_form_commutant(const Su2Params& p, const FermiData& fd, std::size_t ell) {
    if (p.two_s < 1) throw config_error("closed_form_commutant: two_s must be >= 1");
    if (ell + 1 > static_cast<std::size_t>(p.two_s) + 1)
        throw std::invalid_argument("closed_form_commutant: ell out of range");
    const double two_s = p.two_s;
    const double s = 0.5 * two_s;
    const double st = std::sin(p.theta);
    const double ct = std::cos(p.theta);
    const double K = static_cast<double>(fd.K);
    const double elld = static_cast<double>(ell);

    SymmetricTridiagonal t;
    t.diag.resize(ell + 1);
    t.off.resize(ell);
    for (std::size_t n = 0; n <= ell; ++n) {
        const double nd = static_cast<double>(n);
        t.diag[n] = (ct * (nd - s) + p.b) * (2.0 * nd - 2.0 * elld - 1.0) +
                    (s - nd) * (two_s - 2.0 * K + 2.0 * p.b - 1.0);
        if (n < ell)
            t.off[n] = st * (nd - elld) * std::sqrt((nd + 1.0) * (two_s - nd));
    }

    HeunParams hp;
    hp.mu = two_s + 2.0 * p.b - 2.0 * K - 1.0;     // -(omega_K + omega_{K+1})
    hp.nu = 2.0 * elld + 1.0 - two_s;              // -(lambda_ell + lambda_{ell+1})
    return finalize(std::move(t), hp, ell);
}

CommutantT closed_form_commutant(const Su11Params& p, const FermiData& fd, std::size_t ell) {
    if (p.kappa <= 0.0) throw config_error("closed_form_commutant: kappa must be > 0");
    const double sh = std::sinh(p.theta);
    const double ch = std::cosh(p.theta);
    const double half_kappa = 0.5 * p.kappa;
    const double K = static_cast<double>(fd.K);
    const double elld = static_cast<double>(ell);

    SymmetricTridiagonal t;
    t.diag.resize(ell + 1);
    t.off.resize(ell);
    for (std::size_t n = 0; n <= ell; ++n) {
        const double nd = static_cast<double>(n);
        t.diag[n] = (ch * (nd + half_kappa) + p.b) * (2.0 * nd - 2.0 * elld - 1.0) -
                    (nd + half_kappa) * (p.kappa + 2.0 * K + 2.0 * p.b + 1.0);
        if (n < ell)
            t.off[n] = -sh * (nd - elld) * std::sqrt((nd + 1.0) * (p.kappa + nd));
    }

    HeunParams hp;
    hp.mu = -(p.kappa + 2.0 * K + 2.0 * p.b + 1.0); // -(omega_K + omega_{K+1})
    hp.nu = -(2.0 * elld + 1.0 + p.kappa);          // -(lambda_ell + lambda_{ell+1})
    return finalize(std::move(t), hp, ell);
}

CommutantT closed_form_commutant(const SoQ3Params& p, const FermiData& fd, std::size_t ell) {
    if (p.root_order < 2 || p.rep_dim < 1 || p.rep_dim > p.root_order - 1)
        throw config_error("closed_form_commutant: invalid so_q(3) parameters");
    if (ell + 1 > static_cast<std::size_t>(p.rep_dim) + 1)
        throw std::invalid_argument("closed_form_commutant: ell out of range");
    const double N = p.root_order;
    const double d = p.rep_dim;
    const double K = static_cast<double>(fd.K);
    const double elld = static_cast<double>(ell);
    const double cos_half = std::cos(pi / (2.0 * N));
    const double sinK = std::sin(pi * (2.0 * K - d + 1.0) / (2.0 * N));
    const double sinL = std::sin(pi * (2.0 * elld - d + 1.0) / (2.0 * N));

    SymmetricTridiagonal t;
    t.diag.resize(ell + 1);
    t.off.resize(ell);
    for (std::size_t n = 0; n <= ell; ++n) {
        const double nd = static_cast<double>(n);
        const double lam_n = std::sin(pi * (2.0 * nd - d) / (2.0 * N));
        t.diag[n] = -2.0 * cos_half * (p.b * sinL + lam_n * sinK);
        if (n < ell) {
            double root = 1.0;
            if (p.rep_dim != p.root_order - 2) {
                const double s1 = std::sin(pi * (nd + 1.0) / N);
                const double s2 = std::sin(pi * (d - nd) / N);
                const double c1 = std::cos(pi * (d - 2.0 * nd - 2.0) / (2.0 * N));
                const double c2 = std::cos(pi * (d - 2.0 * nd) / (2.0 * N));
                root = std::sqrt((s1 * s2) / (c1 * c2));
            }
            t.off[n] = 2.0 * cos_half * std::sin(pi * (elld - nd) / (2.0 * N)) *
                       std::cos(pi * (elld + nd - d + 1.0) / (2.0 * N)) * root;
        }
    }

    HeunParams hp;
    hp.mu = -(2.0 * cos_half * sinK + 2.0 * p.b);  // -(omega_K + omega_{K+1})
    hp.nu = -2.0 * cos_half * sinL;                // -(lambda_ell + lambda_{ell+1})
    return finalize(std::move(t), hp, ell);
}

double commutator_residual(const CommutantT& t, const CorrelationChopped& c) {
    const auto n = static_cast<Eigen::Index>(t.matrix.size());
    if (n != c.entries.rows())
        throw std::invalid_argument("commutator_residual: size mismatch");

    // T C by bands, then R = TC - (TC)^T (both matrices are symmetric).
    Eigen::MatrixXd tc(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        for (Eigen::Index j = 0; j < n; ++j) {
            double v = t.matrix.diag[u] * c.entries(i, j);
            if (i > 0) v += t.matrix.off[u - 1] * c.entries(i - 1, j);
            if (i + 1 < n) v += t.matrix.off[u] * c.entries(i + 1, j);
            tc(i, j) = v;
        }
    }

    double comm_sq = 0.0, t_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        t_sq += t.matrix.diag[static_cast<std::size_t>(i)] *
                t.matrix.diag[static_cast<std::size_t>(i)];
        if (i + 1 < n)
            t_sq += 2.0 * t.matrix.off[static_cast<std::size_t>(i)] *
                    t.matrix.off[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = tc(i, j) - tc(j, i);
            comm_sq += r * r;
        }
    }
    const double c_norm = c.entries.norm();
    return std::sqrt(comm_sq) /
           (std::sqrt(t_sq) * c_norm + std::numeric_limits<double>::min());
}

} // namespace fermichain
