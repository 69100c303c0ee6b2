#include "fermichain/chain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fermichain/errors.hpp"

namespace fermichain {

namespace {
constexpr double pi = std::numbers::pi;
}

bool ChainSpec::is_real(double tol) const {
    double scale = 0.0;
    for (const cplx& j : hoppings_J) scale = std::max(scale, std::abs(j));
    for (const cplx& j : hoppings_J)
        if (std::abs(j.imag()) > tol * std::max(scale, 1.0)) return false;
    return true;
}

bool ChainSpec::is_irreducible() const {
    for (const cplx& j : hoppings_J)
        if (std::abs(j) == 0.0) return false;
    return true;
}

double BispectralData::lambda_at(std::size_t i) const {
    if (i < lambda.size()) return lambda[i];
    if (i == lambda.size()) return lambda_next;
    throw std::out_of_range("BispectralData::lambda_at: index past sites+1");
}

Model su2_chain(const Su2Params& p) {
    if (p.two_s < 1) throw config_error("su2_chain: two_s must be >= 1");
    const std::size_t sites = static_cast<std::size_t>(p.two_s) + 1;
    const double s = 0.5 * p.two_s;
    const double ct = std::cos(p.theta);
    const double st = std::sin(p.theta);

    Model m;
    m.chain.fields_B.resize(sites);
    m.chain.hoppings_J.resize(sites - 1);
    m.bispectral.lambda.resize(sites);
    std::vector<double> omega(sites), dual_B(sites), dual_J(sites - 1);

    for (std::size_t n = 0; n < sites; ++n) {
        const double nd = static_cast<double>(n);
        m.chain.fields_B[n] = ct * (nd - s) + p.b;
        m.bispectral.lambda[n] = s - nd;
        omega[n] = nd - s - p.b;        // ascending in k
        dual_B[n] = -ct * (nd - s);
        if (n + 1 < sites) {
            const double root = std::sqrt((nd + 1.0) * (p.two_s - nd));
            m.chain.hoppings_J[n] = -0.5 * st * root;
            dual_J[n] = 0.5 * st * root;
        }
    }
    m.bispectral.lambda_next = s - static_cast<double>(sites);
    m.bispectral.analytic_omega = std::move(omega);
    m.bispectral.dual_B = std::move(dual_B);
    m.bispectral.dual_J = std::move(dual_J);
    return m;
}

Model su11_chain_sized(const Su11Params& p, std::size_t sites) {
    if (p.kappa <= 0.0) throw config_error("su11_chain: kappa must be > 0");
    if (sites == 0) throw config_error("su11_chain: empty window");
    const double ch = std::cosh(p.theta);
    const double sh = std::sinh(p.theta);
    const double half_kappa = 0.5 * p.kappa;

    Model m;
    m.chain.fields_B.resize(sites);
    m.chain.hoppings_J.resize(sites - 1);
    m.bispectral.lambda.resize(sites);
    std::vector<double> omega(sites), dual_B(sites), dual_J(sites - 1);

    for (std::size_t n = 0; n < sites; ++n) {
        const double nd = static_cast<double>(n);
        m.chain.fields_B[n] = -ch * (nd + half_kappa) - p.b;
        m.bispectral.lambda[n] = nd + half_kappa;
        omega[n] = nd + half_kappa + p.b;
        dual_B[n] = -ch * (nd + half_kappa);
        if (n + 1 < sites) {
            const double root = std::sqrt((nd + 1.0) * (p.kappa + nd));
            m.chain.hoppings_J[n] = -0.5 * sh * root;
            dual_J[n] = 0.5 * sh * root;
        }
    }
    m.bispectral.lambda_next = static_cast<double>(sites) + half_kappa;
    m.bispectral.analytic_omega = std::move(omega);
    m.bispectral.dual_B = std::move(dual_B);
    m.bispectral.dual_J = std::move(dual_J);
    return m;
}

Model su11_chain(const Su11Params& p) {
    const TruncationConfig& t = p.truncation;
    if (t.initial_size == 0 || t.initial_size > t.max_size)
        throw config_error("su11_chain: truncation requires 0 < initial_size <= max_size");
    if (t.growth_factor <= 1.0) throw config_error("su11_chain: growth_factor must be > 1");
    if (t.window_tol <= 0.0) throw config_error("su11_chain: window_tol must be > 0");
    return su11_chain_sized(p, t.initial_size);
}

namespace {

// sqrt of the so_q(3) coupling ratio; equals 1 identically when d = N-2.
double soq3_root(int root_order, int rep_dim, int n) {
    const double N = root_order;
    const double d = rep_dim;
    if (rep_dim == root_order - 2) return 1.0;
    const double c1 = std::cos(pi * (d - 2.0 * n - 2.0) / (2.0 * N));
    const double c2 = std::cos(pi * (d - 2.0 * n) / (2.0 * N));
    if (c1 <= 0.0 || c2 <= 0.0)
        throw config_error("soq3_chain: vanishing cosine in coupling denominator");
    const double s1 = std::sin(pi * (n + 1.0) / N);
    const double s2 = std::sin(pi * (d - n) / N);
    const double ratio = (s1 * s2) / (c1 * c2);
    if (ratio <= 0.0)
        throw config_error("soq3_chain: non-positive square-root argument in coupling");
    return std::sqrt(ratio);
}

} // namespace

Model soq3_chain(const SoQ3Params& p) {
    if (p.root_order < 2) throw config_error("soq3_chain: root_order must be >= 2");
    if (p.rep_dim < 1 || p.rep_dim > p.root_order - 1)
        throw config_error("soq3_chain: rep_dim must satisfy 1 <= rep_dim <= root_order-1");
    const int d = p.rep_dim;
    const double N = p.root_order;
    const std::size_t sites = static_cast<std::size_t>(d) + 1;

    Model m;
    m.chain.fields_B.assign(sites, -p.b);
    m.chain.hoppings_J.resize(sites - 1);
    m.bispectral.lambda.resize(sites);
    std::vector<double> omega(sites), dual_B(sites, 0.0), dual_J(sites - 1);

    for (std::size_t n = 0; n < sites; ++n) {
        const double lam = std::sin(pi * (2.0 * static_cast<double>(n) - d) / (2.0 * N));
        m.bispectral.lambda[n] = lam;
        omega[n] = lam + p.b;
        if (n + 1 < sites) {
            const double root = soq3_root(p.root_order, d, static_cast<int>(n));
            m.chain.hoppings_J[n] = -0.5 * root;
            dual_J[n] = 0.5 * root;
        }
    }
    m.bispectral.lambda_next = std::sin(pi * (d + 2.0) / (2.0 * N));
    m.bispectral.analytic_omega = std::move(omega);
    m.bispectral.dual_B = std::move(dual_B);
    m.bispectral.dual_J = std::move(dual_J);
    return m;
}

HermitianTridiagonal build_hamiltonian(const ChainSpec& c) {
    const std::size_t n = c.sites();
    if (n == 0) throw std::invalid_argument("build_hamiltonian: empty chain");
    if (c.hoppings_J.size() + 1 != n)
        throw std::invalid_argument("build_hamiltonian: coupling count must be sites-1");
    HermitianTridiagonal h;
    h.diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) h.diag[i] = -c.fields_B[i];
    h.off = c.hoppings_J;
    return h;
}

BispectralReport verify_bispectral(const ChainSpec& c, const BispectralData& bd,
                                   const Spectrum& spec, std::size_t k_limit) {
    if (!bd.dual_B || !bd.dual_J)
        throw std::invalid_argument("verify_bispectral: dual couplings missing");
    const std::size_t n = c.sites();
    if (spec.size() != n || bd.lambda.size() != n)
        throw std::invalid_argument("verify_bispectral: size mismatch");
    if (!c.is_real())
        throw std::invalid_argument("verify_bispectral: requires real couplings");
    if (n == 0) return {};

    const Eigen::MatrixXd& v = spec.vectors;
    std::vector<double> J(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) J[i] = c.hoppings_J[i].real();

    BispectralReport rep;

    // Position-basis recurrence: omega_k phi_n = J_n phi_{n+1} - B_n phi_n + J_{n-1} phi_{n-1}.
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
            double rhs = -c.fields_B[m] * v(m, k);
            if (m + 1 < n) rhs += J[m] * v(m + 1, k);
            if (m > 0) rhs += J[m - 1] * v(m - 1, k);
            rep.recurrence_residual =
                std::max(rep.recurrence_residual, std::abs(rhs - spec.values[k] * v(m, k)));
        }
    }

    // Momentum-basis difference equation.  The computed eigenvectors carry an
    // arbitrary sign per column; recover a consistent gauge from the sign of
    // <omega_k| X |omega_{k+1}> against the model's dual coupling.
    const std::vector<double>& dB = *bd.dual_B;
    const std::vector<double>& dJ = *bd.dual_J;
    std::vector<double> sigma(n, 1.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double x = 0.0;
        for (std::size_t m = 0; m < n; ++m) x += bd.lambda[m] * v(m, k) * v(m, k + 1);
        const double want = dJ[k];
        const double prod = x * want;
        sigma[k + 1] = sigma[k] * (prod < 0.0 ? -1.0 : 1.0);
    }

    const std::size_t kmax = std::min(k_limit, n);
    for (std::size_t k = 0; k < kmax; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
            double rhs = -dB[k] * sigma[k] * v(m, k);
            if (k + 1 < n) rhs += dJ[k] * sigma[k + 1] * v(m, k + 1);
            if (k > 0) rhs += dJ[k - 1] * sigma[k - 1] * v(m, k - 1);
            rep.difference_residual = std::max(
                rep.difference_residual, std::abs(rhs - bd.lambda[m] * sigma[k] * v(m, k)));
        }
    }
    rep.k_checked = kmax;
    return rep;
}

} // namespace fermichain
