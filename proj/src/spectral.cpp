#include "fermichain/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fermichain/errors.hpp"

namespace fermichain {

bool HermitianTridiagonal::is_real(double tol) const {
    const double scale = max_row_norm(*this);
    for (const cplx& j : off)
        if (std::abs(j.imag()) > tol * scale) return false;
    return true;
}

Eigen::MatrixXcd HermitianTridiagonal::dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = diag[static_cast<std::size_t>(i)];
        if (i + 1 < n) {
            a(i, i + 1) = off[static_cast<std::size_t>(i)];
            a(i + 1, i) = std::conj(off[static_cast<std::size_t>(i)]);
        }
    }
    return a;
}

Eigen::MatrixXd SymmetricTridiagonal::dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = diag[static_cast<std::size_t>(i)];
        if (i + 1 < n) {
            a(i, i + 1) = off[static_cast<std::size_t>(i)];
            a(i + 1, i) = off[static_cast<std::size_t>(i)];
        }
    }
    return a;
}

double max_row_norm(const SymmetricTridiagonal& m) {
    double norm = 0.0;
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
        double row = std::abs(m.diag[i]);
        if (i > 0) row += std::abs(m.off[i - 1]);
        if (i + 1 < n) row += std::abs(m.off[i]);
        norm = std::max(norm, row);
    }
    return norm;
}

double max_row_norm(const HermitianTridiagonal& m) {
    double norm = 0.0;
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
        double row = std::abs(m.diag[i]);
        if (i > 0) row += std::abs(m.off[i - 1]);
        if (i + 1 < n) row += std::abs(m.off[i]);
        norm = std::max(norm, row);
    }
    return norm;
}

double max_row_norm(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double max_row_norm(const Eigen::MatrixXcd& a) {
    if (a.rows() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

Eigen::VectorXd apply(const SymmetricTridiagonal& m, const Eigen::VectorXd& x) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        double v = m.diag[u] * x(i);
        if (i > 0) v += m.off[u - 1] * x(i - 1);
        if (i + 1 < n) v += m.off[u] * x(i + 1);
        y(i) = v;
    }
    return y;
}

GaugeResult gauge_to_real(const HermitianTridiagonal& m) {
    const std::size_t n = m.size();
    GaugeResult out;
    out.matrix.diag = m.diag;
    out.matrix.off.resize(n > 0 ? n - 1 : 0);
    out.phases.assign(n, cplx(1.0, 0.0));
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double r = std::abs(m.off[j]);
        out.matrix.off[j] = r;
        // (D m D^H)_{j,j+1} = phases[j] * off[j] * conj(phases[j+1]) = |off[j]|
        out.phases[j + 1] = (r == 0.0) ? out.phases[j] : out.phases[j] * (m.off[j] / r);
    }
    return out;
}

SymmetricTridiagonal as_symmetric(const HermitianTridiagonal& m, double tol) {
    const double scale = max_row_norm(m);
    SymmetricTridiagonal out;
    out.diag = m.diag;
    out.off.reserve(m.off.size());
    for (const cplx& j : m.off) {
        if (std::abs(j.imag()) > tol * scale)
            throw std::invalid_argument("as_symmetric: complex coupling present; gauge_to_real first");
        out.off.push_back(j.real());
    }
    return out;
}

namespace {

// Fix the phase of each column: first component of largest magnitude positive.
void fix_column_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double a = std::abs(v(i, k));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (v(imax, k) < 0.0) v.col(k) = -v.col(k);
    }
}

void fix_column_signs(Eigen::MatrixXcd& v) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double a = std::abs(v(i, k));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (best > 0.0) {
            const cplx phase = v(imax, k) / std::abs(v(imax, k));
            v.col(k) *= std::conj(phase);
        }
    }
}

template <typename Mat>
void sort_ascending(std::vector<double>& d, Mat& z) {
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    std::vector<double> ds(n);
    Mat zs(z.rows(), z.cols());
    for (std::size_t k = 0; k < n; ++k) {
        ds[k] = d[order[k]];
        zs.col(static_cast<Eigen::Index>(k)) = z.col(static_cast<Eigen::Index>(order[k]));
    }
    d.swap(ds);
    z.swap(zs);
}

} // namespace

Spectrum eig_tridiagonal(const SymmetricTridiagonal& m) {
    const std::size_t n = m.size();
    if (n == 0) throw std::invalid_argument("eig_tridiagonal: empty matrix");
    if (m.off.size() + 1 != n)
        throw std::invalid_argument("eig_tridiagonal: band length mismatch");

    std::vector<double> d = m.diag;
    std::vector<double> e(n, 0.0);
    std::copy(m.off.begin(), m.off.end(), e.begin());
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));

    // Implicit-shift QL sweeps (tql2 lineage).  QL rather than QR: the model
    // chains are graded with the small entries in the top-left corner.
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const int nn = static_cast<int>(n);
    for (int l = 0; l < nn; ++l) {
        int iter = 0;
        int mm;
        do {
            for (mm = l; mm + 1 < nn; ++mm) {
                const double dd = std::abs(d[mm]) + std::abs(d[mm + 1]);
                if (std::abs(e[mm]) <= eps * dd) break;
            }
            if (mm != l) {
                if (iter++ == 60)
                    throw numerical_error("eig_tridiagonal: QL iteration failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[mm] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i = mm - 1;
                for (; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) { // negligible rotation: deflate and restart
                        d[i + 1] -= p;
                        e[mm] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < nn; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[mm] = 0.0;
            }
        } while (mm != l);
    }

    sort_ascending(d, z);
    fix_column_signs(z);
    return Spectrum{std::move(d), std::move(z)};
}

namespace {

template <typename Mat>
void check_hermitian(const Mat& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("eig_dense_hermitian: matrix not square");
    const double scale = max_row_norm(a);
    const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(scale, 1e-300))
        throw std::invalid_argument("eig_dense_hermitian: input not Hermitian");
}

} // namespace

Spectrum eig_dense_hermitian(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) throw std::invalid_argument("eig_dense_hermitian: empty matrix");
    check_hermitian(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success)
        throw numerical_error("eig_dense_hermitian: solver did not converge");
    Spectrum out;
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
    out.vectors = es.eigenvectors();
    fix_column_signs(out.vectors);
    return out;
}

ComplexSpectrum eig_dense_hermitian(const Eigen::MatrixXcd& a) {
    if (a.rows() == 0) throw std::invalid_argument("eig_dense_hermitian: empty matrix");
    check_hermitian(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
    if (es.info() != Eigen::Success)
        throw numerical_error("eig_dense_hermitian: solver did not converge");
    ComplexSpectrum out;
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
    out.vectors = es.eigenvectors();
    fix_column_signs(out.vectors);
    return out;
}

} // namespace fermichain
