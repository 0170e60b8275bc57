#pragma once

/**
 * @file harmonic.hpp
 * @brief Exact stationary covariance of the harmonic chain (lambda = 0).
 *
 *   Phi^0 = ( X  Z )    X = (kT/omega^2)(G_kappa^{-1} + eta X0)
 *           (-Z  Y ),   Y = kT (1 + eta Y0)
 *                       Z = (kT/gamma) eta Z0
 *
 * with X0_ij = phi_{i+j-1}, Z0_ij = phi_{j-i}, Y0_ij = delta_ij(delta_i1 - delta_iN) - nu X0_ij
 * and phi_j = sinh((N-j)alpha)/sinh(N alpha) extended to j in [-N, 2N] by
 * phi_0 = phi_N = 0, phi_{-k} = -phi_k, phi_{N+k} = -phi_{N-k}.
 */

#include "sns/chain_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sns {

/// sinh(x*a)/sinh(y*a) for 0 <= |x| <= y, a > 0, without overflow.
inline double sinh_ratio(double x, double y, double a) {
    if (x == 0.0) return 0.0;
    const double s = x < 0.0 ? -1.0 : 1.0;
    const double ax = std::abs(x);
    return s * std::exp((ax - y) * a) * std::expm1(-2.0 * ax * a) / std::expm1(-2.0 * y * a);
}

/**
 * phi_1..phi_{N-1} with the sign-extension conventions. Index with
 * operator()(j) for any j in [-N, 2N].
 */
class ExtendedPhi {
public:
    ExtendedPhi() = default;
    ExtendedPhi(int n, Vector base) : n_(n), base_(std::move(base)) {
        if (base_.size() != n_ - 1) throw std::invalid_argument("ExtendedPhi: base must have N-1 entries");
    }

    int N() const { return n_; }
    const Vector& base() const { return base_; }

    double operator()(int j) const {
        if (j < -n_ || j > 2 * n_) {
            throw std::out_of_range("ExtendedPhi: index " + std::to_string(j) + " outside [-N, 2N]");
        }
        if (j == 0 || j == n_) return 0.0;
        if (j < 0) return -(*this)(-j);
        if (j > n_) return -(*this)(2 * n_ - j);
        return base_(j - 1);
    }

private:
    int n_ = 0;
    Vector base_;
};

/// Closed form phi_j = e^{-j alpha}(1 - e^{-2(N-j)alpha})/(1 - e^{-2N alpha}).
inline ExtendedPhi phi_vector(const ChainParams& p) {
    const double alpha = derive_scalars(p).alpha;
    Vector base(p.N - 1);
    for (int j = 1; j <= p.N - 1; ++j) base(j - 1) = sinh_ratio(p.N - j, p.N, alpha);
    return {p.N, base};
}

/// Same sequence from the (2+nu+kappa, -1) tridiagonal system with rhs e_1.
inline ExtendedPhi phi_vector_tridiagonal(const ChainParams& p) {
    const auto d = derive_scalars(p);
    Vector rhs = Vector::Zero(p.N - 1);
    rhs(0) = 1.0;
    return {p.N, solve_tridiagonal_toeplitz(2.0 + d.nu + p.kappa, -1.0, rhs)};
}

/// g_i = (G_kappa^{-1})_ii, 1-based accessor.
struct GVector {
    Vector g;

    double operator()(int i) const {
        if (i < 1 || i > g.size()) throw std::out_of_range("GVector: index " + std::to_string(i));
        return g(i - 1);
    }
};

/**
 * (G_kappa^{-1})_ij = sinh(min(i,j) ab) sinh((N+1-max(i,j)) ab) / (sinh(ab) sinh((N+1) ab)),
 * with the polynomial limit min(N+1-max)/(N+1) at kappa = 0.
 */
inline double g_inverse_entry(int n, double kappa, int i, int j) {
    const int lo = std::min(i, j);
    const int hi = std::max(i, j);
    if (kappa == 0.0) return static_cast<double>(lo) * (n + 1 - hi) / (n + 1);
    const double ab = std::acosh(1.0 + 0.5 * kappa);
    const double a = lo * ab;
    const double b = (n + 1 - hi) * ab;
    const double total = (n + 1) * ab;
    // sinh(a) sinh(b) / sinh(total), with a + b <= total
    const double ratio = std::exp(a + b - total) * std::expm1(-2.0 * a) * std::expm1(-2.0 * b) /
                         (-2.0 * std::expm1(-2.0 * total));
    return ratio / std::sinh(ab);
}

inline GVector g_vector(const ChainParams& p) {
    Vector g(p.N);
    for (int i = 1; i <= p.N; ++i) g(i - 1) = g_inverse_entry(p.N, p.kappa, i, i);
    return {g};
}

inline Matrix g_inverse(int n, double kappa) {
    Matrix m(n, n);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) m(i - 1, j - 1) = g_inverse_entry(n, kappa, i, j);
    return m;
}

/// Dimensionless pieces of Phi^0; the perturbation module reuses them.
struct HarmonicComponents {
    ExtendedPhi phi;
    Matrix Ginv;
    Matrix X0;
    Matrix Y0;
    Matrix Z0;
};

inline HarmonicComponents harmonic_components(const ChainParams& p) {
    const int n = p.N;
    const auto d = derive_scalars(p);
    HarmonicComponents h;
    h.phi = phi_vector(p);
    h.Ginv = g_inverse(n, p.kappa);
    h.X0.resize(n, n);
    h.Z0.resize(n, n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            h.X0(i - 1, j - 1) = h.phi(i + j - 1);
            h.Z0(i - 1, j - 1) = h.phi(j - i);
        }
    }
    h.Y0 = -d.nu * h.X0;
    h.Y0(0, 0) += 1.0;
    h.Y0(n - 1, n - 1) -= 1.0;
    return h;
}

/// Covariance in (X, Z; -Z, Y) block form.
struct CovarianceBlocks {
    Matrix X;
    Matrix Y;
    Matrix Z;

    Matrix assembled() const { return block2x2(X, Z, -Z, Y); }
};

inline CovarianceBlocks assemble_phi0(const ChainParams& p) {
    const auto d = derive_scalars(p);
    const auto h = harmonic_components(p);
    const double kt = p.kB * d.T;
    CovarianceBlocks c;
    c.X = (kt / (p.omega * p.omega)) * (h.Ginv + d.eta * h.X0);
    c.Y = kt * (Matrix::Identity(p.N, p.N) + d.eta * h.Y0);
    c.Z = (kt / p.gamma) * d.eta * h.Z0;
    return c;
}

/// Kinetic temperatures T_i = Y_ii.
inline Vector temperature_profile(const CovarianceBlocks& c) {
    return c.Y.diagonal();
}

/// Z_{i,i+1}, i = 1..N-1. Reported as the raw covariance entry; any
/// model-dependent prefactor of the physical current is left to the caller.
inline Vector heat_current(const CovarianceBlocks& c) {
    const Eigen::Index n = c.Z.rows();
    Vector j(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) j(i) = c.Z(i, i + 1);
    return j;
}

}  // namespace sns
