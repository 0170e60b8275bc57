#pragma once

/**
 * @file perturbation.hpp
 * @brief First-order correction Phi^1 = dPhi^lambda/dlambda at lambda = 0.
 *
 * Phi^1 solves b Phi^1 + Phi^1 b^T = 3 (N Phi^0 + Phi^0 N^T) with
 * N = (0, 0; diag(Phi^0_x), 0). The right-hand side splits as
 * (3 k^2 T^2 / omega^4)(H0 + eta H1 + eta^2 H2), so
 *
 *   Phi^1 = (3 k^2 T^2 / omega^4)(Phi1_0 + eta Phi1_1 + eta^2 Phi1_2),
 *   Phi1_l = ( X_l/omega^2   Z_l/gamma )
 *            (-Z_l/gamma     Y_l       ),   b Phi1_l + Phi1_l b^T = H_l.
 *
 * Two independent routes are provided. The dense route solves each Lyapunov
 * equation directly. The structured route uses the commutator recursions
 * for [G, X] = U and the closed sums over phi and g for the heat current
 * (varphi), the temperature profile (Y1, Y2 diagonals) and the plateau
 * constant h. The dense route is the reference.
 *
 * All index formulas are 1-based; entries with an index of 0 or N+1 vanish.
 */

#include "sns/harmonic.hpp"
#include "sns/lyapunov.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sns {

// ---------------------------------------------------------------------------
// Inhomogeneity and dense solve
// ---------------------------------------------------------------------------

struct Inhomogeneity {
    Matrix H0;
    Matrix H1;
    Matrix H2;

    const Matrix& operator[](int l) const {
        switch (l) {
            case 0: return H0;
            case 1: return H1;
            case 2: return H2;
            default: throw std::out_of_range("Inhomogeneity: l must be 0, 1 or 2");
        }
    }
};

/// V0 = diag(G_kappa^{-1}) and V1 = diag(X0), as diagonal matrices.
inline Matrix diagonal_part(const Matrix& m) {
    return m.diagonal().asDiagonal();
}

inline Inhomogeneity build_inhomogeneity(const ChainParams& p, const HarmonicComponents& h) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    const Matrix zero = Matrix::Zero(n, n);
    const Matrix v0 = diagonal_part(h.Ginv);
    const Matrix v1 = diagonal_part(h.X0);
    const double gn = p.gamma * d.nu;
    Inhomogeneity out;
    out.H0 = block2x2(zero, h.Ginv * v0, v0 * h.Ginv, zero);
    out.H1 = block2x2(zero, h.X0 * v0 + h.Ginv * v1, v1 * h.Ginv + v0 * h.X0, gn * commutator(v0, h.Z0));
    out.H2 = block2x2(zero, h.X0 * v1, v1 * h.X0, gn * commutator(v1, h.Z0));
    return out;
}

inline Inhomogeneity build_inhomogeneity(const ChainParams& p) {
    return build_inhomogeneity(p, harmonic_components(p));
}

/// N = (0, 0; diag(Phi^0_x), 0).
inline Matrix quartic_mean_field(const CovarianceBlocks& phi0) {
    const Eigen::Index n = phi0.X.rows();
    return block2x2(Matrix::Zero(n, n), Matrix::Zero(n, n), diagonal_part(phi0.X), Matrix::Zero(n, n));
}

/// Full right-hand side 3 (N Phi^0 + Phi^0 N^T).
inline Matrix first_order_rhs(const ChainParams& p) {
    const auto c = assemble_phi0(p);
    const Matrix nm = quartic_mean_field(c);
    const Matrix phi0 = c.assembled();
    return 3.0 * (nm * phi0 + phi0 * nm.transpose());
}

struct PerturbationDecomposition {
    std::array<Matrix, 3> phi1;              ///< Phi1_l, in the chain's physical units
    std::array<CovarianceBlocks, 3> blocks;  ///< X_l, Y_l, Z_l (dimensionless)
    std::array<double, 3> residuals{};       ///< max |b Phi1_l + Phi1_l b^T - H_l| / ||H_l||_max
    double prefactor = 0.0;                  ///< 3 k^2 T^2 / omega^4
    double eta = 0.0;

    /// Phi^1 = prefactor (Phi1_0 + eta Phi1_1 + eta^2 Phi1_2)
    Matrix full() const { return prefactor * (phi1[0] + eta * phi1[1] + eta * eta * phi1[2]); }
};

inline CovarianceBlocks extract_scaled_blocks(const ChainParams& p, const Matrix& phi) {
    const int n = p.N;
    CovarianceBlocks c;
    c.X = p.omega * p.omega * phi.topLeftCorner(n, n);
    c.Z = p.gamma * phi.topRightCorner(n, n);
    c.Y = phi.bottomRightCorner(n, n);
    return c;
}

/// Dense solve of the l-th component only (l = 0, 1, 2).
inline Matrix solve_first_order_component(const ChainParams& p, const StructMatrices& s, const Inhomogeneity& h,
                                          int l, double* relative_residual = nullptr) {
    const auto sol = solve_lyapunov(s.b, h[l]);
    if (relative_residual) *relative_residual = sol.relative_residual;
    return sol.phi;
}

inline PerturbationDecomposition solve_first_order_dense(const ChainParams& p) {
    const auto d = derive_scalars(p);
    const auto s = build_struct_matrices(p);
    const auto h = build_inhomogeneity(p);
    PerturbationDecomposition out;
    out.prefactor = 3.0 * p.kB * p.kB * d.T * d.T / std::pow(p.omega, 4);
    out.eta = d.eta;
    for (int l = 0; l < 3; ++l) {
        out.phi1[l] = solve_first_order_component(p, s, h, l, &out.residuals[l]);
        out.blocks[l] = extract_scaled_blocks(p, out.phi1[l]);
    }
    return out;
}

/// Phi^1 from the integral form -int e^{bt} 3(N Phi^0 + Phi^0 N^T) e^{b^T t} dt.
inline QuadratureResult first_order_integral_form(const ChainParams& p, double horizon, int steps) {
    const auto s = build_struct_matrices(p);
    return integral_form(s.b, first_order_rhs(p), horizon, steps);
}

// ---------------------------------------------------------------------------
// Commutator recursions for [G, X] = U
// ---------------------------------------------------------------------------

namespace detail {

/// 1-based read access with zero outside 1..N.
struct OneBased {
    const Matrix& m;
    double operator()(int i, int j) const {
        const int n = static_cast<int>(m.rows());
        if (i < 1 || j < 1 || i > n || j > n) return 0.0;
        return m(i - 1, j - 1);
    }
};

inline void check_commutator(const Matrix& x, const Matrix& u, double tol, const char* what) {
    const int n = static_cast<int>(u.rows());
    // kappa drops out of the commutator, so the unshifted G is used.
    const Matrix g = g_matrix(n, 0.0);
    const double res = max_norm(commutator(g, x) - u);
    if (!(res <= tol * std::max(1.0, max_norm(u)))) {
        throw std::runtime_error(std::string("no ") + what + " solution: commutator residual " + std::to_string(res));
    }
}

}  // namespace detail

/// Residual max |[G, X] - U|.
inline double commutator_residual(const Matrix& x, const Matrix& u) {
    return max_norm(commutator(g_matrix(static_cast<int>(u.rows()), 0.0), x) - u);
}

/**
 * Antisymmetric X with [G, X] = U:
 *   X_ij = 1/2 sum_{k=0}^{i-1} sum_{l=0}^{j-i-1} U_{i+l-k, j-l-k-1},  i < j.
 * Throws std::runtime_error if the result does not satisfy the equation.
 */
inline Matrix solve_commutator_antisym(const Matrix& u, double tol = 1e-10) {
    require_square(u, "solve_commutator_antisym");
    const int n = static_cast<int>(u.rows());
    const detail::OneBased U{u};
    Matrix x = Matrix::Zero(n, n);
    for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            double s = 0.0;
            for (int k = 0; k <= i - 1; ++k)
                for (int l = 0; l <= j - i - 1; ++l) s += U(i + l - k, j - l - k - 1);
            x(i - 1, j - 1) = 0.5 * s;
            x(j - 1, i - 1) = -0.5 * s;
        }
    }
    detail::check_commutator(x, u, tol, "antisymmetric");
    return x;
}

/**
 * c-antisymmetric X with [G, X] = U:
 *   X_ij = 1/2 sum_{k=0}^{i-1} sum_{l=0}^{N-i-j} U_{i+l-k, j+l+k+1},  i + j <= N,
 * the rest by X_ij = -X_{N+1-j, N+1-i} (zero on the cross-diagonal).
 */
inline Matrix solve_commutator_c_antisym(const Matrix& u, double tol = 1e-10) {
    require_square(u, "solve_commutator_c_antisym");
    const int n = static_cast<int>(u.rows());
    const detail::OneBased U{u};
    Matrix x = Matrix::Zero(n, n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; i + j <= n; ++j) {
            double s = 0.0;
            for (int k = 0; k <= i - 1; ++k)
                for (int l = 0; l <= n - i - j; ++l) s += U(i + l - k, j + l + k + 1);
            x(i - 1, j - 1) = 0.5 * s;
        }
    }
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i + j > n + 1) x(i - 1, j - 1) = -x(n - j, n - i);
    detail::check_commutator(x, u, tol, "c-antisymmetric");
    return x;
}

/**
 * X both antisymmetric and c-antisymmetric with [G, X] = U:
 *   X_ij = -1/4 sum_{k=0}^{j-i-1} sum_{l=0}^{N-i-j} U_{i+l+k+1, j+l-k},  i < j, i + j <= N.
 */
inline Matrix solve_commutator_doubly_antisym(const Matrix& u, double tol = 1e-10) {
    require_square(u, "solve_commutator_doubly_antisym");
    const int n = static_cast<int>(u.rows());
    const detail::OneBased U{u};
    Matrix x = Matrix::Zero(n, n);
    for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; i + j <= n; ++j) {
            double s = 0.0;
            for (int k = 0; k <= j - i - 1; ++k)
                for (int l = 0; l <= n - i - j; ++l) s += U(i + l + k + 1, j + l - k);
            x(i - 1, j - 1) = -0.25 * s;
            x(j - 1, i - 1) = 0.25 * s;
        }
    }
    for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            if (i + j > n + 1) {
                x(i - 1, j - 1) = -x(n - j, n - i);
                x(j - 1, i - 1) = -x(i - 1, j - 1);
            }
        }
    }
    detail::check_commutator(x, u, tol, "antisymmetric and c-antisymmetric");
    return x;
}

/**
 * Symmetric, c-symmetric X with [G, X] = U from its first row:
 *   X_ij = sum_{k=1}^{i} X_{1, i+j-2k+1} - sum_{k=1}^{i-1} sum_{l=1}^{i-k} U_{i+1-k-l, j-k+l}
 * for 1 < i <= j, i + j <= N + 1; the remaining entries follow from the two
 * symmetries.
 */
inline Matrix reconstruct_from_first_row(const Matrix& u, const Vector& first_row, double tol = 1e-10) {
    require_square(u, "reconstruct_from_first_row");
    const int n = static_cast<int>(u.rows());
    if (first_row.size() != n) throw std::invalid_argument("reconstruct_from_first_row: first row must have N entries");
    const detail::OneBased U{u};
    auto row = [&](int m) { return (m >= 1 && m <= n) ? first_row(m - 1) : 0.0; };
    Matrix x = Matrix::Zero(n, n);
    x.row(0) = first_row.transpose();
    for (int i = 2; i <= n; ++i) {
        for (int j = i; i + j <= n + 1; ++j) {
            double s = 0.0;
            for (int k = 1; k <= i; ++k) s += row(i + j - 2 * k + 1);
            for (int k = 1; k <= i - 1; ++k)
                for (int l = 1; l <= i - k; ++l) s -= U(i + 1 - k - l, j - k + l);
            x(i - 1, j - 1) = s;
        }
    }
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j < i; ++j)
            if (i + j <= n + 1) x(i - 1, j - 1) = x(j - 1, i - 1);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i + j > n + 1) x(i - 1, j - 1) = x(n - j, n - i);
    detail::check_commutator(x, u, tol, "symmetric c-symmetric");
    return x;
}

// ---------------------------------------------------------------------------
// Heat current
// ---------------------------------------------------------------------------

struct CurrentPipeline {
    Vector ztilde;  ///< (N-1), first row of the [Z0, V0]-driven part of Z1, shifted
    Vector w1;
    Vector w2;
    Vector w;
    Vector varphi;  ///< G^{(N-1)}_{nu+kappa} varphi = -w
    double residual = 0.0;
    double current_correction = 0.0;  ///< (3 k^2 T (T1 - TN) / (2 gamma omega^4)) varphi_1
};

inline CurrentPipeline current_pipeline(const ChainParams& p) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    const auto phi = phi_vector(p);
    const auto g = g_vector(p);
    CurrentPipeline c;
    c.ztilde.resize(n - 1);
    c.w2.resize(n - 1);
    for (int j = 1; j <= n - 1; ++j) {
        double zt = 0.0;
        for (int l = 1; l <= j; ++l) zt += (g(j + 1 - l) - g(l)) * phi(j + 1 - 2 * l);
        c.ztilde(j - 1) = 0.5 * zt;

        double tail = 0.0;
        for (int l = 1; l <= n - j; ++l) tail += (g(l) - g(j + l)) * phi(j - 1 + 2 * l);
        c.w2(j - 1) = g(j + 1) * phi(j) + 0.5 * d.nu * tail;
    }
    c.w1 = g_matrix(n - 1, p.kappa) * c.ztilde;
    c.w = c.w1 + c.w2;
    const double diag = 2.0 + d.nu + p.kappa;
    c.varphi = solve_tridiagonal_toeplitz(diag, -1.0, -c.w);
    c.residual = max_norm(tridiagonal_toeplitz(n - 1, diag, -1.0) * c.varphi + c.w);
    c.current_correction =
        3.0 * p.kB * p.kB * d.T * (p.T1 - p.TN) / (2.0 * p.gamma * std::pow(p.omega, 4)) * c.varphi(0);
    return c;
}

struct CurrentUniformity {
    double z1_spread = 0.0;  ///< max - min of (Z1)_{i,i+1}
    double z2_max = 0.0;     ///< max |(Z2)_{i,i+1}|

    bool passed(double tol = 1e-10) const { return z1_spread <= tol && z2_max <= tol; }
};

inline CurrentUniformity current_uniformity_check(const PerturbationDecomposition& dec) {
    const Matrix& z1 = dec.blocks[1].Z;
    const Matrix& z2 = dec.blocks[2].Z;
    const Eigen::Index n = z1.rows();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    CurrentUniformity r;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        lo = std::min(lo, z1(i, i + 1));
        hi = std::max(hi, z1(i, i + 1));
        r.z2_max = std::max(r.z2_max, std::abs(z2(i, i + 1)));
    }
    r.z1_spread = n > 1 ? hi - lo : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Temperature profile, eta-linear part
// ---------------------------------------------------------------------------

struct Y1Profile {
    Vector exact;       ///< (Y1)_ii from the dense solve
    Vector structured;  ///< (Y1)_ii from the exact finite sums over phi, g and varphi
    Vector closed;      ///< leading bulk term, -(nu(2+kappa)(rho1-rho0)/(4+nu+2kappa)) sinh((N+1-2i)ab)/sinh((N+1)ab)
    Vector linear;      ///< kappa = 0 only: (2nu/(4+nu)^2)(2i/(N+1) - 1); empty otherwise
    double rho0 = 0.0;
    double rho1 = 0.0;
};

/// rho_sigma = sum_{k=1}^{[N/2]} (sinh((2k-sigma) ab)/sinh ab) phi_{2k-sigma}, sigma = 0, 1.
inline double rho_sum(const ChainParams& p, int sigma) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    double s = 0.0;
    for (int k = 1; k <= n / 2; ++k) {
        const int m = 2 * k - sigma;
        if (m >= n) continue;  // phi_N = 0
        // sinh(m ab) phi_m with phi_m = e^{-m alpha}(1 - e^{-2(N-m)alpha})/(1 - e^{-2N alpha})
        const double phi_scaled = std::expm1(-2.0 * (n - m) * d.alpha) / std::expm1(-2.0 * n * d.alpha);
        double weight;
        if (p.kappa == 0.0) {
            weight = m * std::exp(-m * d.alpha);
        } else {
            weight = 0.5 * (std::exp(m * (d.alphaBar - d.alpha)) - std::exp(-m * (d.alphaBar + d.alpha))) /
                     std::sinh(d.alphaBar);
        }
        s += weight * phi_scaled;
    }
    return s;
}

/// Large-N values of rho_0, rho_1 at kappa = 0: 1/(2 sinh^2 a) and cosh a/(2 sinh^2 a).
inline std::array<double, 2> rho_asymptotic_kappa0(double nu) {
    const double a = std::acosh(1.0 + 0.5 * nu);
    const double s2 = std::sinh(a) * std::sinh(a);
    return {1.0 / (2.0 * s2), std::cosh(a) / (2.0 * s2)};
}

/// (Y1)_ii for 1 <= i <= [N/2] by the exact finite sum; completed by c-antisymmetry.
inline Vector y1_diagonal_structured(const ChainParams& p) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    const auto phi = phi_vector(p);
    const auto g = g_vector(p);
    const auto cur = current_pipeline(p);
    const Vector z1_row = cur.varphi + cur.ztilde;  // (Z1)_{1, j+1}
    const Vector gz = g_matrix(n - 1, p.kappa) * z1_row;
    Vector y = Vector::Zero(n);
    for (int i = 1; i <= n / 2; ++i) {
        double inner = 0.0;
        for (int l = i; l <= n - i; ++l) {
            double gs = 0.0;
            for (int k = 0; k <= i - 1; ++k) gs += g(l - k) - g(l + k + 1);
            inner += phi(2 * l) * gs;
        }
        y(i - 1) = gz(2 * i - 2) + g(2 * i) * phi(2 * i - 1) + 0.5 * d.nu * inner;
    }
    for (int i = n / 2 + 1; i <= n; ++i) y(i - 1) = -y(n - i);
    return y;
}

inline Y1Profile y1_profile(const ChainParams& p, bool with_dense = true) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    Y1Profile out;
    if (with_dense) {
        const auto s = build_struct_matrices(p);
        const auto h = build_inhomogeneity(p);
        const Matrix phi11 = solve_first_order_component(p, s, h, 1);
        out.exact = phi11.bottomRightCorner(n, n).diagonal();
    }
    out.structured = y1_diagonal_structured(p);
    out.rho0 = rho_sum(p, 0);
    out.rho1 = rho_sum(p, 1);
    const double amp = d.nu * (2.0 + p.kappa) * (out.rho1 - out.rho0) / (4.0 + d.nu + 2.0 * p.kappa);
    out.closed.resize(n);
    for (int i = 1; i <= n; ++i) {
        const double x = n + 1 - 2 * i;
        const double ratio = p.kappa == 0.0 ? x / (n + 1) : sinh_ratio(x, n + 1, d.alphaBar);
        out.closed(i - 1) = -amp * ratio;
    }
    if (p.kappa == 0.0) {
        out.linear.resize(n);
        const double slope = 2.0 * d.nu / ((4.0 + d.nu) * (4.0 + d.nu));
        for (int i = 1; i <= n; ++i) out.linear(i - 1) = slope * (2.0 * i / (n + 1) - 1.0);
    }
    return out;
}

/// Least-squares slope of y_i against i over the middle third of the chain.
inline double middle_third_slope(const Vector& y) {
    const Eigen::Index n = y.size();
    const Eigen::Index lo = n / 3;
    const Eigen::Index hi = n - n / 3;
    const double k = static_cast<double>(hi - lo);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (Eigen::Index i = lo; i < hi; ++i) {
        const double x = static_cast<double>(i + 1);
        sx += x;
        sy += y(i);
        sxx += x * x;
        sxy += x * y(i);
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Temperature profile, eta^2 part and the plateau constant h
// ---------------------------------------------------------------------------

struct Y2Profile {
    Vector psi;       ///< N entries, psi_m = (Y2)_{1m}; only odd m >= 3 are computed (psi_1 = 0)
    Vector zeta;      ///< N entries, zeta_j = (Z2)_{1j}
    Vector delta;     ///< Delta_k, k = 1..[(N-1)/2]
    Vector pipeline;  ///< (Y2)_ii as partial sums of Delta_k, completed by c-symmetry
    Vector exact;     ///< (Y2)_ii from the dense solve (empty if not requested)
    double h1 = 0.0;
    double h2 = 0.0;
    double h = 0.0;             ///< h1 + nu h2 at this N
    double h_asymptotic = 0.0;  ///< -2 nu / ((nu+kappa)(2+nu+kappa)(4+nu+kappa))
};

/// Large-N plateau constant of the eta^2 temperature shift.
inline double plateau_asymptotic(double nu, double kappa) {
    const double s = nu + kappa;
    return -2.0 * nu / (s * (2.0 + s) * (4.0 + s));
}

/// Large-N limits of h1 and h2 separately, with cosh(alpha) = 1 + (nu+kappa)/2.
inline std::array<double, 2> plateau_parts_asymptotic(double nu, double kappa) {
    const double a = std::acosh(1.0 + 0.5 * (nu + kappa));
    const double ca = std::cosh(a);
    const double s2 = std::sinh(a) * std::sinh(a);
    const double ea_s3 = std::exp(a) * std::sinh(3.0 * a);
    const double h1 = ca * (ca - 1.0 - 0.5 * kappa) / (2.0 * ea_s3 * s2);
    const double h2 = -(1.0 / ca + ca / ea_s3) / (4.0 * s2);
    return {h1, h2};
}

inline Y2Profile y2_profile(const ChainParams& p, bool with_dense = true) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    const auto phi = phi_vector(p);
    Y2Profile out;
    out.psi = Vector::Zero(n);
    out.zeta = Vector::Zero(n);

    const int kmax = (n - 1) / 2;
    for (int k = 1; k <= kmax; ++k) {
        double s = 0.0;
        for (int m = 1; m <= k; ++m) {
            double inner = 0.0;
            for (int l = k; l <= n - k - 1; ++l) inner += phi(2 * (l + m) + 1) - phi(2 * (l - m) + 1);
            s += phi(2 * m) * inner;
        }
        out.psi(2 * k) = 0.5 * d.nu * s;  // psi_{2k+1}
    }
    for (int j = 2; j <= n - 1; ++j) {
        double s = 0.0;
        for (int m = 1; m <= j - 1; ++m) {
            double inner = 0.0;
            for (int l = 1; l <= n - j; ++l) inner += phi(2 * (l + m) - 1) - phi(2 * (j + l - m) - 1);
            s += phi(j - 2 * m) * inner;
        }
        out.zeta(j - 1) = 0.25 * s;
    }

    auto zeta = [&](int j) { return (j >= 1 && j <= n) ? out.zeta(j - 1) : 0.0; };
    auto psi_odd = [&](int k) { return out.psi(2 * k); };  // psi_{2k+1}
    auto bulk_sum = [&](int k) {
        double s = 0.0;
        for (int l = 1; l <= k; ++l) s += phi(2 * (k - l) + 1) - phi(2 * (k + l) - 1);
        return phi(2 * k) * s;
    };

    out.delta.resize(kmax);
    for (int k = 1; k <= kmax; ++k) {
        const double g_zeta = (2.0 + p.kappa) * zeta(2 * k) - zeta(2 * k - 1) - zeta(2 * k + 1);
        out.delta(k - 1) = psi_odd(k) - g_zeta - (phi(2 * k - 1) * phi(4 * k - 1) + d.nu * bulk_sum(k));
        out.h1 += 2.0 * zeta(2 * k + 1) - (2.0 + p.kappa) * zeta(2 * k) - phi(2 * k - 1) * phi(4 * k - 1);
        out.h2 += psi_odd(k) / d.nu - bulk_sum(k);
    }
    out.h = out.h1 + d.nu * out.h2;
    out.h_asymptotic = plateau_asymptotic(d.nu, p.kappa);

    out.pipeline = Vector::Zero(n);
    double acc = 0.0;
    for (int i = 2; i <= (n + 1) / 2; ++i) {
        acc += out.delta(i - 2);
        out.pipeline(i - 1) = acc;
    }
    for (int i = (n + 1) / 2 + 1; i <= n; ++i) out.pipeline(i - 1) = out.pipeline(n - i);

    if (with_dense) {
        const auto s = build_struct_matrices(p);
        const auto h = build_inhomogeneity(p);
        const Matrix phi12 = solve_first_order_component(p, s, h, 2);
        out.exact = phi12.bottomRightCorner(n, n).diagonal();
    }
    return out;
}

/**
 * First-order temperature correction (Phi^1_y)_ii
 * = (3 k^2 T^2 / omega^4)(eta (Y1)_ii + eta^2 (Y2)_ii), from the dense solve.
 * Multiply by lambda for the shift at small lambda.
 */
inline Vector temperature_correction(const ChainParams& p) {
    const auto d = derive_scalars(p);
    const int n = p.N;
    const double pref = 3.0 * p.kB * p.kB * d.T * d.T / std::pow(p.omega, 4);
    if (d.eta == 0.0) return Vector::Zero(n);
    const auto s = build_struct_matrices(p);
    const auto h = build_inhomogeneity(p);
    const Vector y1 = solve_first_order_component(p, s, h, 1).bottomRightCorner(n, n).diagonal();
    const Vector y2 = solve_first_order_component(p, s, h, 2).bottomRightCorner(n, n).diagonal();
    return pref * (d.eta * y1 + d.eta * d.eta * y2);
}

}  // namespace sns
