#pragma once

/**
 * @file chain_model.hpp
 * @brief Harmonic oscillator chain with fixed ends, quartic on-site term and
 *        Langevin baths at sites 1 and N.
 *
 * Formulas are written 1-based in comments (site i = 1..N); storage is
 * 0-based. The phase-space vector is x = (q_1..q_N, p_1..p_N).
 *
 *   H = sum_i (p_i^2/2 + V(q_i)) + sum_{i=2}^N U(q_i - q_{i-1}) + U(q_1) + U(q_N)
 *   U(x) = omega^2 x^2 / 2,   V(x) = omega^2 kappa x^2 / 2 + lambda x^4 / 4
 *
 * The walls sit at q_0 = q_{N+1} = 0.
 */

#include "sns/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sns {

struct ChainParams {
    int N = 2;
    double omega = 1.0;
    double gamma = 1.0;
    double kappa = 0.0;
    double lambda = 0.0;
    double T1 = 1.0;
    double TN = 1.0;
    double kB = 1.0;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("ChainParams: " + msg); };
        if (N < 2) fail("N must be >= 2 (two distinct bath sites), got " + std::to_string(N));
        if (!(omega > 0.0) || !std::isfinite(omega)) fail("omega must be > 0");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be > 0");
        if (!(kappa >= 0.0) || !std::isfinite(kappa)) fail("kappa must be >= 0");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            fail("lambda must be >= 0 (quartic potential unbounded below otherwise)");
        if (!(T1 > 0.0) || !std::isfinite(T1)) fail("T1 must be > 0");
        if (!(TN > 0.0) || !std::isfinite(TN)) fail("TN must be > 0");
        if (!(kB > 0.0) || !std::isfinite(kB)) fail("kB must be > 0");
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << "N=" << N << " omega=" << omega << " gamma=" << gamma << " kappa=" << kappa
           << " lambda=" << lambda << " T1=" << T1 << " TN=" << TN << " kB=" << kB;
        return os.str();
    }

    friend bool operator==(const ChainParams&, const ChainParams&) = default;
};

/// Dimensionless combinations that the closed-form solutions depend on.
struct DerivedScalars {
    double T;         ///< (T1 + TN) / 2
    double eta;       ///< (T1 - TN) / (2T)
    double nu;        ///< omega^2 / gamma^2
    double alpha;     ///< cosh(alpha) = 1 + (nu + kappa)/2
    double alphaBar;  ///< cosh(alphaBar) = 1 + kappa/2
};

inline DerivedScalars derive_scalars(const ChainParams& p) {
    DerivedScalars d{};
    d.T = 0.5 * (p.T1 + p.TN);
    d.eta = (p.T1 - p.TN) / (2.0 * d.T);
    d.nu = (p.omega * p.omega) / (p.gamma * p.gamma);
    d.alpha = std::acosh(1.0 + 0.5 * (d.nu + p.kappa));
    d.alphaBar = std::acosh(1.0 + 0.5 * p.kappa);
    return d;
}

struct ChainState {
    Vector q;
    Vector p;

    static ChainState zero(int n) { return {Vector::Zero(n), Vector::Zero(n)}; }

    Vector stacked() const {
        Vector x(q.size() + p.size());
        x << q, p;
        return x;
    }

    static ChainState from_stacked(const Vector& x) {
        const Eigen::Index n = x.size() / 2;
        return {x.head(n), x.tail(n)};
    }

    bool finite() const { return q.allFinite() && p.allFinite(); }
};

struct StructMatrices {
    Matrix G_kappa;  ///< N x N, (2+kappa) on the diagonal, -1 next to it
    Matrix R;        ///< N x N, indicator of sites 1 and N
    Matrix b;        ///< 2N x 2N drift, (0, 1; -omega^2 G_kappa, -gamma R)
    Matrix D;        ///< 2N x 2N diffusion, pp-block diag(2 gamma k T1, 0, ..., 2 gamma k TN)
};

/// The dimensionless (2+kappa, -1) tridiagonal matrix of order n.
inline Matrix g_matrix(int n, double kappa) {
    return tridiagonal_toeplitz(n, 2.0 + kappa, -1.0);
}

inline Matrix boundary_indicator(int n) {
    Matrix r = Matrix::Zero(n, n);
    r(0, 0) = 1.0;
    r(n - 1, n - 1) = 1.0;
    return r;
}

inline StructMatrices build_struct_matrices(const ChainParams& p) {
    const int n = p.N;
    StructMatrices s;
    s.G_kappa = g_matrix(n, p.kappa);
    s.R = boundary_indicator(n);
    s.b = block2x2(Matrix::Zero(n, n), Matrix::Identity(n, n),
                   -p.omega * p.omega * s.G_kappa, -p.gamma * s.R);
    s.D = Matrix::Zero(2 * n, 2 * n);
    s.D(n, n) = 2.0 * p.gamma * p.kB * p.T1;
    s.D(2 * n - 1, 2 * n - 1) += 2.0 * p.gamma * p.kB * p.TN;
    return s;
}

/// Deterministic part of the equations of motion, b x - lambda (0, q^3).
inline Vector drift_field(const ChainParams& p, const ChainState& s) {
    const int n = p.N;
    const double w2 = p.omega * p.omega;
    Vector out(2 * n);
    out.head(n) = s.p;
    for (int i = 0; i < n; ++i) {
        const double left = i > 0 ? s.q(i - 1) : 0.0;
        const double right = i + 1 < n ? s.q(i + 1) : 0.0;
        const double qi = s.q(i);
        out(n + i) = -w2 * ((2.0 + p.kappa) * qi - left - right) - p.lambda * qi * qi * qi;
    }
    out(n) -= p.gamma * s.p(0);
    out(2 * n - 1) -= p.gamma * s.p(n - 1);
    return out;
}

inline double hamiltonian(const ChainParams& p, const ChainState& s) {
    const int n = p.N;
    const double w2 = p.omega * p.omega;
    auto U = [w2](double x) { return 0.5 * w2 * x * x; };
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        const double qi = s.q(i);
        h += 0.5 * s.p(i) * s.p(i) + 0.5 * w2 * p.kappa * qi * qi + 0.25 * p.lambda * qi * qi * qi * qi;
    }
    for (int i = 1; i < n; ++i) h += U(s.q(i) - s.q(i - 1));
    h += U(s.q(0)) + U(s.q(n - 1));
    return h;
}

struct StabilityReport {
    bool stable;
    double spectral_abscissa;  ///< max Re(eigenvalue)
};

/// Stable iff every eigenvalue of @p b has strictly negative real part.
inline StabilityReport check_drift_stability(const Matrix& b) {
    require_square(b, "check_drift_stability");
    Eigen::EigenSolver<Matrix> es(b, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("check_drift_stability: eigenvalue computation did not converge");
    }
    const double abscissa = es.eigenvalues().real().maxCoeff();
    return {abscissa < 0.0, abscissa};
}

inline StabilityReport check_drift_stability(const StructMatrices& m) {
    return check_drift_stability(m.b);
}

}  // namespace sns
