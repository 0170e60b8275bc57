#pragma once

/**
 * @file lyapunov.hpp
 * @brief Stationary Lyapunov equations b*Phi + Phi*b^T = H for stable b,
 *        their integral representation, and the cross-diagonal symmetry
 *        algebra used to organise the first-order solution.
 */

#include "sns/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sns {

// ---------------------------------------------------------------------------
// Symmetry algebra
// ---------------------------------------------------------------------------

/// Transpose about the cross-diagonal: (M^C)_ij = M_{K+1-j, K+1-i}.
inline Matrix cross_transpose(const Eigen::Ref<const Matrix>& m) {
    require_square(m, "cross_transpose");
    return m.reverse().transpose();
}

/// J M J with J = (0, 1; 1, 0) in N x N blocks: swaps the qq/pp and qp/pq blocks.
inline Matrix swap_blocks(const Eigen::Ref<const Matrix>& m) {
    require_square(m, "swap_blocks");
    if (m.rows() % 2 != 0) {
        throw std::invalid_argument("swap_blocks: CT symmetry needs an even order, got " +
                                    std::to_string(m.rows()));
    }
    const Eigen::Index n = m.rows() / 2;
    return block2x2(m.bottomRightCorner(n, n), m.bottomLeftCorner(n, n),
                    m.topRightCorner(n, n), m.topLeftCorner(n, n));
}

enum class SymmetryTag {
    symmetric,
    antisymmetric,
    c_symmetric,
    c_antisymmetric,
    ct_symmetric,
    ct_antisymmetric,
    none,
};

inline const char* to_string(SymmetryTag t) {
    switch (t) {
        case SymmetryTag::symmetric: return "symmetric";
        case SymmetryTag::antisymmetric: return "antisymmetric";
        case SymmetryTag::c_symmetric: return "c_symmetric";
        case SymmetryTag::c_antisymmetric: return "c_antisymmetric";
        case SymmetryTag::ct_symmetric: return "ct_symmetric";
        case SymmetryTag::ct_antisymmetric: return "ct_antisymmetric";
        case SymmetryTag::none: return "none";
    }
    return "?";
}

using SymmetrySet = std::set<SymmetryTag>;

/**
 * Relative defect of the identity that defines @p tag, i.e.
 * ||M' -/+ M||_max / ||M||_max (0 for the zero matrix).
 */
inline double symmetry_defect(const Eigen::Ref<const Matrix>& m, SymmetryTag tag) {
    require_square(m, "symmetry_defect");
    const double scale = max_norm(m);
    double diff = 0.0;
    switch (tag) {
        case SymmetryTag::symmetric: diff = max_norm(m.transpose() - m); break;
        case SymmetryTag::antisymmetric: diff = max_norm(m.transpose() + m); break;
        case SymmetryTag::c_symmetric: diff = max_norm(cross_transpose(m) - m); break;
        case SymmetryTag::c_antisymmetric: diff = max_norm(cross_transpose(m) + m); break;
        case SymmetryTag::ct_symmetric: diff = max_norm(cross_transpose(m) - swap_blocks(m)); break;
        case SymmetryTag::ct_antisymmetric: diff = max_norm(cross_transpose(m) + swap_blocks(m)); break;
        case SymmetryTag::none: return 0.0;
    }
    if (scale == 0.0) return diff;
    return diff / scale;
}

/**
 * Every tag whose defining identity holds to relative tolerance @p tol.
 * CT tags are only tested when @p with_ct is set, which requires an even
 * order. An empty match yields {none}.
 */
inline SymmetrySet classify_symmetry(const Eigen::Ref<const Matrix>& m, double tol = 1e-12,
                                     bool with_ct = false) {
    require_square(m, "classify_symmetry");
    if (with_ct && m.rows() % 2 != 0) {
        throw std::invalid_argument("classify_symmetry: CT tags need an even order, got " +
                                    std::to_string(m.rows()));
    }
    SymmetrySet out;
    std::vector<SymmetryTag> candidates = {SymmetryTag::symmetric, SymmetryTag::antisymmetric,
                                           SymmetryTag::c_symmetric, SymmetryTag::c_antisymmetric};
    if (with_ct) {
        candidates.push_back(SymmetryTag::ct_symmetric);
        candidates.push_back(SymmetryTag::ct_antisymmetric);
    }
    for (auto tag : candidates) {
        if (symmetry_defect(m, tag) <= tol) out.insert(tag);
    }
    if (out.empty()) out.insert(SymmetryTag::none);
    return out;
}

// ---------------------------------------------------------------------------
// Direct solvers
// ---------------------------------------------------------------------------

/// max |b*Phi + Phi*b^T - H|
inline double lyapunov_residual(const Matrix& b, const Matrix& phi, const Matrix& h) {
    return max_norm(b * phi + phi * b.transpose() - h);
}

struct LyapunovSolution {
    Matrix phi;
    double relative_residual = 0.0;  ///< residual / max(||H||_max, tiny)
    std::optional<std::string> warning;
};

namespace detail {

struct SchurBlock {
    Eigen::Index start;
    Eigen::Index size;  // 1 or 2
};

inline std::vector<SchurBlock> schur_blocks(const Matrix& t) {
    std::vector<SchurBlock> blocks;
    const Eigen::Index n = t.rows();
    for (Eigen::Index i = 0; i < n;) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            blocks.push_back({i, 2});
            i += 2;
        } else {
            blocks.push_back({i, 1});
            i += 1;
        }
    }
    return blocks;
}

inline std::array<std::complex<double>, 2> block_eigenvalues(const Matrix& t, const SchurBlock& blk) {
    if (blk.size == 1) return {std::complex<double>(t(blk.start, blk.start)), {}};
    const auto a = t.block(blk.start, blk.start, 2, 2);
    const double half_tr = 0.5 * (a(0, 0) + a(1, 1));
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const std::complex<double> disc = std::sqrt(std::complex<double>(half_tr * half_tr - det));
    return {half_tr + disc, half_tr - disc};
}

// Solves A Y + Y B^T = C for blocks of order <= 2 via the Kronecker form.
inline Matrix solve_small_sylvester(const Matrix& a, const Matrix& bt_src, const Matrix& c) {
    const Eigen::Index p = a.rows();
    const Eigen::Index q = bt_src.rows();
    const Matrix sys = kron(Matrix::Identity(q, q), a) + kron(bt_src, Matrix::Identity(p, p));
    const Vector rhs = Eigen::Map<const Vector>(c.data(), p * q);
    const Vector y = sys.fullPivLu().solve(rhs);
    return Eigen::Map<const Matrix>(y.data(), p, q);
}

}  // namespace detail

/**
 * Solves b*Phi + Phi*b^T = H by Bartels-Stewart: real Schur form b = Q T Q^T,
 * then back-substitution over the quasi-triangular blocks of T.
 *
 * Throws std::domain_error when b has an eigenvalue with non-negative real
 * part. Poor separation of the spectrum or a residual above @p residual_tol
 * is reported through LyapunovSolution::warning.
 */
inline LyapunovSolution solve_lyapunov(const Matrix& b, const Matrix& h, double residual_tol = 1e-10) {
    require_square(b, "solve_lyapunov");
    require_square(h, "solve_lyapunov");
    if (b.rows() != h.rows()) throw std::invalid_argument("solve_lyapunov: order mismatch between b and H");
    if (!b.allFinite() || !h.allFinite()) throw std::invalid_argument("solve_lyapunov: non-finite input");

    const Eigen::Index n = b.rows();
    LyapunovSolution out;
    if (n == 0) {
        out.phi = Matrix(0, 0);
        return out;
    }

    Eigen::RealSchur<Matrix> schur(b);
    if (schur.info() != Eigen::Success) throw std::runtime_error("solve_lyapunov: real Schur decomposition failed");
    const Matrix& t = schur.matrixT();
    const Matrix& q = schur.matrixU();
    const auto blocks = detail::schur_blocks(t);

    std::vector<std::complex<double>> eig;
    for (const auto& blk : blocks) {
        const auto ev = detail::block_eigenvalues(t, blk);
        for (Eigen::Index k = 0; k < blk.size; ++k) eig.push_back(ev[static_cast<std::size_t>(k)]);
    }
    for (const auto& e : eig) {
        if (!(e.real() < 0.0)) {
            throw std::domain_error("solve_lyapunov: no unique stationary solution (drift eigenvalue with real part " +
                                    std::to_string(e.real()) + " >= 0)");
        }
    }
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eig.size(); ++i) {
        for (std::size_t j = i; j < eig.size(); ++j) sep = std::min(sep, std::abs(eig[i] + eig[j]));
    }

    const Matrix c = q.transpose() * h * q;
    Matrix y = Matrix::Zero(n, n);
    for (auto kb = blocks.rbegin(); kb != blocks.rend(); ++kb) {
        const Eigen::Index k0 = kb->start;
        const Eigen::Index kp = kb->size;
        const Eigen::Index k_tail = n - (k0 + kp);
        for (auto lb = blocks.rbegin(); lb != blocks.rend(); ++lb) {
            const Eigen::Index l0 = lb->start;
            const Eigen::Index lq = lb->size;
            const Eigen::Index l_tail = n - (l0 + lq);
            Matrix rhs = c.block(k0, l0, kp, lq);
            if (k_tail > 0) rhs.noalias() -= t.block(k0, k0 + kp, kp, k_tail) * y.block(k0 + kp, l0, k_tail, lq);
            if (l_tail > 0) {
                rhs.noalias() -= y.block(k0, l0 + lq, kp, l_tail) * t.block(l0, l0 + lq, lq, l_tail).transpose();
            }
            y.block(k0, l0, kp, lq) =
                detail::solve_small_sylvester(t.block(k0, k0, kp, kp), t.block(l0, l0, lq, lq), rhs);
        }
    }
    out.phi = q * y * q.transpose();

    const double hscale = std::max(max_norm(h), std::numeric_limits<double>::min());
    out.relative_residual = lyapunov_residual(b, out.phi, h) / hscale;
    const double bscale = std::max(max_norm(b), 1.0);
    if (sep < 1e-12 * bscale) {
        out.warning = "ill-conditioned: min |lambda_i + lambda_j| = " + std::to_string(sep);
    } else if (out.relative_residual > residual_tol) {
        out.warning = "residual " + std::to_string(out.relative_residual) + " exceeds tolerance";
    }
    return out;
}

/**
 * Reference solve through the n^2 x n^2 Kronecker system
 * (I (x) b + b (x) I) vec(Phi) = vec(H). Limited to order <= 24.
 */
inline Matrix solve_lyapunov_kronecker(const Matrix& b, const Matrix& h) {
    require_square(b, "solve_lyapunov_kronecker");
    require_square(h, "solve_lyapunov_kronecker");
    if (b.rows() != h.rows()) throw std::invalid_argument("solve_lyapunov_kronecker: order mismatch");
    const Eigen::Index n = b.rows();
    if (n > 24) throw std::invalid_argument("solve_lyapunov_kronecker: order " + std::to_string(n) + " > 24");
    const Matrix id = Matrix::Identity(n, n);
    const Matrix sys = kron(id, b) + kron(b, id);
    const Vector rhs = Eigen::Map<const Vector>(h.data(), n * n);
    const Vector x = sys.partialPivLu().solve(rhs);
    return Eigen::Map<const Matrix>(x.data(), n, n);
}

// ---------------------------------------------------------------------------
// Integral representation
// ---------------------------------------------------------------------------

struct QuadratureResult {
    Matrix value;
    double error_estimate = 0.0;
};

namespace detail {

struct GaussRule {
    std::vector<double> nodes;    // on [0, 1]
    std::vector<double> weights;  // sum to 1
};

inline GaussRule gauss_legendre(int points) {
    // Nodes and weights on [-1, 1], positive half only.
    std::vector<double> x, w;
    if (points == 4) {
        x = {0.3399810435848563, 0.8611363115940526};
        w = {0.6521451548625461, 0.3478548451374538};
    } else if (points == 8) {
        x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
        w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    } else {
        throw std::invalid_argument("gauss_legendre: only 4 and 8 points are tabulated");
    }
    GaussRule r;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (double s : {-1.0, 1.0}) {
            r.nodes.push_back(0.5 * (1.0 + s * x[i]));
            r.weights.push_back(0.5 * w[i]);
        }
    }
    return r;
}

}  // namespace detail

/**
 * Composite Gauss-Legendre approximation of int_0^t e^{bs} H e^{b^T s} ds
 * with @p panels equal panels. The error estimate is the 8-point vs 4-point
 * discrepancy.
 */
inline QuadratureResult gramian_quadrature(const Matrix& b, const Matrix& h, double t, int panels) {
    require_square(b, "gramian_quadrature");
    if (t < 0.0) throw std::invalid_argument("gramian_quadrature: negative time");
    if (panels < 1) throw std::invalid_argument("gramian_quadrature: panels must be >= 1");
    const Eigen::Index n = b.rows();
    QuadratureResult out{Matrix::Zero(n, n), 0.0};
    if (t == 0.0) return out;

    const double width = t / panels;
    const auto g8 = detail::gauss_legendre(8);
    const auto g4 = detail::gauss_legendre(4);
    auto node_exps = [&](const detail::GaussRule& g) {
        std::vector<Matrix> e;
        for (double x : g.nodes) e.push_back(expm(b * (x * width)));
        return e;
    };
    const auto e8 = node_exps(g8);
    const auto e4 = node_exps(g4);
    const Matrix step = expm(b * width);

    Matrix acc4 = Matrix::Zero(n, n);
    Matrix start = Matrix::Identity(n, n);  // e^{b t_k}
    for (int k = 0; k < panels; ++k) {
        const Matrix hs = start * h * start.transpose();
        for (std::size_t m = 0; m < e8.size(); ++m) {
            out.value.noalias() += (g8.weights[m] * width) * (e8[m] * hs * e8[m].transpose());
        }
        for (std::size_t m = 0; m < e4.size(); ++m) {
            acc4.noalias() += (g4.weights[m] * width) * (e4[m] * hs * e4[m].transpose());
        }
        start = step * start;
    }
    out.error_estimate = max_norm(out.value - acc4);
    return out;
}

/**
 * Phi = -int_0^horizon e^{bt} H e^{b^T t} dt, the truncated integral form of
 * the Lyapunov solution. Requires ||e^{b horizon}||_2 < 1e-8; otherwise
 * throws std::invalid_argument with a horizon that satisfies the bound.
 */
inline QuadratureResult integral_form(const Matrix& b, const Matrix& h, double horizon, int steps) {
    require_square(b, "integral_form");
    if (!(horizon > 0.0)) throw std::invalid_argument("integral_form: horizon must be > 0");
    auto two_norm = [](const Matrix& m) {
        return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
    };
    Eigen::EigenSolver<Matrix> es(b, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("integral_form: eigenvalue computation failed");
    const double abscissa = es.eigenvalues().real().maxCoeff();
    if (!(abscissa < 0.0)) throw std::domain_error("integral_form: drift is not stable");

    const double tail = two_norm(expm(b * horizon));
    if (!(tail < 1e-8)) {
        double suggested = std::max(horizon, std::log(1e8) / -abscissa);
        for (int i = 0; i < 64 && !(two_norm(expm(b * suggested)) < 1e-8); ++i) suggested *= 1.5;
        throw std::invalid_argument("integral_form: horizon " + std::to_string(horizon) +
                                    " too small (||e^{b T}|| = " + std::to_string(tail) +
                                    "); suggested horizon >= " + std::to_string(suggested));
    }
    auto q = gramian_quadrature(b, h, horizon, steps);
    q.value = -q.value;
    q.error_estimate += tail * tail * max_norm(q.value);
    return q;
}

/**
 * Expected Malliavin matrix of a linear SDE with constant noise fields:
 * int_0^t sum_k (e^{bs} X_k)(e^{bs} X_k)^T ds. @p panels = 0 picks a panel
 * width of at most 0.25.
 */
inline Matrix linear_malliavin_expectation(const Matrix& b, const std::vector<Vector>& noise_vectors, double t,
                                           int panels = 0) {
    require_square(b, "linear_malliavin_expectation");
    if (t < 0.0) throw std::invalid_argument("linear_malliavin_expectation: t must be >= 0");
    Matrix h = Matrix::Zero(b.rows(), b.rows());
    for (const auto& x : noise_vectors) {
        if (x.size() != b.rows()) throw std::invalid_argument("linear_malliavin_expectation: noise vector size");
        h.noalias() += x * x.transpose();
    }
    if (panels <= 0) panels = std::max(8, static_cast<int>(std::ceil(t / 0.25)));
    return gramian_quadrature(b, h, t, panels).value;
}

/**
 * Covariance at time t of the linear SDE dx = b x dt + noise with diffusion
 * matrix D, independent of the start point: Phi - e^{bt} Phi e^{b^T t}.
 */
inline Matrix linear_covariance_at(const Matrix& b, const Matrix& d, double t) {
    const Matrix phi = solve_lyapunov(b, -d).phi;
    const Matrix e = expm(b * t);
    return phi - e * phi * e.transpose();
}

}  // namespace sns
