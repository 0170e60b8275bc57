#pragma once

/**
 * @file linalg.hpp
 * @brief Dense linear-algebra helpers shared by the solver modules.
 *
 * Everything here is a thin layer over Eigen: max-norms, Kronecker products,
 * the matrix exponential, and a Thomas-algorithm tridiagonal solve.
 */

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sns {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest absolute entry; 0 for an empty matrix or vector.
template <class Derived>
double max_norm(const Eigen::DenseBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.derived().cwiseAbs().maxCoeff();
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
    return m.allFinite();
}

inline void require_square(const Eigen::Ref<const Matrix>& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string(what) + ": matrix is not square (" +
                                    std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) + ")");
    }
}

/// a (x) b, the standard Kronecker product.
inline Matrix kron(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// e^{A}, scaling-and-squaring with a degree-13 Pade approximant.
inline Matrix expm(const Eigen::Ref<const Matrix>& a) {
    require_square(a, "expm");
    Matrix m = a;
    return m.exp();
}

/**
 * Solves the symmetric Toeplitz tridiagonal system with constant diagonal
 * @p diag and constant off-diagonal @p off (Thomas algorithm, no pivoting).
 * Used for the (2+nu+kappa, -1) systems, which are strictly diagonally
 * dominant.
 */
inline Vector solve_tridiagonal_toeplitz(double diag, double off, const Vector& rhs) {
    const Eigen::Index n = rhs.size();
    Vector x(n);
    if (n == 0) return x;
    Vector c(n);
    Vector d(n);
    double denom = diag;
    c(0) = off / denom;
    d(0) = rhs(0) / denom;
    for (Eigen::Index i = 1; i < n; ++i) {
        denom = diag - off * c(i - 1);
        if (denom == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot");
        c(i) = off / denom;
        d(i) = (rhs(i) - off * d(i - 1)) / denom;
    }
    x(n - 1) = d(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
    return x;
}

/// Dense tridiagonal Toeplitz matrix (diag on the diagonal, off on both neighbours).
inline Matrix tridiagonal_toeplitz(Eigen::Index n, double diag, double off) {
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = diag;
        if (i + 1 < n) {
            m(i, i + 1) = off;
            m(i + 1, i) = off;
        }
    }
    return m;
}

/// Commutator [a, b] = ab - ba.
inline Matrix commutator(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    return a * b - b * a;
}

/// Anticommutator {a, b} = ab + ba.
inline Matrix anticommutator(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    return a * b + b * a;
}

/// Assembles (tl, tr; bl, br) from four equally sized square blocks.
inline Matrix block2x2(const Matrix& tl, const Matrix& tr, const Matrix& bl, const Matrix& br) {
    const Eigen::Index n = tl.rows();
    Matrix m(2 * n, 2 * n);
    m.topLeftCorner(n, n) = tl;
    m.topRightCorner(n, n) = tr;
    m.bottomLeftCorner(n, n) = bl;
    m.bottomRightCorner(n, n) = br;
    return m;
}

}  // namespace sns
