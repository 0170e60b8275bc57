#pragma once

/**
 * @file verify.hpp
 * @brief Deterministic check battery over a parameter grid, plus optional
 *        Monte Carlo checks.
 */

#include "sns/harmonic.hpp"
#include "sns/io.hpp"
#include "sns/lyapunov.hpp"
#include "sns/montecarlo.hpp"
#include "sns/perturbation.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sns {

struct CheckResult {
    std::string name;
    std::string case_label;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyGrid {
    std::vector<int> N{2, 4, 8, 16};
    std::vector<double> nu{0.5, 1.0, 2.0};
    std::vector<double> kappa{0.0, 0.1, 1.0};
    double omega = 1.0;
    double T1 = 2.0;
    double TN = 1.0;
};

struct VerifyOptions {
    bool negate_drift = false;  ///< tamper test: replaces b by -b in the harmonic checks
    std::optional<SimConfig> sim;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }

    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto& c : checks) n += c.passed ? 0 : 1;
        return n;
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& c : checks) {
            arr.push_back({{"name", c.name},
                           {"case", c.case_label},
                           {"passed", c.passed},
                           {"value", c.value},
                           {"tolerance", c.tolerance},
                           {"detail", c.detail}});
        }
        return {{"version", version_string()},
                {"passed", all_passed()},
                {"failures", failures()},
                {"total", checks.size()},
                {"checks", arr}};
    }
};

namespace detail {

/// value <= tol passes; exceptions become failures carrying the message.
inline void run_check(VerifyReport& r, const std::string& name, const std::string& label, double tol,
                      const std::function<double()>& fn) {
    CheckResult c{name, label, false, 0.0, tol, ""};
    try {
        c.value = fn();
        c.passed = std::isfinite(c.value) && c.value <= tol;
    } catch (const std::exception& e) {
        c.value = std::numeric_limits<double>::quiet_NaN();
        c.detail = e.what();
    }
    r.checks.push_back(std::move(c));
}

inline std::string case_label(const ChainParams& p) {
    std::ostringstream os;
    os << "N=" << p.N << " nu=" << derive_scalars(p).nu << " kappa=" << p.kappa;
    return os.str();
}

/// Defect of @p tag relative to max(||M||_max, 1), so blocks that vanish do not inflate it.
inline double scaled_defect(const Matrix& m, SymmetryTag tag) {
    const double norm = max_norm(m);
    return symmetry_defect(m, tag) * norm / std::max(norm, 1.0);
}

inline double max_offdiag_z(const Matrix& z) {
    double m = 0.0;
    for (Eigen::Index i = 0; i + 1 < z.rows(); ++i) m = std::max(m, std::abs(z(i, i + 1)));
    return m;
}

}  // namespace detail

/// Parameters of one grid point: omega fixed, gamma = omega / sqrt(nu).
inline ChainParams grid_params(int n, double nu, double kappa, double omega = 1.0, double t1 = 2.0, double tn = 1.0) {
    ChainParams p;
    p.N = n;
    p.omega = omega;
    p.gamma = omega / std::sqrt(nu);
    p.kappa = kappa;
    p.lambda = 0.0;
    p.T1 = t1;
    p.TN = tn;
    return p;
}

/// Harmonic and first-order checks for one parameter point.
inline void verify_point(VerifyReport& r, const ChainParams& p, const VerifyOptions& opt = {}) {
    using detail::run_check;
    const std::string label = detail::case_label(p);
    const int n = p.N;
    const auto s = build_struct_matrices(p);
    const Matrix b = opt.negate_drift ? Matrix(-s.b) : s.b;
    const Matrix phi0 = assemble_phi0(p).assembled();

    {
        CheckResult c{"drift_stability", label, false, 0.0, 0.0, ""};
        try {
            const auto st = check_drift_stability(b);
            c.value = st.spectral_abscissa;
            c.passed = st.stable;
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        r.checks.push_back(c);
    }
    run_check(r, "harmonic_residual", label, 1e-10,
              [&] { return lyapunov_residual(b, phi0, -s.D) / max_norm(s.D); });
    run_check(r, "harmonic_vs_dense", label, 1e-9, [&] { return max_norm(solve_lyapunov(b, -s.D).phi - phi0); });
    run_check(r, "phi_closed_vs_tridiagonal", label, 1e-10, [&] {
        if (n < 2) return 0.0;
        return max_norm(phi_vector(p).base() - phi_vector_tridiagonal(p).base());
    });

    std::optional<PerturbationDecomposition> dec;
    try {
        dec = solve_first_order_dense(p);
    } catch (const std::exception& e) {
        r.checks.push_back({"first_order_dense", label, false, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()});
        return;
    }
    const auto hc = harmonic_components(p);
    run_check(r, "first_order_residual", label, 1e-9,
              [&] { return std::max({dec->residuals[0], dec->residuals[1], dec->residuals[2]}); });
    run_check(r, "first_order_assembled_residual", label, 1e-9, [&] {
        const Matrix rhs = first_order_rhs(p);
        return lyapunov_residual(s.b, dec->full(), rhs) / std::max(max_norm(rhs), 1e-300);
    });
    run_check(r, "phi1_0_structure", label, 1e-10, [&] {
        const Matrix v0 = diagonal_part(hc.Ginv);
        const Matrix x0 = -hc.Ginv * v0 * hc.Ginv;
        return std::max({max_norm(dec->blocks[0].X - x0), max_norm(dec->blocks[0].Y), max_norm(dec->blocks[0].Z)});
    });
    run_check(r, "symmetry_table", label, 1e-10, [&] {
        const auto& b1 = dec->blocks[1];
        const auto& b2 = dec->blocks[2];
        using T = SymmetryTag;
        return std::max({detail::scaled_defect(b1.X, T::c_antisymmetric), detail::scaled_defect(b1.Y, T::c_antisymmetric),
                         detail::scaled_defect(b1.Z, T::c_symmetric), detail::scaled_defect(b1.Z, T::antisymmetric),
                         detail::scaled_defect(b2.X, T::c_symmetric), detail::scaled_defect(b2.Y, T::c_symmetric),
                         detail::scaled_defect(b2.Z, T::c_antisymmetric), detail::scaled_defect(b2.Z, T::antisymmetric)});
    });
    run_check(r, "z2_current_and_y2_11_zero", label, 1e-10, [&] {
        return std::max(detail::max_offdiag_z(dec->blocks[2].Z), std::abs(dec->blocks[2].Y(0, 0)));
    });
    run_check(r, "current_uniformity", label, 1e-10, [&] {
        const auto u = current_uniformity_check(*dec);
        return std::max(u.z1_spread, u.z2_max);
    });
    run_check(r, "current_pipeline_vs_dense", label, 1e-8,
              [&] { return n < 2 ? 0.0 : std::abs(current_pipeline(p).varphi(0) - dec->blocks[1].Z(0, 1)); });
    run_check(r, "current_pipeline_residual", label, 1e-10, [&] { return current_pipeline(p).residual; });
    run_check(r, "y1_structured_vs_dense", label, 1e-8,
              [&] { return max_norm(y1_diagonal_structured(p) - dec->blocks[1].Y.diagonal()); });
    run_check(r, "y2_pipeline_vs_dense", label, 1e-8,
              [&] { return max_norm(y2_profile(p, false).pipeline - dec->blocks[2].Y.diagonal()); });
    // The quadrature horizon grows like 1/|spectral abscissa| (about N^3), so
    // the integral form is only compared up to N = 8.
    if (n > 8) return;
    run_check(r, "integral_form_vs_lyapunov", label, 1e-7, [&] {
        const double horizon = std::log(1e9) / -check_drift_stability(s.b).spectral_abscissa;
        const auto q = first_order_integral_form(p, horizon, std::max(64, static_cast<int>(horizon / 0.25)));
        const Matrix full = dec->full();
        return max_norm(q.value - full) / max_norm(full);
    });
}

/// Monte Carlo checks with statistical tolerances (only with a sim config).
inline void verify_montecarlo(VerifyReport& r, const ChainParams& base, const SimConfig& sim) {
    ChainParams p = base;
    p.lambda = 0.0;
    const std::string label = detail::case_label(p);
    detail::run_check(r, "mc_stationary_covariance_3se_fraction_failing", label, 0.05, [&] {
        const auto est = estimate_stationary_covariance(p, sim);
        const Matrix phi0 = assemble_phi0(p).assembled();
        int bad = 0;
        for (Eigen::Index i = 0; i < phi0.rows(); ++i)
            for (Eigen::Index j = 0; j < phi0.cols(); ++j)
                bad += std::abs(est.mean(i, j) - phi0(i, j)) > 3.0 * est.standard_error(i, j) ? 1 : 0;
        return static_cast<double>(bad) / static_cast<double>(phi0.size());
    });
    detail::run_check(r, "linear_covariance_identity", label, 1e-8,
                      [&] { return linear_covariance_identity(p, 2.0).difference; });
}

inline VerifyReport run_verify(const VerifyGrid& grid = {}, const VerifyOptions& opt = {}) {
    VerifyReport r;
    for (int n : grid.N)
        for (double nu : grid.nu)
            for (double kappa : grid.kappa)
                verify_point(r, grid_params(n, nu, kappa, grid.omega, grid.T1, grid.TN), opt);
    return r;
}

}  // namespace sns
