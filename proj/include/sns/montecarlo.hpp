#pragma once

/**
 * @file montecarlo.hpp
 * @brief Langevin simulation of the anharmonic chain.
 *
 *   dq_i = p_i dt
 *   dp_i = (-omega^2 (G_kappa q)_i - lambda q_i^3 - gamma R_ii p_i) dt + sqrt(2 gamma k T_i) dw_i
 *
 * with noise on p_1 and p_N only. One step updates p from the current state
 * and then q with the new p (semi-implicit Euler-Maruyama, weak order 1).
 *
 * Covariance estimators pair p_{n+1} with the midpoint position
 * (q_n + q_{n+1})/2 = q_{n+1} - (dt/2) p_{n+1}; with the raw q_{n+1} the
 * scheme gives E[q_i p_i] = (dt/2) E[p_i^2] instead of 0.
 *
 * Random numbers come from a counter-based generator keyed by
 * (seed, stream); every trajectory owns a stream, so results do not depend
 * on how trajectories are scheduled.
 */

#include "sns/harmonic.hpp"
#include "sns/lyapunov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sns {

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based 64-bit generator: output n of stream s is a hash of (seed, s, n).
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(splitmix64(seed ^ splitmix64(stream ^ 0xD1B54A32D192ED03ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Standard normal draws from one stream.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    double operator()() { return dist_(rng_); }

private:
    CounterRng rng_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Largest diagonal entry of G_kappa^{-1}.
inline double g_inverse_max_diagonal(int n, double kappa) {
    double m = 0.0;
    for (int i = 1; i <= n; ++i) m = std::max(m, g_inverse_entry(n, kappa, i, i));
    return m;
}

/**
 * dt_max = 0.01 min(1/gamma, 1/omega, 1/sqrt(omega^2 (4+kappa) + 3 lambda q_guard^2))
 * with q_guard = 5 sqrt(k T_max g_max / omega^2), five harmonic standard
 * deviations of the widest site.
 */
inline double dt_max(const ChainParams& p) {
    const double tmax = std::max(p.T1, p.TN);
    const double qg = 5.0 * std::sqrt(p.kB * tmax * g_inverse_max_diagonal(p.N, p.kappa) / (p.omega * p.omega));
    const double stiff = p.omega * p.omega * (4.0 + p.kappa) + 3.0 * p.lambda * qg * qg;
    return 0.01 * std::min({1.0 / p.gamma, 1.0 / p.omega, 1.0 / std::sqrt(stiff)});
}

/// 20/gamma max(1, 1/alpha).
inline double default_burn_in(const ChainParams& p) {
    return 20.0 / p.gamma * std::max(1.0, 1.0 / derive_scalars(p).alpha);
}

struct SimConfig {
    double dt = 0.005;
    double t_burn = 50.0;
    double t_total = 1050.0;  ///< simulated time per trajectory, burn-in included
    int n_traj = 8;
    std::uint64_t seed = 1;
    int batch_count = 8;
    int monitor_stride = 1000;       ///< steps between energy samples and divergence checks
    double divergence_guard = 1e6;   ///< max |x_i| before the run is aborted

    double measurement_time() const { return t_total - t_burn; }

    void validate(const ChainParams& p) const {
        auto fail = [](const std::string& m) { throw std::invalid_argument("SimConfig: " + m); };
        if (!(dt > 0.0)) fail("dt must be > 0");
        const double dmax = dt_max(p);
        if (dt > dmax * (1.0 + 1e-12)) fail("dt " + std::to_string(dt) + " exceeds dt_max " + std::to_string(dmax));
        if (!(t_burn >= 0.0)) fail("t_burn must be >= 0");
        if (!(t_total > t_burn)) fail("t_total must exceed t_burn");
        if (n_traj < 1) fail("n_traj must be >= 1");
        if (batch_count < 8) fail("batch_count must be >= 8");
        if (monitor_stride < 1) fail("monitor_stride must be >= 1");
        if (!(divergence_guard > 0.0)) fail("divergence_guard must be > 0");
        if (std::llround(measurement_time() / dt) < batch_count) fail("measurement window shorter than batch_count steps");
    }
};

struct SimEstimate {
    Matrix mean;
    Matrix standard_error;
    double effective_samples = 0.0;
};

// ---------------------------------------------------------------------------
// Integrator
// ---------------------------------------------------------------------------

namespace detail {

struct Kernel {
    int n;
    double dt;
    double w2;
    double diag;
    double lambda;
    double gamma;
    double s1;
    double sN;

    Kernel(const ChainParams& p, double step)
        : n(p.N), dt(step), w2(p.omega * p.omega), diag(2.0 + p.kappa), lambda(p.lambda), gamma(p.gamma),
          s1(std::sqrt(2.0 * p.gamma * p.kB * p.T1 * step)), sN(std::sqrt(2.0 * p.gamma * p.kB * p.TN * step)) {}

    void step(Vector& q, Vector& p, double z1, double zN) const {
        for (int i = 0; i < n; ++i) {
            const double left = i > 0 ? q(i - 1) : 0.0;
            const double right = i + 1 < n ? q(i + 1) : 0.0;
            const double qi = q(i);
            const double friction = (i == 0 || i == n - 1) ? gamma * p(i) : 0.0;
            p(i) += dt * (-w2 * (diag * qi - left - right) - lambda * qi * qi * qi - friction);
        }
        p(0) += s1 * z1;
        p(n - 1) += sN * zN;
        q.noalias() += dt * p;
    }

    /// Pushes a tangent vector (dq, dp) through one step taken from q.
    void tangent(const Vector& q, double* dq, double* dp) const {
        for (int i = 0; i < n; ++i) {
            const double left = i > 0 ? dq[i - 1] : 0.0;
            const double right = i + 1 < n ? dq[i + 1] : 0.0;
            const double friction = (i == 0 || i == n - 1) ? gamma * dp[i] : 0.0;
            dp[i] += dt * (-w2 * (diag * dq[i] - left - right) - 3.0 * lambda * q(i) * q(i) * dq[i] - friction);
        }
        for (int i = 0; i < n; ++i) dq[i] += dt * dp[i];
    }
};

inline void check_divergence(const Vector& q, const Vector& p, double guard) {
    const bool ok = q.allFinite() && p.allFinite() && max_norm(q) <= guard && max_norm(p) <= guard;
    if (!ok) throw std::runtime_error("integrator divergence; reduce dt");
}

/// Runs fn(i) for i in [0, count) on the available cores. Each index owns its output slot.
template <class Fn>
void for_each_index(int count, Fn&& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(std::max(count, 1))));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct IntegrationStats {
    std::size_t steps = 0;
    std::vector<double> energy_times;
    std::vector<double> energy;
};

/**
 * Integrates from @p initial for llround(t_end / dt) steps on random stream
 * @p stream. After every step observer(step, t, state) is called. Energy is
 * sampled every monitor_stride steps. Parameters are not validated here so
 * that degenerate fixtures (gamma = 0, zero temperature) can be run.
 */
template <class Observer>
ChainState integrate(const ChainParams& p, const SimConfig& c, ChainState initial, double t_end, std::uint64_t stream,
                     Observer&& observer, IntegrationStats* stats = nullptr) {
    if (!(c.dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
    if (initial.q.size() != p.N || initial.p.size() != p.N) throw std::invalid_argument("integrate: state size");
    const detail::Kernel k(p, c.dt);
    GaussianStream normal(c.seed, stream);
    const long long steps = std::llround(t_end / c.dt);
    Vector q = std::move(initial.q);
    Vector pm = std::move(initial.p);
    if (stats) {
        stats->energy_times.push_back(0.0);
        stats->energy.push_back(hamiltonian(p, {q, pm}));
    }
    for (long long s = 1; s <= steps; ++s) {
        const double z1 = normal();
        const double zN = normal();
        k.step(q, pm, z1, zN);
        if (s % c.monitor_stride == 0 || s == steps) {
            detail::check_divergence(q, pm, c.divergence_guard);
            if (stats) {
                stats->energy_times.push_back(s * c.dt);
                stats->energy.push_back(hamiltonian(p, {q, pm}));
            }
        }
        observer(s, s * c.dt, q, pm);
    }
    if (stats) stats->steps = static_cast<std::size_t>(steps);
    return {q, pm};
}

inline ChainState integrate(const ChainParams& p, const SimConfig& c, ChainState initial, double t_end,
                            std::uint64_t stream = 0, IntegrationStats* stats = nullptr) {
    return integrate(p, c, std::move(initial), t_end, stream, [](long long, double, const Vector&, const Vector&) {},
                     stats);
}

struct Trajectory {
    std::vector<double> t;
    std::vector<Vector> x;  ///< stacked (q, p)
};

inline Trajectory record_trajectory(const ChainParams& p, const SimConfig& c, const ChainState& initial, double t_end,
                                    int stride, std::uint64_t stream = 0) {
    if (stride < 1) throw std::invalid_argument("record_trajectory: stride must be >= 1");
    Trajectory tr;
    tr.t.push_back(0.0);
    tr.x.push_back(initial.stacked());
    integrate(p, c, initial, t_end, stream, [&](long long s, double t, const Vector& q, const Vector& pm) {
        if (s % stride == 0) {
            Vector x(q.size() + pm.size());
            x << q, pm;
            tr.t.push_back(t);
            tr.x.push_back(std::move(x));
        }
    });
    return tr;
}

// ---------------------------------------------------------------------------
// Stationary covariance
// ---------------------------------------------------------------------------

namespace detail {

inline void require_stable(const ChainParams& p) {
    if (!check_drift_stability(build_struct_matrices(p)).stable) {
        throw std::domain_error("linear drift is not stable; no stationary state");
    }
}

/// Per (trajectory, batch) covariance samples, trajectory-major order.
inline std::vector<Matrix> covariance_batches(const ChainParams& p, const SimConfig& c) {
    const int n = p.N;
    const long long burn = std::llround(c.t_burn / c.dt);
    const long long meas = std::llround(c.measurement_time() / c.dt);
    const long long per = meas / c.batch_count;
    std::vector<std::vector<Matrix>> out(c.n_traj);
    for_each_index(c.n_traj, [&](int traj) {
        std::vector<Matrix> s2(c.batch_count, Matrix::Zero(2 * n, 2 * n));
        Vector s1 = Vector::Zero(2 * n);
        Vector x(2 * n);
        integrate(p, c, ChainState::zero(n), (burn + per * c.batch_count) * c.dt, static_cast<std::uint64_t>(traj),
                  [&](long long s, double, const Vector& q, const Vector& pm) {
                      if (s <= burn) return;
                      const long long b = (s - burn - 1) / per;
                      x << q - (0.5 * c.dt) * pm, pm;
                      s1 += x;
                      s2[b].selfadjointView<Eigen::Lower>().rankUpdate(x);
                  });
        const Vector m = s1 / static_cast<double>(per * c.batch_count);
        for (auto& a : s2) {
            Matrix full = a.selfadjointView<Eigen::Lower>();
            a = full / static_cast<double>(per) - m * m.transpose();
        }
        out[traj] = std::move(s2);
    });
    std::vector<Matrix> flat;
    for (auto& v : out)
        for (auto& m : v) flat.push_back(std::move(m));
    return flat;
}

inline SimEstimate summarize(const std::vector<Matrix>& samples) {
    const double count = static_cast<double>(samples.size());
    SimEstimate e;
    e.mean = Matrix::Zero(samples.front().rows(), samples.front().cols());
    for (const auto& s : samples) e.mean += s;
    e.mean /= count;
    Matrix var = Matrix::Zero(e.mean.rows(), e.mean.cols());
    for (const auto& s : samples) var += (s - e.mean).cwiseAbs2();
    var /= std::max(1.0, count - 1.0);
    e.standard_error = (var / count).cwiseSqrt();
    e.effective_samples = count;
    return e;
}

}  // namespace detail

/**
 * Time average of (x - m)(x - m)^T after burn-in, m the trajectory mean.
 * The standard error comes from the spread of the n_traj * batch_count
 * batch estimates.
 */
inline SimEstimate estimate_stationary_covariance(const ChainParams& p, const SimConfig& c) {
    p.validate();
    c.validate(p);
    detail::require_stable(p);
    return detail::summarize(detail::covariance_batches(p, c));
}

enum class FdBaseline {
    paired,  ///< simulated lambda = 0 run on the same noise
    exact,   ///< closed-form Phi^0
};

/// Forward difference (Phi_hat^lambda - Phi^0)/lambda at lambda = lambda_probe.
inline SimEstimate estimate_first_order_fd(const ChainParams& p, double lambda_probe, const SimConfig& c,
                                           FdBaseline baseline = FdBaseline::paired) {
    if (!(lambda_probe > 0.0)) throw std::invalid_argument("estimate_first_order_fd: lambda_probe must be > 0");
    ChainParams pl = p;
    pl.lambda = lambda_probe;
    ChainParams p0 = p;
    p0.lambda = 0.0;
    pl.validate();
    c.validate(pl);
    detail::require_stable(p0);
    auto hi = detail::covariance_batches(pl, c);
    if (baseline == FdBaseline::paired) {
        const auto lo = detail::covariance_batches(p0, c);
        for (std::size_t i = 0; i < hi.size(); ++i) hi[i] = (hi[i] - lo[i]) / lambda_probe;
    } else {
        const Matrix phi0 = assemble_phi0(p0).assembled();
        for (auto& m : hi) m = (m - phi0) / lambda_probe;
    }
    return detail::summarize(hi);
}

// ---------------------------------------------------------------------------
// Linearized flow
// ---------------------------------------------------------------------------

struct LinearizedFlow {
    Matrix U;
    ChainState final_state;
    double log_det = 0.0;           ///< log |det U| from the matrix
    double log_det_predicted = 0.0; ///< sum over steps of log det(step Jacobian) = 2 n log(1 - gamma dt)
};

/// Joint update of the state and U, dU = (b - 3 lambda C(t)) U dt, U(0) = 1.
inline LinearizedFlow propagate_linearized_flow(const ChainParams& p, const SimConfig& c, double t_max,
                                                const ChainState& initial, std::uint64_t stream = 0,
                                                double horizon = 100.0) {
    if (!(t_max >= 0.0) || t_max > horizon) throw std::invalid_argument("propagate_linearized_flow: t_max outside [0, horizon]");
    const int n = p.N;
    const detail::Kernel k(p, c.dt);
    Matrix u = Matrix::Identity(2 * n, 2 * n);
    LinearizedFlow out;
    GaussianStream normal(c.seed, stream);
    Vector q = initial.q;
    Vector pm = initial.p;
    const long long steps = std::llround(t_max / c.dt);
    for (long long s = 1; s <= steps; ++s) {
        for (int j = 0; j < 2 * n; ++j) k.tangent(q, u.col(j).data(), u.col(j).data() + n);
        const double z1 = normal();
        const double zN = normal();
        k.step(q, pm, z1, zN);
        if (s % c.monitor_stride == 0) detail::check_divergence(q, pm, c.divergence_guard);
    }
    out.U = u;
    out.final_state = {q, pm};
    out.log_det = std::log(std::abs(u.determinant()));
    out.log_det_predicted = 2.0 * static_cast<double>(steps) * std::log(1.0 - p.gamma * c.dt);
    return out;
}

// ---------------------------------------------------------------------------
// Covariance formula and Malliavin bound
// ---------------------------------------------------------------------------

/// Noise fields X_1 = sqrt(2 gamma k T1) e_{p_1}, X_2 = sqrt(2 gamma k TN) e_{p_N}.
inline std::vector<Vector> noise_fields(const ChainParams& p) {
    const int n = p.N;
    Vector x1 = Vector::Zero(2 * n);
    Vector x2 = Vector::Zero(2 * n);
    x1(n) = std::sqrt(2.0 * p.gamma * p.kB * p.T1);
    x2(2 * n - 1) = std::sqrt(2.0 * p.gamma * p.kB * p.TN);
    return {x1, x2};
}

struct LinearIdentity {
    Matrix covariance;  ///< mu(C_t) = Phi - e^{bt} Phi e^{b^T t}
    Matrix malliavin;   ///< E M_t = int_0^t e^{bs} D e^{b^T s} ds
    double difference = 0.0;
};

/// At lambda = 0 both sides of the covariance formula are deterministic.
inline LinearIdentity linear_covariance_identity(const ChainParams& p, double t) {
    const auto s = build_struct_matrices(p);
    LinearIdentity out;
    out.covariance = linear_covariance_at(s.b, s.D, t);
    out.malliavin = linear_malliavin_expectation(s.b, noise_fields(p), t);
    out.difference = max_norm(out.covariance - out.malliavin);
    return out;
}

struct NestedSampling {
    int outer = 200;  ///< stationary start points
    int inner = 32;   ///< noise realizations per start point
};

struct CovarianceFormulaReport {
    Matrix covariance;  ///< mu(C_t)
    Matrix formula;     ///< int_0^t ds sum_k mu(E U_s X_k (x) E U_s X_k)
    Matrix malliavin;   ///< mu(E M_t)
    double equality_max_eig = 0.0;    ///< max |eig(covariance - formula)|
    double equality_stderr = 0.0;
    double inequality_max_eig = 0.0;  ///< max eig(covariance - malliavin)
    double inequality_stderr = 0.0;
    double signal = 0.0;              ///< max |eig(covariance)|
    bool insufficient_inner = false;  ///< equality stderr above 30% of the signal
    int outer = 0;
    int inner = 0;

    bool equality_holds(double z = 3.0) const { return equality_max_eig <= z * equality_stderr; }
    bool inequality_holds(double z = 3.0) const { return inequality_max_eig <= z * inequality_stderr; }
};

namespace detail {

inline Eigen::VectorXd sym_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Spectral norm of the entrywise standard-error matrix of the sample mean.
/// Any eigenvalue of (mean - truth) is bounded by the spectral norm of the
/// error matrix, so this is the scale used for eigenvalue comparisons.
inline double combined_stderr(const std::vector<Matrix>& samples) {
    const double n = static_cast<double>(samples.size());
    Matrix mean = Matrix::Zero(samples[0].rows(), samples[0].cols());
    for (const auto& s : samples) mean += s;
    mean /= n;
    Matrix var = Matrix::Zero(mean.rows(), mean.cols());
    for (const auto& s : samples) var += (s - mean).cwiseAbs2();
    const Matrix se = (var / (n - 1.0) / n).cwiseSqrt();
    return Eigen::JacobiSVD<Matrix>(se).singularValues()(0);
}

}  // namespace detail

/**
 * Nested Monte Carlo check of
 *   mu(C_t) = int_0^t ds sum_k mu(E_x U_s X_k (x) E_x U_s X_k)   and   mu(C_t) <= mu(E M_t).
 * Each outer point is the end of its own burn-in run from the origin
 * (config.t_burn). For each outer point, @p sampling.inner paths of length t
 * give the conditional covariance of x_t (unbiased, 1/(M-1)) and the
 * tangent vectors U_s X_k; E_x U_s X_k (x) E_x U_s X_k uses the unbiased
 * off-diagonal pair average. Error bars come from the spread over outer
 * points, combined into one scale by combined_stderr.
 */
inline CovarianceFormulaReport validate_covariance_formula(const ChainParams& p, const SimConfig& c, double t,
                                                           NestedSampling sampling = {}) {
    p.validate();
    c.validate(p);
    detail::require_stable(p);
    if (!(t > 0.0)) throw std::invalid_argument("validate_covariance_formula: t must be > 0");
    if (sampling.outer < 2 || sampling.inner < 2)
        throw std::invalid_argument("validate_covariance_formula: need >= 2 outer and >= 2 inner samples");
    const int n = p.N;
    const int d = 2 * n;
    const auto fields = noise_fields(p);
    const int nk = static_cast<int>(fields.size());
    const long long steps = std::llround(t / c.dt);
    const int m = sampling.inner;
    const std::uint64_t inner_base = 1ULL << 40;

    std::vector<Matrix> cov_samples(sampling.outer);
    std::vector<Matrix> formula_samples(sampling.outer);
    std::vector<Matrix> malliavin_samples(sampling.outer);

    const detail::Kernel k(p, c.dt);
    detail::for_each_index(sampling.outer, [&](int o) {
        const ChainState x0 = integrate(p, c, ChainState::zero(n), c.t_burn, static_cast<std::uint64_t>(o));

        // Per time step and field: sum over paths of v and of v v^T, v = U_s X_k.
        std::vector<Matrix> sum_v(nk, Matrix::Zero(d, steps));
        std::vector<Matrix> sum_vv(nk, Matrix::Zero(d, d));
        Matrix cross = Matrix::Zero(d, d);  // sum over s of (sum v)(sum v)^T, accumulated at the end
        Vector x1 = Vector::Zero(d);
        Matrix x2 = Matrix::Zero(d, d);

        for (int a = 0; a < m; ++a) {
            GaussianStream normal(c.seed, inner_base + static_cast<std::uint64_t>(o) * m + a);
            Vector q = x0.q;
            Vector pm = x0.p;
            Matrix v(d, nk);
            for (int j = 0; j < nk; ++j) v.col(j) = fields[j];
            for (long long s = 0; s < steps; ++s) {
                for (int j = 0; j < nk; ++j) {
                    sum_v[j].col(s) += v.col(j);
                    sum_vv[j].selfadjointView<Eigen::Lower>().rankUpdate(v.col(j));
                }
                for (int j = 0; j < nk; ++j) k.tangent(q, v.col(j).data(), v.col(j).data() + n);
                const double z1 = normal();
                const double zN = normal();
                k.step(q, pm, z1, zN);
            }
            detail::check_divergence(q, pm, c.divergence_guard);
            Vector xt(d);
            xt << q - (0.5 * c.dt) * pm, pm;
            x1 += xt;
            x2.selfadjointView<Eigen::Lower>().rankUpdate(xt);
        }

        Matrix vv = Matrix::Zero(d, d);
        for (int j = 0; j < nk; ++j) {
            cross.noalias() += sum_v[j] * sum_v[j].transpose();
            vv += Matrix(sum_vv[j].selfadjointView<Eigen::Lower>());
        }
        const double md = static_cast<double>(m);
        const Matrix x2full = x2.selfadjointView<Eigen::Lower>();
        cov_samples[o] = (x2full - x1 * x1.transpose() / md) / (md - 1.0);
        formula_samples[o] = c.dt * (cross - vv) / (md * (md - 1.0));
        malliavin_samples[o] = c.dt * vv / md;
    });

    CovarianceFormulaReport r;
    r.outer = sampling.outer;
    r.inner = m;
    auto mean_of = [](const std::vector<Matrix>& v) {
        Matrix s = Matrix::Zero(v[0].rows(), v[0].cols());
        for (const auto& x : v) s += x;
        return Matrix(s / static_cast<double>(v.size()));
    };
    r.covariance = mean_of(cov_samples);
    r.formula = mean_of(formula_samples);
    r.malliavin = mean_of(malliavin_samples);

    std::vector<Matrix> eq(sampling.outer), ineq(sampling.outer);
    for (int o = 0; o < sampling.outer; ++o) {
        eq[o] = cov_samples[o] - formula_samples[o];
        ineq[o] = cov_samples[o] - malliavin_samples[o];
    }
    auto max_abs_eig = [](const Matrix& x) { return detail::sym_eigenvalues(x).cwiseAbs().maxCoeff(); };
    auto max_eig = [](const Matrix& x) { return detail::sym_eigenvalues(x).maxCoeff(); };
    r.equality_max_eig = max_abs_eig(r.covariance - r.formula);
    r.equality_stderr = detail::combined_stderr(eq);
    r.inequality_max_eig = max_eig(r.covariance - r.malliavin);
    r.inequality_stderr = detail::combined_stderr(ineq);
    r.signal = max_abs_eig(r.covariance);
    r.insufficient_inner = r.equality_stderr > 0.3 * r.signal;
    return r;
}

}  // namespace sns
