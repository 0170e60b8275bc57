#include "sns/montecarlo.hpp"
#include "sns/perturbation.hpp"

#include <catch_amalgamated.hpp>

using namespace sns;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

ChainParams chain(int n, double t1, double tn, double lambda = 0.0, double kappa = 0.0) {
    ChainParams p;
    p.N = n;
    p.kappa = kappa;
    p.lambda = lambda;
    p.T1 = t1;
    p.TN = tn;
    return p;
}

SimConfig config(const ChainParams& p, double t_meas, int n_traj, std::uint64_t seed = 1) {
    SimConfig c;
    c.dt = dt_max(p);
    c.t_burn = default_burn_in(p);
    c.t_total = c.t_burn + t_meas;
    c.n_traj = n_traj;
    c.seed = seed;
    c.batch_count = 8;
    return c;
}

/// Fraction of entries of @p m farther than z standard errors from @p target.
double fraction_outside(const SimEstimate& e, const Matrix& target, double z) {
    int bad = 0;
    for (Eigen::Index i = 0; i < target.rows(); ++i)
        for (Eigen::Index j = 0; j < target.cols(); ++j)
            bad += std::abs(e.mean(i, j) - target(i, j)) > z * e.standard_error(i, j) ? 1 : 0;
    return static_cast<double>(bad) / static_cast<double>(target.size());
}

}  // namespace

TEST_CASE("random streams") {
    CounterRng a(7, 0), b(7, 0), c(7, 1), d(8, 0);
    for (int i = 0; i < 5; ++i) {
        const auto x = a();
        CHECK(x == b());
        CHECK(x != c());
        CHECK(x != d());
    }
    GaussianStream g(3, 4);
    double s1 = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = g();
        s1 += z;
        s2 += z * z;
    }
    CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(n));
    CHECK(s2 / n == Approx(1.0).margin(0.02));
}

TEST_CASE("configuration checks") {
    const auto p = chain(4, 2.0, 1.0);
    auto c = config(p, 100.0, 2);
    CHECK_NOTHROW(c.validate(p));

    auto bad = c;
    bad.dt = 2.0 * dt_max(p);
    CHECK_THROWS_WITH(bad.validate(p), ContainsSubstring("dt_max"));
    bad = c;
    bad.batch_count = 4;
    CHECK_THROWS(bad.validate(p));
    bad = c;
    bad.t_total = bad.t_burn;
    CHECK_THROWS(bad.validate(p));
    bad = c;
    bad.n_traj = 0;
    CHECK_THROWS(bad.validate(p));

    auto stiff = p;
    stiff.lambda = 5.0;
    CHECK(dt_max(stiff) < dt_max(p));
    CHECK(default_burn_in(p) >= 20.0 / p.gamma);
    CHECK_THROWS(estimate_first_order_fd(p, 0.0, c));
}

TEST_CASE("divergence guard") {
    const auto p = chain(3, 1.0, 1.0);
    SimConfig c;
    c.dt = 1.5;  // far beyond the stability limit of the explicit scheme
    c.monitor_stride = 10;
    CHECK_THROWS_WITH(integrate(p, c, ChainState::zero(3), 3000.0), ContainsSubstring("integrator divergence; reduce dt"));
}

TEST_CASE("zero noise decays to the origin") {
    auto p = chain(4, 1.0, 1.0);
    p.T1 = 0.0;
    p.TN = 0.0;
    SimConfig c;
    c.dt = 0.005;
    c.monitor_stride = 200;
    ChainState s = ChainState::zero(4);
    s.q << 1.0, -0.5, 0.3, 0.8;
    IntegrationStats st;
    const auto end = integrate(p, c, s, 400.0, 0, &st);
    CHECK(max_norm(end.stacked()) < 1e-3);
    for (std::size_t k = 1; k < st.energy.size(); ++k) CHECK(st.energy[k] <= st.energy[k - 1] + 1e-12);
}

TEST_CASE("frictionless chain conserves energy") {
    auto p = chain(3, 0.0, 0.0, 0.8);
    p.gamma = 0.0;
    SimConfig c;
    c.dt = 0.001;
    c.monitor_stride = 100;
    ChainState s = ChainState::zero(3);
    s.q << 0.7, -0.2, 0.4;
    s.p << 0.1, 0.3, -0.6;
    IntegrationStats st;
    integrate(p, c, s, 50.0, 0, &st);
    const double e0 = st.energy.front();
    double worst = 0.0;
    for (double e : st.energy) worst = std::max(worst, std::abs(e - e0));
    CHECK(worst < 20.0 * c.dt * e0);
}

TEST_CASE("equilibrium Gibbs covariance") {
    for (double lambda : {0.0, 0.5}) {
        const auto p = chain(3, 1.0, 1.0, lambda);
        const auto est = estimate_stationary_covariance(p, config(p, 1500.0, 4));
        const int n = 3;
        Matrix y = est.mean.bottomRightCorner(n, n);
        Matrix ys = est.standard_error.bottomRightCorner(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) CHECK(std::abs(y(i, j) - (i == j ? 1.0 : 0.0)) <= 4.0 * ys(i, j) + 1e-3);
        Matrix z = est.mean.topRightCorner(n, n);
        Matrix zs = est.standard_error.topRightCorner(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) CHECK(std::abs(z(i, j)) <= 4.0 * zs(i, j) + 1e-3);
        if (lambda == 0.0) {
            const Matrix x = est.mean.topLeftCorner(n, n);
            const Matrix xs = est.standard_error.topLeftCorner(n, n);
            const Matrix ginv = g_inverse(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) CHECK(std::abs(x(i, j) - ginv(i, j)) <= 4.0 * xs(i, j) + 1e-3);
        }
    }
}

TEST_CASE("harmonic nonequilibrium covariance") {
    const auto p = chain(4, 2.0, 1.0);
    const auto est = estimate_stationary_covariance(p, config(p, 1500.0, 8));
    CHECK(fraction_outside(est, assemble_phi0(p).assembled(), 3.0) <= 0.1);
    CHECK(est.effective_samples == 64.0);
    CHECK((est.standard_error.array() >= 0.0).all());
}

TEST_CASE("estimates are reproducible") {
    const auto p = chain(3, 1.5, 1.0, 0.2);
    const auto c = config(p, 40.0, 3, 99);
    const auto a = estimate_stationary_covariance(p, c);
    const auto b = estimate_stationary_covariance(p, c);
    CHECK(max_norm(a.mean - b.mean) == 0.0);
    CHECK(max_norm(a.standard_error - b.standard_error) == 0.0);
    auto other = c;
    other.seed = 100;
    CHECK(max_norm(estimate_stationary_covariance(p, other).mean - a.mean) > 0.0);
}

TEST_CASE("measurement window halves agree") {
    const auto p = chain(3, 2.0, 1.0, 0.3);
    auto c = config(p, 1200.0, 4, 5);
    auto first = c;
    first.t_total = c.t_burn + 600.0;
    auto second = c;
    second.t_burn = c.t_burn + 600.0;
    const auto a = estimate_stationary_covariance(p, first);
    const auto b = estimate_stationary_covariance(p, second);
    const Matrix se = (a.standard_error.cwiseAbs2() + b.standard_error.cwiseAbs2()).cwiseSqrt();
    int bad = 0;
    for (Eigen::Index i = 0; i < se.rows(); ++i)
        for (Eigen::Index j = 0; j < se.cols(); ++j) bad += std::abs(a.mean(i, j) - b.mean(i, j)) > 3.0 * se(i, j);
    CHECK(bad <= 3);
}

TEST_CASE("site flip with swapped temperatures") {
    const auto p = chain(3, 2.0, 1.0, 0.3);
    auto q = p;
    std::swap(q.T1, q.TN);
    const auto c = config(p, 1000.0, 4, 11);
    const auto a = estimate_stationary_covariance(p, c);
    const auto b = estimate_stationary_covariance(q, c);
    const int n = 3;
    Vector ta = a.mean.bottomRightCorner(n, n).diagonal();
    Vector tb = b.mean.bottomRightCorner(n, n).diagonal().reverse();
    Vector sa = a.standard_error.bottomRightCorner(n, n).diagonal();
    Vector sb = b.standard_error.bottomRightCorner(n, n).diagonal().reverse();
    for (int i = 0; i < n; ++i) CHECK(std::abs(ta(i) - tb(i)) <= 3.5 * std::hypot(sa(i), sb(i)));
    // current changes sign under the flip
    CHECK(a.mean(0, n + 1) > 0.0);
    CHECK(b.mean(0, n + 1) < 0.0);
}

TEST_CASE("quartic term lowers the position variance") {
    const auto p = chain(4, 1.0, 1.0);
    const auto c = config(chain(4, 1.0, 1.0, 0.1), 600.0, 4, 3);
    const auto fd = estimate_first_order_fd(p, 0.1, c);
    for (int i = 0; i < 4; ++i) {
        CHECK(fd.mean(i, i) < 0.0);
        CHECK(fd.mean(i, i) + 3.0 * fd.standard_error(i, i) < 0.0);
    }
}

TEST_CASE("finite difference against the first-order correction, small probe") {
    const double lambda = 0.003;
    const auto p = chain(4, 2.0, 1.0);
    auto c = config(chain(4, 2.0, 1.0, lambda), 1000.0, 8, 2);
    const auto fd = estimate_first_order_fd(p, lambda, c);
    const Matrix exact = solve_first_order_dense(p).full();
    const double big = max_norm(exact);
    int checked = 0, bad = 0;
    for (Eigen::Index i = 0; i < exact.rows(); ++i)
        for (Eigen::Index j = 0; j < exact.cols(); ++j) {
            if (std::abs(exact(i, j)) < 0.1 * big) continue;
            ++checked;
            bad += std::abs(fd.mean(i, j) - exact(i, j)) > 3.0 * fd.standard_error(i, j) + 0.15 * std::abs(exact(i, j));
        }
    CHECK(checked > 0);
    CHECK(bad == 0);

    // current correction sign
    const double sign = (p.T1 > p.TN ? 1.0 : -1.0) * (current_pipeline(p).varphi(0) > 0.0 ? 1.0 : -1.0);
    CHECK(fd.mean(0, 4 + 1) * sign > 0.0);
}

TEST_CASE("finite difference at equilibrium") {
    const double lambda = 0.01;
    const auto p = chain(3, 1.0, 1.0);
    const auto fd = estimate_first_order_fd(p, lambda, config(chain(3, 1.0, 1.0, lambda), 800.0, 8, 4));
    const auto dec = solve_first_order_dense(p);
    const Matrix x0 = dec.prefactor * dec.blocks[0].X;  // omega = 1
    const int n = 3;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(std::abs(fd.mean(n + i, n + j)) <= 4.0 * fd.standard_error(n + i, n + j) + 1e-9);
            CHECK(std::abs(fd.mean(i, j) - x0(i, j)) <= 4.0 * fd.standard_error(i, j) + 0.15 * std::abs(x0(i, j)));
        }
}

TEST_CASE("linearized flow") {
    const auto p = chain(3, 2.0, 1.0);
    SimConfig c;
    c.dt = 0.001;
    const auto s = build_struct_matrices(p);
    const auto zero = propagate_linearized_flow(p, c, 0.0, ChainState::zero(3));
    CHECK(max_norm(zero.U - Matrix::Identity(6, 6)) == 0.0);
    for (double t : {1.0, 5.0}) {
        const auto f = propagate_linearized_flow(p, c, t, ChainState::zero(3));
        CHECK(max_norm(f.U - expm(s.b * t)) <= 10.0 * c.dt);
    }
    CHECK_THROWS(propagate_linearized_flow(p, c, 200.0, ChainState::zero(3)));

    auto q = chain(2, 2.0, 1.0, 0.5);
    ChainState x0 = ChainState::zero(2);
    x0.q << 1.0, -1.0;
    const auto f = propagate_linearized_flow(q, c, 3.0, x0, 4);
    CHECK(f.log_det == Approx(f.log_det_predicted).margin(1e-8));
    CHECK(f.log_det == Approx(-2.0 * q.gamma * 3.0).epsilon(2e-3));
}

TEST_CASE("covariance formula, linear case is exact") {
    for (int n : {2, 4}) {
        const auto li = linear_covariance_identity(chain(n, 2.0, 1.0), 2.0);
        CHECK(li.difference <= 1e-8);
    }
}

TEST_CASE("covariance formula, nonlinear nested sampling") {
    const auto p = chain(2, 2.0, 1.0, 0.2);
    SimConfig c;
    c.dt = 0.002;
    c.t_burn = 25.0;
    c.t_total = 26.0;
    c.seed = 3;
    const auto r = validate_covariance_formula(p, c, 1.0, {120, 16});
    CHECK(r.outer == 120);
    CHECK(r.inner == 16);
    CHECK(r.equality_stderr > 0.0);
    CHECK(r.equality_holds(3.0));
    CHECK(r.inequality_holds(3.0));
    CHECK(r.signal > 0.0);
}
