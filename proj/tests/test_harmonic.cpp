#include "sns/harmonic.hpp"
#include "sns/lyapunov.hpp"

#include <catch_amalgamated.hpp>

using namespace sns;
using Catch::Approx;

namespace {

ChainParams chain(int n, double nu = 1.0, double kappa = 0.0, double t1 = 2.0, double tn = 1.0) {
    ChainParams p;
    p.N = n;
    p.omega = 1.0;
    p.gamma = 1.0 / std::sqrt(nu);
    p.kappa = kappa;
    p.T1 = t1;
    p.TN = tn;
    return p;
}

}  // namespace

TEST_CASE("phi vector") {
    auto phi = phi_vector(chain(2));
    REQUIRE(phi.base().size() == 1);
    CHECK(phi(1) == Approx(1.0 / 3.0).epsilon(1e-15));

    phi = phi_vector(chain(3));
    CHECK(phi(1) == Approx(3.0 / 8.0).epsilon(1e-15));
    CHECK(phi(2) == Approx(1.0 / 8.0).epsilon(1e-15));

    const auto p = chain(200, 1.0, 0.2);
    const double alpha = derive_scalars(p).alpha;
    phi = phi_vector(p);
    for (int j : {1, 3, 10}) CHECK(phi(j) == Approx(std::exp(-alpha * j)).epsilon(1e-12));
}

TEST_CASE("phi vector conventions") {
    const auto phi = phi_vector(chain(6, 0.7, 0.3));
    CHECK(phi(0) == 0.0);
    CHECK(phi(6) == 0.0);
    for (int k = 1; k <= 5; ++k) CHECK(phi(-k) == -phi(k));
    for (int k = 0; k <= 6; ++k) CHECK(phi(6 + k) == -phi(6 - k));
    CHECK_THROWS_AS(phi(13), std::out_of_range);
    CHECK_THROWS_AS(phi(-7), std::out_of_range);
}

TEST_CASE("phi closed form against the tridiagonal solve") {
    for (int n : {2, 5, 40, 120, 200})
        for (double nu : {0.5, 1.0, 2.0, 50.0})
            for (double kappa : {0.0, 0.1, 1.0}) {
                const auto p = chain(n, nu, kappa);
                const Vector a = phi_vector(p).base();
                const Vector b = phi_vector_tridiagonal(p).base();
                REQUIRE(a.allFinite());
                CHECK(max_norm(a - b) < 1e-10);
                Vector e1 = Vector::Zero(n - 1);
                e1(0) = 1.0;
                const double diag = 2.0 + derive_scalars(p).nu + kappa;
                CHECK(max_norm(tridiagonal_toeplitz(n - 1, diag, -1.0) * a - e1) < 1e-12);
            }
}

TEST_CASE("sinh ratio does not overflow") {
    CHECK(sinh_ratio(0.0, 5.0, 1.0) == 0.0);
    CHECK(sinh_ratio(3.0, 3.0, 2.0) == Approx(1.0));
    CHECK(sinh_ratio(2.0, 3.0, 0.5) == Approx(std::sinh(1.0) / std::sinh(1.5)));
    CHECK(sinh_ratio(-2.0, 3.0, 0.5) == Approx(-std::sinh(1.0) / std::sinh(1.5)));
    const double r = sinh_ratio(900.0, 1000.0, 5.0);
    CHECK(std::isfinite(r));
    CHECK(r == Approx(std::exp(-500.0)).epsilon(1e-10));
    CHECK(sinh_ratio(999.0, 1000.0, 1.0) == Approx(std::exp(-1.0)));
}

TEST_CASE("g vector") {
    auto g = g_vector(chain(2));
    CHECK(g(1) == Approx(2.0 / 3.0));
    CHECK(g(2) == Approx(2.0 / 3.0));
    g = g_vector(chain(3));
    CHECK(g(1) == Approx(0.75));
    CHECK(g(2) == Approx(1.0));
    CHECK(g(3) == Approx(0.75));
    CHECK_THROWS(g(0));

    for (int n : {2, 7, 30, 200})
        for (double kappa : {0.0, 0.05, 1.0, 10.0}) {
            const auto gv = g_vector(chain(n, 1.0, kappa));
            for (int i = 1; i <= n; ++i) {
                CHECK(gv(i) > 0.0);
                CHECK(gv(i) == Approx(gv(n + 1 - i)).epsilon(1e-12));
            }
            if (n <= 30) {
                const Matrix inv = g_matrix(n, kappa).inverse();
                CHECK(max_norm(g_inverse(n, kappa) - inv) < 1e-10);
            }
        }
}

TEST_CASE("assembled harmonic covariance") {
    const auto p = chain(2);
    const auto c = assemble_phi0(p);
    Matrix x(2, 2);
    x << 7.0 / 6.0, 0.5, 0.5, 5.0 / 6.0;
    CHECK(max_norm(c.X - x) < 1e-14);
    CHECK(c.Y(0, 0) == Approx(11.0 / 6.0));
    CHECK(c.Y(1, 1) == Approx(7.0 / 6.0));
    CHECK(std::abs(c.Y(0, 1)) < 1e-15);
    CHECK(c.Z(0, 1) == Approx(1.0 / 6.0));

    const auto s = build_struct_matrices(p);
    CHECK(max_norm(solve_lyapunov(s.b, -s.D).phi - c.assembled()) < 1e-12);

    const auto eq = chain(9, 0.8, 0.4, 1.3, 1.3);
    const auto ce = assemble_phi0(eq);
    CHECK(max_norm(ce.X - 1.3 * g_inverse(9, 0.4)) < 1e-14);
    CHECK(max_norm(ce.Y - 1.3 * Matrix::Identity(9, 9)) < 1e-14);
    CHECK(max_norm(ce.Z) == 0.0);

    const auto h = harmonic_components(chain(8, 1.5, 0.3));
    for (int i = 1; i <= 8; ++i) CHECK(h.X0(i - 1, 8 - i) == 0.0);
}

TEST_CASE("closed form solves the stationary equation on a grid") {
    for (int n = 2; n <= 40; n += (n < 10 ? 1 : 7))
        for (double nu : {0.5, 1.0, 2.0})
            for (double kappa : {0.0, 0.1, 1.0}) {
                const auto p = chain(n, nu, kappa);
                const auto s = build_struct_matrices(p);
                const Matrix phi = assemble_phi0(p).assembled();
                CHECK(lyapunov_residual(s.b, phi, -s.D) <= 1e-10 * max_norm(s.D));
                CHECK(max_norm(solve_lyapunov(s.b, -s.D).phi - phi) < 1e-9);
                CHECK(max_norm(phi - phi.transpose()) == 0.0);
            }
}

TEST_CASE("temperature profile") {
    CHECK(max_norm(temperature_profile(assemble_phi0(chain(6, 1.0, 0.0, 1.4, 1.4))) - Vector::Constant(6, 1.4)) < 1e-14);

    const Vector t = temperature_profile(assemble_phi0(chain(2)));
    CHECK(t(0) == Approx(11.0 / 6.0));
    CHECK(t(1) == Approx(7.0 / 6.0));

    for (int n : {5, 12, 31}) {
        const auto p = chain(n, 0.6, 0.2, 2.5, 0.5);
        const double kt = derive_scalars(p).T;
        const Vector tp = temperature_profile(assemble_phi0(p));
        for (int i = 1; i <= n; ++i) CHECK(tp(i - 1) - kt == Approx(-(tp(n - i) - kt)).margin(1e-13));
    }

    const auto p = chain(90, 1.0, 0.0, 2.0, 1.0);
    const auto d = derive_scalars(p);
    const Vector tp = temperature_profile(assemble_phi0(p));
    const double c = 2.0 * d.T * std::abs(d.eta) * d.nu * std::exp(d.alpha);
    for (int i = 31; i <= 60; ++i) {
        const int m = std::min(i, p.N + 1 - i);
        CHECK(std::abs(tp(i - 1) - d.T) <= c * std::exp(-2.0 * d.alpha * m));
    }
}

TEST_CASE("heat current") {
    CHECK(max_norm(heat_current(assemble_phi0(chain(7, 1.0, 0.1, 1.0, 1.0)))) == 0.0);

    const Vector j = heat_current(assemble_phi0(chain(2)));
    REQUIRE(j.size() == 1);
    CHECK(j(0) == Approx(1.0 / 6.0));

    for (int n : {3, 10, 60}) {
        const auto p = chain(n, 1.7, 0.5, 3.0, 1.0);
        const auto d = derive_scalars(p);
        const Vector jc = heat_current(assemble_phi0(p));
        const double want = d.T / p.gamma * d.eta * phi_vector(p)(1);
        for (Eigen::Index i = 0; i < jc.size(); ++i) CHECK(std::abs(jc(i) - want) < 1e-12);
    }
}
