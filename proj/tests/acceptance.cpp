// Acceptance battery: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "sns/harmonic.hpp"
#include "sns/io.hpp"
#include "sns/lyapunov.hpp"
#include "sns/montecarlo.hpp"
#include "sns/perturbation.hpp"
#include "sns/verify.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace sns;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& id, const std::string& title, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = fn();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += r.passed ? 0 : 1;
    std::ostringstream t;
    t.precision(3);
    t << secs;
    std::cout << (r.passed ? "PASS " : "FAIL ") << id << " " << title << ": " << r.detail << " (" << t.str() << " s)"
              << std::endl;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

ChainParams nu_chain(int n, double nu, double kappa, double t1 = 2.0, double tn = 1.0) {
    return grid_params(n, nu, kappa, 1.0, t1, tn);
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + SNS_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

const std::vector<double> kNu{0.5, 1.0, 2.0};
const std::vector<double> kKappa{0.0, 0.1, 1.0};

Outcome ac1() {
    double worst_res = 0.0, worst_dense = 0.0;
    int cases = 0;
    for (int n = 2; n <= 40; ++n)
        for (double nu : kNu)
            for (double kappa : kKappa) {
                const auto p = nu_chain(n, nu, kappa);
                const auto s = build_struct_matrices(p);
                const Matrix phi = assemble_phi0(p).assembled();
                worst_res = std::max(worst_res, lyapunov_residual(s.b, phi, -s.D) / max_norm(s.D));
                worst_dense = std::max(worst_dense, max_norm(solve_lyapunov(s.b, -s.D).phi - phi));
                ++cases;
            }
    return {worst_res <= 1e-10 && worst_dense <= 1e-9,
            std::to_string(cases) + " cases, max relative residual " + num(worst_res) + ", max dense difference " +
                num(worst_dense)};
}

Outcome ac2() {
    double worst = 0.0;
    bool finite = true;
    for (int n = 2; n <= 200; ++n)
        for (double nu : kNu)
            for (double kappa : kKappa) {
                const auto p = nu_chain(n, nu, kappa);
                const Vector a = phi_vector(p).base();
                finite = finite && a.allFinite();
                worst = std::max(worst, max_norm(a - phi_vector_tridiagonal(p).base()));
            }
    return {finite && worst <= 1e-10, "N = 2..200, max difference " + num(worst)};
}

Outcome ac3() {
    using T = SymmetryTag;
    double structure = 0.0, symmetry = 0.0, zeros = 0.0;
    for (int n : {2, 3, 4, 7, 8, 16})
        for (double nu : kNu)
            for (double kappa : kKappa) {
                const auto p = nu_chain(n, nu, kappa);
                const auto dec = solve_first_order_dense(p);
                const Matrix ginv = g_inverse(n, kappa);
                const Matrix x0 = -ginv * diagonal_part(ginv) * ginv;
                structure = std::max({structure, max_norm(dec.blocks[0].X - x0), max_norm(dec.blocks[0].Y),
                                      max_norm(dec.blocks[0].Z)});
                const auto& b1 = dec.blocks[1];
                const auto& b2 = dec.blocks[2];
                symmetry = std::max({symmetry, detail::scaled_defect(b1.X, T::c_antisymmetric),
                                     detail::scaled_defect(b1.Y, T::c_antisymmetric),
                                     detail::scaled_defect(b1.Z, T::c_symmetric), detail::scaled_defect(b2.X, T::c_symmetric),
                                     detail::scaled_defect(b2.Y, T::c_symmetric),
                                     detail::scaled_defect(b2.Z, T::c_antisymmetric),
                                     detail::scaled_defect(b1.Z, T::antisymmetric),
                                     detail::scaled_defect(b2.Z, T::antisymmetric)});
                zeros = std::max({zeros, detail::max_offdiag_z(b2.Z), std::abs(b2.Y(0, 0))});
            }
    return {structure <= 1e-10 && symmetry <= 1e-10 && zeros <= 1e-10,
            "zeroth component " + num(structure) + ", symmetry table " + num(symmetry) + ", (Z2)_{i,i+1} and (Y2)_11 " +
                num(zeros)};
}

Outcome ac4() {
    double agree = 0.0, spread = 0.0;
    for (int n = 2; n <= 16; ++n)
        for (double nu : kNu)
            for (double kappa : kKappa) {
                const auto p = nu_chain(n, nu, kappa);
                const auto dec = solve_first_order_dense(p);
                agree = std::max(agree, std::abs(current_pipeline(p).varphi(0) - dec.blocks[1].Z(0, 1)));
                spread = std::max(spread, current_uniformity_check(dec).z1_spread);
            }
    return {agree <= 1e-8 && spread <= 1e-10,
            "N = 2..16, varphi1 vs dense " + num(agree) + ", (Z1)_{i,i+1} spread " + num(spread)};
}

Outcome ac5() {
    const double a = current_pipeline(nu_chain(50, 1.0, 0.0)).varphi(0);
    const double b = current_pipeline(nu_chain(100, 1.0, 0.0)).varphi(0);
    const double d = std::abs(b - a);
    return {d <= 1e-6, "varphi1(50) = " + num(a) + ", varphi1(100) = " + num(b) + ", difference " + num(d) +
                           " (tolerance 1e-6; the difference shrinks roughly like 1/N, not exponentially)"};
}

Outcome ac6() {
    const auto p = nu_chain(100, 1.0, 0.0);
    const auto y = y1_profile(p);
    const double slope = middle_third_slope(y.exact);
    const double ref = 2.0 * 2.0 / 25.0 / 101.0;
    const double rel = std::abs(slope - ref) / ref;
    const double eta = derive_scalars(p).eta;
    return {rel <= 0.01 && eta * slope > 0.0,
            "slope " + num(slope) + " vs " + num(ref) + " (relative " + num(rel) + "), eta * slope " + num(eta * slope)};
}

Outcome ac7() {
    const auto y = y2_profile(nu_chain(200, 1.0, 0.0), false);
    const double dh = std::abs(y.h + 2.0 / 15.0);
    const auto small = y2_profile(nu_chain(12, 1.0, 0.0));
    const double dp = max_norm(small.exact - small.pipeline);
    return {dh <= 1e-6 && dp <= 1e-8, "h(200) = " + num(y.h) + " (|h + 2/15| = " + num(dh) +
                                          "), dense vs pipeline at N=12 " + num(dp)};
}

Outcome ac8() {
    const fs::path dir = fs::temp_directory_path() / ("sns_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const json cfg = {{"N", 100}, {"omega", 1.0}, {"gamma", 1.0}, {"kappa", 0.0}, {"lambda", 0.0}, {"T1", 2.0}, {"TN", 1.0}};
    std::ofstream(dir / "figures.json") << cfg.dump(2);
    const std::string common = " --config \"" + (dir / "figures.json").string() + "\" --out \"" + dir.string() + "\"";
    if (run_cli("profile --figure y1" + common, dir / "y1.log") != 0) return {false, "profile --figure y1 failed"};
    if (run_cli("profile --figure y2" + common, dir / "y2.log") != 0) return {false, "profile --figure y2 failed"};

    const auto header = lines_of(dir / "profile_y1.csv");
    if (header.size() < 2 || header[0].rfind("# ", 0) != 0) return {false, "profile_y1.csv lacks comment/header"};
    const std::string cols = header[1];
    for (const char* c : {"y1_exact_kappa0,", "y1_exact_kappa0.1", "y1_linear_kappa0"})
        if (cols.find(c) == std::string::npos) return {false, std::string("profile_y1.csv missing column ") + c};
    const auto y1 = read_csv_rows(dir / "profile_y1.csv");
    if (y1.size() != 100) return {false, "profile_y1.csv has " + std::to_string(y1.size()) + " rows"};
    double anti = 0.0, scale = 0.0;
    Vector k0(100), k01(100);
    for (int i = 0; i < 100; ++i) {
        anti = std::max({anti, std::abs(y1[i][1] + y1[99 - i][1]), std::abs(y1[i][4] + y1[99 - i][4])});
        scale = std::max(scale, std::abs(y1[i][1]));
        k0(i) = y1[i][1];
        k01(i) = y1[i][4];
    }
    const double s0 = middle_third_slope(k0);
    const double s01 = middle_third_slope(k01);
    const double ref = 4.0 / (25.0 * 101.0);
    // kappa > 0: exponential profile, bulk flat
    const bool y1_shape = anti <= 1e-8 * scale && std::abs(s0 - ref) <= 0.01 * ref && std::abs(s01) <= 1e-6 * s0 &&
                          y1[0][3] < 0.0 && y1[99][3] > 0.0;

    const auto y2 = read_csv_rows(dir / "profile_y2.csv");
    if (y2.size() != 100) return {false, "profile_y2.csv has wrong row count"};
    const double first = y2[0][2];
    const double mid = y2[49][1];
    bool symmetric = true;
    for (int i = 0; i < 100; ++i) symmetric = symmetric && std::abs(y2[i][1] - y2[99 - i][1]) <= 1e-10;
    const bool y2_shape = first == 0.0 && std::abs(mid + 2.0 / 15.0) <= 1e-3 && symmetric;
    fs::remove_all(dir);
    return {y1_shape && y2_shape, "y1: antisymmetry " + num(anti) + ", middle slopes kappa=0 " + num(s0) + " kappa=0.1 " +
                                      num(s01) + "; y2: first value " + num(first) + ", midpoint " + num(mid)};
}

Outcome ac9() {
    auto p = nu_chain(4, 1.0, 0.0);
    SimConfig c;
    c.dt = 0.005;
    c.t_burn = default_burn_in(p);
    c.t_total = c.t_burn + 2000.0;
    c.n_traj = 32;
    c.seed = 2024;
    c.batch_count = 8;
    const auto est = estimate_stationary_covariance(p, c);
    const Matrix phi0 = assemble_phi0(p).assembled();
    int inside = 0;
    for (Eigen::Index i = 0; i < phi0.rows(); ++i)
        for (Eigen::Index j = 0; j < phi0.cols(); ++j)
            inside += std::abs(est.mean(i, j) - phi0(i, j)) <= 3.0 * est.standard_error(i, j) ? 1 : 0;
    const double frac = static_cast<double>(inside) / static_cast<double>(phi0.size());

    const double lambda = 0.1;
    auto pl = p;
    pl.lambda = lambda;
    SimConfig f = c;
    f.dt = dt_max(pl);
    f.t_burn = default_burn_in(pl);
    f.t_total = f.t_burn + 4000.0;
    const auto fd = estimate_first_order_fd(p, lambda, f);
    const Matrix exact = solve_first_order_dense(p).full();
    const double big = max_norm(exact);
    int checked = 0, bad = 0;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < exact.rows(); ++i)
        for (Eigen::Index j = 0; j < exact.cols(); ++j) {
            if (std::abs(exact(i, j)) < 0.1 * big) continue;
            ++checked;
            const double allow = 3.0 * fd.standard_error(i, j) + 0.15 * std::abs(exact(i, j));
            const double dev = std::abs(fd.mean(i, j) - exact(i, j));
            worst = std::max(worst, dev / allow);
            bad += dev > allow ? 1 : 0;
        }
    return {frac >= 0.95 && bad == 0,
            "harmonic covariance: " + std::to_string(inside) + "/" + std::to_string(phi0.size()) +
                " entries within 3 stderr; finite difference at lambda=0.1: " + std::to_string(bad) + "/" +
                std::to_string(checked) + " entries outside allowance (worst deviation/allowance " + num(worst) +
                ", the O(lambda) term of the expansion exceeds the 15% allowance)"};
}

Outcome ac10() {
    double lin = 0.0;
    for (int n : {2, 3, 4})
        for (double t : {0.5, 2.0}) lin = std::max(lin, linear_covariance_identity(nu_chain(n, 1.0, 0.0), t).difference);

    auto p = nu_chain(2, 1.0, 0.0);
    p.lambda = 0.2;
    SimConfig c;
    c.dt = 0.002;
    c.t_burn = 25.0;
    c.t_total = 27.0;
    c.seed = 7;
    const auto r = validate_covariance_formula(p, c, 2.0, {400, 32});
    return {lin <= 1e-8 && r.equality_holds(3.0) && r.inequality_holds(3.0),
            "linear identity " + num(lin) + "; lambda=0.2: equality max|eig| " + num(r.equality_max_eig) + " vs 3 stderr " +
                num(3.0 * r.equality_stderr) + ", inequality max eig " + num(r.inequality_max_eig) + " vs 3 stderr " +
                num(3.0 * r.inequality_stderr)};
}

}  // namespace

int main() {
    std::cout << "sns acceptance " << version_string() << std::endl;
    criterion("AC1", "harmonic exactness", ac1);
    criterion("AC2", "phi closed form vs tridiagonal", ac2);
    criterion("AC3", "first-order structure", ac3);
    criterion("AC4", "current pipeline vs dense", ac4);
    criterion("AC5", "current correction bounded in N", ac5);
    criterion("AC6", "eta-linear profile slope", ac6);
    criterion("AC7", "plateau constant", ac7);
    criterion("AC8", "profile curves", ac8);
    criterion("AC9", "Monte Carlo validation", ac9);
    criterion("AC10", "covariance formula and bound", ac10);
    std::cout << failures << " of 10 criteria failed" << std::endl;
    return failures == 0 ? 0 : 1;
}
