// sns-chain: command-line front end for the chain solvers.
//
//   sns-chain <command> --config <path.json> [--out <dir>] [--format csv|json]
//             [--figure y1|y2] [--N-list 10,20,...] [--negate-drift]
//
// Exit codes: 0 success, 1 check failure or runtime error, 2 configuration error.

#include "sns/harmonic.hpp"
#include "sns/io.hpp"
#include "sns/montecarlo.hpp"
#include "sns/perturbation.hpp"
#include "sns/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sns;

namespace {

struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> comments;
};

struct Output {
    std::vector<Table> tables;
    std::vector<std::pair<std::string, Matrix>> blocks;  // written to <blocks_name>.csv
    std::string blocks_name;
    std::vector<std::pair<std::string, Matrix>> matrices;  // one <name>.csv each
    json summary;
    std::string summary_name;
};

struct Manifest {
    std::string command;
    RunConfig config;
    fs::path out_dir = ".";
    std::string format = "csv";
};

void emit(const Manifest& m, const Output& o) {
    const auto& p = m.config.params;
    if (m.format == "json") {
        json all;
        all["params"] = to_json(p);
        all["version"] = version_string();
        for (const auto& t : o.tables) {
            json rows = json::array();
            for (const auto& r : t.rows) {
                json row;
                for (std::size_t i = 0; i < t.columns.size(); ++i) row[t.columns[i]] = r[i];
                rows.push_back(std::move(row));
            }
            all[t.name] = rows;
        }
        for (const auto& [name, mat] : o.blocks) all[o.blocks_name][name] = matrix_to_json(mat);
        for (const auto& [name, mat] : o.matrices) all[name] = matrix_to_json(mat);
        if (!o.summary.is_null()) all[o.summary_name] = o.summary;
        const fs::path path = m.out_dir / (m.command + ".json");
        write_json(path, all);
        std::cout << "wrote " << path.string() << "\n";
        return;
    }
    for (const auto& t : o.tables) {
        const fs::path path = m.out_dir / (t.name + ".csv");
        write_csv(path, p, t.columns, t.rows, t.comments);
        std::cout << "wrote " << path.string() << "\n";
    }
    if (!o.blocks.empty()) {
        const fs::path path = m.out_dir / (o.blocks_name + ".csv");
        write_blocks_csv(path, p, o.blocks);
        std::cout << "wrote " << path.string() << "\n";
    }
    for (const auto& [name, mat] : o.matrices) {
        const fs::path path = m.out_dir / (name + ".csv");
        write_matrix_csv(path, p, mat);
        std::cout << "wrote " << path.string() << "\n";
    }
    if (!o.summary.is_null()) {
        const fs::path path = m.out_dir / (o.summary_name + ".json");
        write_json(path, o.summary);
        std::cout << "wrote " << path.string() << "\n";
    }
}

Table vector_table(const std::string& name, const std::string& col, const Vector& v) {
    Table t{name, {"i", col}, {}, {}};
    for (Eigen::Index i = 0; i < v.size(); ++i) t.rows.push_back({static_cast<double>(i + 1), v(i)});
    return t;
}

int cmd_harmonic(const Manifest& m) {
    const auto& p = m.config.params;
    const auto c = assemble_phi0(p);
    const auto s = build_struct_matrices(p);
    const Matrix phi0 = c.assembled();
    const double res = lyapunov_residual(s.b, phi0, -s.D) / max_norm(s.D);
    const double dense = max_norm(solve_lyapunov(s.b, -s.D).phi - phi0);

    Output o;
    o.blocks_name = "phi0_blocks";
    o.blocks = {{"X", c.X}, {"Y", c.Y}, {"Z", c.Z}};
    o.matrices = {{"phi0", phi0}};
    o.tables.push_back(vector_table("temperature_profile", "T", temperature_profile(c)));
    o.tables.push_back(vector_table("current", "Z_i_i+1", heat_current(c)));
    o.summary_name = "residual";
    o.summary = {{"relative_residual", res}, {"dense_max_difference", dense}, {"tolerance", 1e-10}};
    emit(m, o);
    std::cout << "harmonic: relative residual " << res << ", dense difference " << dense << "\n";
    return res <= 1e-10 ? 0 : 1;
}

int cmd_perturb(const Manifest& m) {
    const auto& p = m.config.params;
    const auto dec = solve_first_order_dense(p);
    const auto cur = current_pipeline(p);
    const auto uni = current_uniformity_check(dec);

    Output o;
    o.blocks_name = "phi1_blocks";
    for (int l = 0; l < 3; ++l) {
        const std::string k = std::to_string(l);
        o.blocks.push_back({"X" + k, dec.blocks[l].X});
        o.blocks.push_back({"Y" + k, dec.blocks[l].Y});
        o.blocks.push_back({"Z" + k, dec.blocks[l].Z});
    }
    o.matrices = {{"phi1", dec.full()}};
    o.tables.push_back(vector_table("temperature_correction", "dT_dlambda", temperature_correction(p)));
    o.tables.push_back(vector_table("varphi", "varphi", cur.varphi));
    o.summary_name = "perturb";
    o.summary = {{"prefactor", dec.prefactor},
                 {"eta", dec.eta},
                 {"residuals", {dec.residuals[0], dec.residuals[1], dec.residuals[2]}},
                 {"varphi1", cur.varphi(0)},
                 {"varphi1_dense", dec.blocks[1].Z(0, 1)},
                 {"current_correction", cur.current_correction},
                 {"z1_spread", uni.z1_spread},
                 {"z2_max", uni.z2_max}};
    emit(m, o);
    const double worst = std::max({dec.residuals[0], dec.residuals[1], dec.residuals[2]});
    std::cout << "perturb: max relative residual " << worst << ", varphi1 " << cur.varphi(0) << "\n";
    return worst <= 1e-9 && uni.passed() ? 0 : 1;
}

int cmd_current_scan(const Manifest& m, std::vector<int> n_list) {
    if (n_list.empty()) throw ConfigError("current-scan: --N-list must not be empty");
    ChainParams p = m.config.params;
    Table t{"current_scan", {"N", "varphi1", "current_correction"}, {}, {}};
    for (int n : n_list) {
        p.N = n;
        p.validate();
        const auto c = current_pipeline(p);
        t.rows.push_back({static_cast<double>(n), c.varphi(0), c.current_correction});
    }
    const int nmax = *std::max_element(n_list.begin(), n_list.end());
    p.N = nmax;
    const double vmax = current_pipeline(p).varphi(0);
    p.N = std::max(2, nmax / 2);
    const double vhalf = current_pipeline(p).varphi(0);
    const double metric = std::abs(vmax - vhalf);
    t.comments.push_back("saturation |varphi1(" + std::to_string(nmax) + ") - varphi1(" + std::to_string(p.N) +
                         ")| = " + std::to_string(metric));
    Output o;
    o.tables.push_back(t);
    o.summary_name = "current_scan";
    o.summary = {{"N_max", nmax}, {"N_half", p.N}, {"saturation_metric", metric}};
    emit(m, o);
    std::cout << "current-scan: saturation metric " << metric << "\n";
    return 0;
}

int cmd_profile(const Manifest& m, const std::string& figure) {
    ChainParams p = m.config.params;
    const int n = p.N;
    Output o;
    json summary;
    summary["varphi1"] = current_pipeline(p).varphi(0);
    if (figure == "y1") {
        Table t{"profile_y1", {"i"}, {}, {}};
        std::vector<Vector> cols;
        for (double kappa : {0.0, 0.1}) {
            p.kappa = kappa;
            const auto y1 = y1_profile(p);
            std::ostringstream tag;
            tag << "kappa" << kappa;
            t.columns.push_back("y1_exact_" + tag.str());
            t.columns.push_back("y1_closed_" + tag.str());
            cols.push_back(y1.exact);
            cols.push_back(y1.closed);
            if (kappa == 0.0) {
                t.columns.push_back("y1_linear_" + tag.str());
                cols.push_back(y1.linear);
                summary["slope_kappa0"] = middle_third_slope(y1.exact);
                const double nu = derive_scalars(p).nu;
                summary["slope_kappa0_reference"] = 2.0 * nu / ((4.0 + nu) * (4.0 + nu)) * 2.0 / (n + 1);
                summary["rho0"] = y1.rho0;
                summary["rho1"] = y1.rho1;
            }
        }
        for (int i = 0; i < n; ++i) {
            std::vector<double> r{static_cast<double>(i + 1)};
            for (const auto& c : cols) r.push_back(c(i));
            t.rows.push_back(std::move(r));
        }
        o.tables.push_back(t);
    } else if (figure == "y2") {
        const auto y2 = y2_profile(p);
        Table t{"profile_y2", {"i", "y2_exact", "y2_pipeline"}, {}, {}};
        for (int i = 0; i < n; ++i) t.rows.push_back({static_cast<double>(i + 1), y2.exact(i), y2.pipeline(i)});
        std::ostringstream c;
        c.precision(17);
        c << "h=" << y2.h << " h_asymptotic=" << y2.h_asymptotic;
        t.comments.push_back(c.str());
        o.tables.push_back(t);
        summary["h"] = y2.h;
        summary["h1"] = y2.h1;
        summary["h2"] = y2.h2;
        summary["h_asymptotic"] = y2.h_asymptotic;
        summary["plateau_midpoint"] = y2.exact((n - 1) / 2);
    } else {
        throw ConfigError("profile: --figure must be y1 or y2");
    }
    o.summary_name = "profile_" + figure + "_summary";
    o.summary = summary;
    emit(m, o);
    return 0;
}

int cmd_simulate(const Manifest& m, int trajectory_stride) {
    if (!m.config.sim) throw ConfigError("simulate: config has no \"sim\" object");
    const auto& p = m.config.params;
    const auto& sim = *m.config.sim;
    const auto est = estimate_stationary_covariance(p, sim);
    const fs::path path = m.out_dir / "simulation.json";
    write_json(path, to_json(est, sim, p));
    std::cout << "wrote " << path.string() << "\n";
    if (trajectory_stride > 0) {
        const auto tr = record_trajectory(p, sim, ChainState::zero(p.N), sim.t_total, trajectory_stride);
        const fs::path tp = m.out_dir / "trajectory.csv";
        write_trajectory_csv(tp, p, tr);
        std::cout << "wrote " << tp.string() << "\n";
    }
    return 0;
}

int cmd_verify(const Manifest& m, const std::vector<int>& n_list, bool negate, bool have_config) {
    VerifyGrid grid;
    if (!n_list.empty()) grid.N = n_list;
    VerifyOptions opt;
    opt.negate_drift = negate;
    if (have_config) opt.sim = m.config.sim;
    auto report = run_verify(grid, opt);
    if (opt.sim) verify_montecarlo(report, m.config.params, *opt.sim);
    const fs::path path = m.out_dir / "verify.json";
    write_json(path, report.to_json());
    for (const auto& c : report.checks)
        if (!c.passed)
            std::cout << "FAIL " << c.name << " [" << c.case_label << "] value=" << c.value << " tol=" << c.tolerance
                      << (c.detail.empty() ? "" : " " + c.detail) << "\n";
    std::cout << "verify: " << report.checks.size() - report.failures() << "/" << report.checks.size()
              << " checks passed; report in " << path.string() << "\n";
    return report.all_passed() ? 0 : 1;
}

std::vector<int> parse_n_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("--N-list: bad entry \"" + item + "\"");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary non-equilibrium states of an anharmonic chain"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::string figure = "y1";
    std::string n_list_text;
    bool negate = false;
    int trajectory_stride = 0;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "JSON config file");
        if (config_required) opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };
    auto* harmonic = app.add_subcommand("harmonic", "closed-form harmonic covariance");
    add_common(harmonic, true);
    auto* perturb = app.add_subcommand("perturb", "first-order correction in lambda");
    add_common(perturb, true);
    auto* scan = app.add_subcommand("current-scan", "current correction over a list of N");
    add_common(scan, true);
    scan->add_option("--N-list", n_list_text, "comma-separated chain lengths")->required();
    auto* profile = app.add_subcommand("profile", "temperature profile curves");
    add_common(profile, true);
    profile->add_option("--figure", figure, "y1 or y2")->check(CLI::IsMember({"y1", "y2"}));
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo stationary covariance");
    add_common(simulate, true);
    simulate->add_option("--trajectory-stride", trajectory_stride, "also dump one trajectory every k steps");
    auto* verify = app.add_subcommand("verify", "deterministic check battery");
    add_common(verify, false);
    verify->add_option("--N-list", n_list_text, "override the grid chain lengths");
    verify->add_flag("--negate-drift", negate, "flip the sign of b in the harmonic checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Manifest m;
    m.out_dir = out_dir;
    m.format = format;
    try {
        const bool have_config = !config_path.empty();
        if (have_config) m.config = load_run_config(config_path);
        if (*harmonic) return m.command = "harmonic", cmd_harmonic(m);
        if (*perturb) return m.command = "perturb", cmd_perturb(m);
        if (*scan) return m.command = "current-scan", cmd_current_scan(m, parse_n_list(n_list_text));
        if (*profile) return m.command = "profile", cmd_profile(m, figure);
        if (*simulate) return m.command = "simulate", cmd_simulate(m, trajectory_stride);
        if (*verify) return m.command = "verify", cmd_verify(m, parse_n_list(n_list_text), negate, have_config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
