#pragma once

/**
 * @file io.hpp
 * @brief JSON configs and CSV/JSON reports.
 *
 * Config file: a JSON object with the chain keys
 * {"N","omega","gamma","kappa","lambda","T1","TN"} (and optional "kB",
 * default 1) plus an optional "sim" object with the SimConfig fields.
 *
 * Every CSV starts with a comment line carrying the version and the chain
 * parameters, followed by a header line naming the columns.
 */

#include "sns/chain_model.hpp"
#include "sns/montecarlo.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sns {

using json = nlohmann::json;

inline std::string version_string() {
#ifdef SNS_VERSION_STRING
    return SNS_VERSION_STRING;
#else
    return "unknown";
#endif
}

/// Thrown for malformed or invalid configuration input.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError(std::string(what) + ": unknown key \"" + it.key() + "\"");
    }
}

template <class T>
T required(const json& j, const char* key, const char* what) {
    if (!j.contains(key)) throw ConfigError(std::string(what) + ": missing key \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(what) + ": bad value for \"" + key + "\": " + e.what());
    }
}

template <class T>
T optional_value(const json& j, const char* key, T fallback, const char* what) {
    if (!j.contains(key)) return fallback;
    return required<T>(j, key, what);
}

}  // namespace detail

inline json to_json(const ChainParams& p) {
    return {{"N", p.N},       {"omega", p.omega}, {"gamma", p.gamma}, {"kappa", p.kappa},
            {"lambda", p.lambda}, {"T1", p.T1},   {"TN", p.TN},       {"kB", p.kB}};
}

/// Reads the chain keys of @p j (other top-level keys listed in @p extra are allowed).
inline ChainParams chain_params_from_json(const json& j, std::initializer_list<const char*> extra = {}) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* keys[] = {"N", "omega", "gamma", "kappa", "lambda", "T1", "TN", "kB"};
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        for (const char* k : extra) known = known || it.key() == k;
        if (!known) throw ConfigError("config: unknown key \"" + it.key() + "\"");
    }
    const char* w = "config";
    ChainParams p;
    p.N = detail::required<int>(j, "N", w);
    p.omega = detail::required<double>(j, "omega", w);
    p.gamma = detail::required<double>(j, "gamma", w);
    p.kappa = detail::required<double>(j, "kappa", w);
    p.lambda = detail::required<double>(j, "lambda", w);
    p.T1 = detail::required<double>(j, "T1", w);
    p.TN = detail::required<double>(j, "TN", w);
    p.kB = detail::optional_value<double>(j, "kB", 1.0, w);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

inline json to_json(const SimConfig& c) {
    return {{"dt", c.dt},
            {"t_burn", c.t_burn},
            {"t_total", c.t_total},
            {"n_traj", c.n_traj},
            {"seed", c.seed},
            {"batch_count", c.batch_count},
            {"monitor_stride", c.monitor_stride},
            {"divergence_guard", c.divergence_guard}};
}

/// Missing fields fall back to SimConfig defaults, except dt and t_burn which
/// default to dt_max(params) and default_burn_in(params).
inline SimConfig sim_config_from_json(const json& j, const ChainParams& p) {
    if (!j.is_object()) throw ConfigError("sim: expected a JSON object");
    detail::reject_unknown(
        j, {"dt", "t_burn", "t_total", "n_traj", "seed", "batch_count", "monitor_stride", "divergence_guard"}, "sim");
    const char* w = "sim";
    SimConfig c;
    c.dt = detail::optional_value<double>(j, "dt", dt_max(p), w);
    c.t_burn = detail::optional_value<double>(j, "t_burn", default_burn_in(p), w);
    c.t_total = detail::optional_value<double>(j, "t_total", c.t_burn + 1000.0, w);
    c.n_traj = detail::optional_value<int>(j, "n_traj", c.n_traj, w);
    c.seed = detail::optional_value<std::uint64_t>(j, "seed", c.seed, w);
    c.batch_count = detail::optional_value<int>(j, "batch_count", c.batch_count, w);
    c.monitor_stride = detail::optional_value<int>(j, "monitor_stride", c.monitor_stride, w);
    c.divergence_guard = detail::optional_value<double>(j, "divergence_guard", c.divergence_guard, w);
    try {
        c.validate(p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix: expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) throw ConfigError("matrix: ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline json to_json(const SimEstimate& e, const SimConfig& c, const ChainParams& p) {
    return {{"mean", matrix_to_json(e.mean)},
            {"stderr", matrix_to_json(e.standard_error)},
            {"effective_samples", e.effective_samples},
            {"config", to_json(c)},
            {"params", to_json(p)}};
}

struct RunConfig {
    ChainParams params;
    std::optional<SimConfig> sim;
};

inline RunConfig run_config_from_json(const json& j) {
    RunConfig r;
    r.params = chain_params_from_json(j, {"sim"});
    if (j.contains("sim")) r.sim = sim_config_from_json(j.at("sim"), r.params);
    return r;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::ofstream open_for_writing(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(17);
    return out;
}

inline void close_checked(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string header_comment(const ChainParams& p) {
    return "# sns " + version_string() + " " + p.describe();
}

/// Writes comment, header and rows; integer-valued columns are printed without a fraction.
inline void write_csv(const std::filesystem::path& path, const ChainParams& p, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows, const std::vector<std::string>& extra_comments = {}) {
    auto out = open_for_writing(path);
    out << header_comment(p) << '\n';
    for (const auto& c : extra_comments) out << "# " << c << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
        if (r.size() != columns.size()) throw std::logic_error("write_csv: row width does not match header");
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }
    close_checked(out, path);
}

/// Long-format matrix dump: block,i,j,value with 1-based indices.
inline void write_blocks_csv(const std::filesystem::path& path, const ChainParams& p,
                             const std::vector<std::pair<std::string, Matrix>>& blocks) {
    auto out = open_for_writing(path);
    out << header_comment(p) << '\n' << "block,i,j,value\n";
    for (const auto& [name, m] : blocks)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) out << name << ',' << i + 1 << ',' << j + 1 << ',' << m(i, j) << '\n';
    close_checked(out, path);
}

/// Row-major matrix dump: "# order=K", header c1..cK, then K rows.
inline void write_matrix_csv(const std::filesystem::path& path, const ChainParams& p, const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("write_matrix_csv: matrix must be square");
    auto out = open_for_writing(path);
    out << header_comment(p) << '\n' << "# order=" << m.rows() << '\n';
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << 'c' << j + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
        out << '\n';
    }
    close_checked(out, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_for_writing(path);
    out << j.dump(2) << '\n';
    close_checked(out, path);
}

/// t,q_1..q_N,p_1..p_N
inline void write_trajectory_csv(const std::filesystem::path& path, const ChainParams& p, const Trajectory& tr) {
    std::vector<std::string> cols{"t"};
    for (int i = 1; i <= p.N; ++i) cols.push_back("q" + std::to_string(i));
    for (int i = 1; i <= p.N; ++i) cols.push_back("p" + std::to_string(i));
    std::vector<std::vector<double>> rows;
    rows.reserve(tr.t.size());
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        std::vector<double> r{tr.t[k]};
        for (Eigen::Index i = 0; i < tr.x[k].size(); ++i) r.push_back(tr.x[k](i));
        rows.push_back(std::move(r));
    }
    write_csv(path, p, cols, rows);
}

/// Reads the numeric rows of a CSV written by write_csv (comments and header skipped).
inline std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace sns
