#pragma once

#include "sgiga/experiments.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sgiga {

inline constexpr const char* tool_version = "0.1.0";

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

/// Numbers in configs may be written as fractions ("1/32") so mesh size
/// lists stay exact and diff-friendly.
inline double parse_number(const std::string& tok) {
    const auto slash = tok.find('/');
    if (slash != std::string::npos) {
        const double num = std::stod(tok.substr(0, slash));
        const double den = std::stod(tok.substr(slash + 1));
        return num / den;
    }
    return std::stod(tok);
}

inline std::vector<double> parse_list(const std::string& value) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string tok;
    while (in >> tok) {
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (!tok.empty()) out.push_back(parse_number(tok));
    }
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw invalid_input("config: bad boolean value '" + v + "'");
}

} // namespace detail

/// Parses the flat key-value study config format. Lines are `key = value`,
/// `#` starts a comment, lists are whitespace separated.
inline StudyConfig parse_config(const std::string& text, ConfigEcho* echo = nullptr) {
    StudyConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw invalid_input("config: expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (echo) echo->emplace_back(key, value);

        if (key == "name") cfg.name = value;
        else if (key == "domain") cfg.domain = value;
        else if (key == "gamma") cfg.gamma = detail::parse_number(value);
        else if (key == "degrees") {
            cfg.degrees.clear();
            for (double d : detail::parse_list(value)) cfg.degrees.push_back(static_cast<int>(d));
        }
        else if (key == "hs") cfg.hs = detail::parse_list(value);
        else if (key == "variant") {
            if (value == "regularized") cfg.variant = MethodVariant::Regularized;
            else if (value == "robust-delta0") cfg.variant = MethodVariant::RobustDelta0;
            else if (value == "naive") cfg.variant = MethodVariant::Naive;
            else throw invalid_input("config: unknown variant '" + value + "'");
        }
        else if (key == "delta_mode") cfg.delta_mode = value;
        else if (key == "delta_fixed") cfg.delta_fixed = detail::parse_number(value);
        else if (key == "delta_alpha") cfg.delta_alpha = detail::parse_number(value);
        else if (key == "trimmed") cfg.trimmed = detail::parse_bool(value);
        else if (key == "rotations") cfg.rotations = detail::parse_list(value);
        else if (key == "offsets") cfg.offsets = detail::parse_list(value);
        else if (key == "eta") cfg.eta = detail::parse_number(value);
        else if (key == "beta_coeff") cfg.beta_coeff = detail::parse_number(value);
        else if (key == "kappa") cfg.kappa = detail::parse_number(value);
        else if (key == "compute_cond") cfg.compute_cond = detail::parse_bool(value);
        else if (key == "expect_failure") cfg.expect_failure = detail::parse_bool(value);
        else if (key == "alphas") cfg.alphas = detail::parse_list(value);
        else if (key == "gammas") cfg.gammas = detail::parse_list(value);
        else if (key == "gamma_min") cfg.gamma_min = static_cast<int>(detail::parse_number(value));
        else if (key == "gamma_max") cfg.gamma_max = static_cast<int>(detail::parse_number(value));
        else if (key == "cond_h") cfg.cond_h = detail::parse_number(value);
        else if (key == "seed") cfg.seed = static_cast<unsigned>(detail::parse_number(value));
        else if (key == "threads") cfg.threads = static_cast<int>(detail::parse_number(value));
        else throw invalid_input("config: unknown key '" + key + "'");
    }
    return cfg;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

} // namespace detail

/// CSV for the rows of one degree; fixed header, '.' decimals, '\n' ends.
inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows, int p) {
    std::string out = "h,dofs,err_l2,eoc_l2,err_h1,eoc_h1,cond\n";
    for (const ConvergenceRow& r : rows) {
        if (r.p != p) continue;
        out += detail::fmt("%.10g", r.h) + "," + std::to_string(r.dofs) + ",";
        out += detail::fmt("%.12e", r.err_l2) + ",";
        out += std::isfinite(r.eoc_l2) ? detail::fmt("%.6f", r.eoc_l2) : std::string();
        out += ",";
        out += detail::fmt("%.12e", r.err_h1) + ",";
        out += std::isfinite(r.eoc_h1) ? detail::fmt("%.6f", r.eoc_h1) : std::string();
        out += ",";
        out += std::isfinite(r.cond) ? detail::fmt("%.6e", r.cond) : std::string();
        out += "\n";
    }
    return out;
}

inline std::string condition_csv(const std::vector<ConditionRow>& rows) {
    std::string out = "variant,gamma,p,h,dofs,cond,definite\n";
    for (const ConditionRow& r : rows) {
        out += std::string(variant_name(r.variant)) + ",";
        out += detail::fmt("%.10g", r.gamma) + "," + std::to_string(r.p) + ",";
        out += detail::fmt("%.10g", r.h) + "," + std::to_string(r.dofs) + ",";
        out += detail::fmt("%.6e", r.cond) + ",";
        out += r.definite ? "1" : "0";
        out += "\n";
    }
    return out;
}

/// One CSV per (gamma, p): column h, then one L2 and one H1 column per
/// exponent of the sweep.
inline std::string delta_study_csv(const DeltaStudyResult& res) {
    std::string out = "h";
    for (double a : res.alphas) out += ",l2_a" + detail::fmt("%.6g", a);
    for (double a : res.alphas) out += ",h1_a" + detail::fmt("%.6g", a);
    out += "\n";
    for (std::size_t i = 0; i < res.hs.size(); ++i) {
        out += detail::fmt("%.10g", res.hs[i]);
        for (std::size_t j = 0; j < res.alphas.size(); ++j)
            out += "," + detail::fmt("%.12e", res.err_l2[i][j]);
        for (std::size_t j = 0; j < res.alphas.size(); ++j)
            out += "," + detail::fmt("%.12e", res.err_h1[i][j]);
        out += "\n";
    }
    return out;
}

inline std::string region_csv(const std::vector<std::uint8_t>& field, int n) {
    std::string out;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (i) out += ",";
            out += field[static_cast<std::size_t>(j) * n + i] ? "1" : "0";
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::json row_json(const ConvergenceRow& r) {
    nlohmann::json j;
    j["p"] = r.p;
    j["h"] = r.h;
    j["dofs"] = r.dofs;
    j["delta"] = r.delta;
    j["err_l2"] = r.err_l2;
    j["eoc_l2"] = r.eoc_l2;
    j["err_h1"] = r.err_h1;
    j["eoc_h1"] = r.eoc_h1;
    j["cond"] = r.cond;
    j["cond_definite"] = r.cond_definite;
    j["solved"] = r.solved;
    j["status"] = r.status;
    j["solution_mean"] = r.solution_mean;
    j["regularized_points"] = r.reg_points;
    j["collapsed_points"] = r.collapsed_points;
    j["slivers"] = r.slivers;
    j["wall_ms"] = r.wall_ms;
    return j;
}

/// Run manifest: echoes the config (sufficient to reproduce the run), the
/// tool version, per-row outputs and event counters.
inline nlohmann::json manifest_json(const std::string& command, const ConfigEcho& echo,
                                    const StudyConfig& cfg,
                                    const std::vector<ConvergenceRow>& rows,
                                    const std::vector<std::string>& files) {
    nlohmann::json j;
    j["tool"] = "sgiga";
    j["version"] = tool_version;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    nlohmann::json cfgj = nlohmann::json::array();
    for (const auto& [k, v] : echo) cfgj.push_back({{"key", k}, {"value", v}});
    j["config"] = cfgj;
    j["files"] = files;
    nlohmann::json rj = nlohmann::json::array();
    for (const ConvergenceRow& r : rows) rj.push_back(row_json(r));
    j["rows"] = rj;
    return j;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input("cannot open output file: " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace sgiga
