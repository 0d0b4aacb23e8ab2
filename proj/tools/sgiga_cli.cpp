// Command-line front end: runs the convergence / delta-scaling / condition /
// surface studies from flat config files and writes CSV + JSON manifests.

#include "sgiga/study_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sgiga;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;     // 0 = keep config value
    long seed = -1;      // -1 = keep config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "study config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads for independent rows");
    cmd->add_option("--seed", args.seed, "seed for randomized rotations/offsets");
}

StudyConfig load_config(const CommonArgs& args, ConfigEcho& echo) {
    StudyConfig cfg = parse_config(read_file(args.config_path), &echo);
    if (args.threads > 0) cfg.threads = args.threads;
    if (args.seed >= 0) cfg.seed = static_cast<unsigned>(args.seed);
    if (cfg.name == "study") cfg.name = fs::path(args.config_path).stem().string();
    // trimmed runs without explicit rotations draw them from the seed
    if (cfg.trimmed && cfg.rotations.empty()) {
        std::mt19937 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(0.1, 0.6);
        for (int i = 0; i < 8; ++i) cfg.rotations.push_back(dist(rng));
    }
    return cfg;
}

int finish(const StudyConfig& cfg, const std::vector<ConvergenceRow>& rows) {
    if (cfg.expect_failure) return 0;
    for (const ConvergenceRow& r : rows)
        if (!r.solved) {
            std::cerr << "solver failure at p=" << r.p << " h=" << r.h << ": " << r.status
                      << "\n";
            return 2;
        }
    return 0;
}

int run_rows_command(const std::string& command, const CommonArgs& args) {
    ConfigEcho echo;
    StudyConfig cfg = load_config(args, echo);
    fs::create_directories(args.out_dir);

    std::vector<ConvergenceRow> rows =
        command == "surface" ? run_surface(cfg) : run_convergence(cfg);

    std::vector<std::string> files;
    for (const int p : cfg.degrees) {
        const std::string name = cfg.name + "_p" + std::to_string(p) + ".csv";
        write_file((fs::path(args.out_dir) / name).string(), convergence_csv(rows, p));
        files.push_back(name);
    }
    write_file((fs::path(args.out_dir) / (cfg.name + ".manifest.json")).string(),
               manifest_json(command, echo, cfg, rows, files).dump(2) + "\n");
    return finish(cfg, rows);
}

int run_condition_command(const CommonArgs& args) {
    ConfigEcho echo;
    StudyConfig cfg = load_config(args, echo);
    fs::create_directories(args.out_dir);
    const std::vector<ConditionRow> rows = run_condition_sweep(cfg);
    const std::string name = cfg.name + "_condition.csv";
    write_file((fs::path(args.out_dir) / name).string(), condition_csv(rows));
    write_file((fs::path(args.out_dir) / (cfg.name + ".manifest.json")).string(),
               manifest_json("condition", echo, cfg, {}, {name}).dump(2) + "\n");
    return 0;
}

int run_delta_command(const CommonArgs& args) {
    ConfigEcho echo;
    StudyConfig cfg = load_config(args, echo);
    fs::create_directories(args.out_dir);
    if (cfg.alphas.empty()) {
        std::cerr << "delta-study: config must list exponents via 'alphas'\n";
        return 1;
    }
    std::vector<double> gammas = cfg.gammas.empty() ? std::vector<double>{cfg.gamma}
                                                    : cfg.gammas;
    std::vector<std::string> files;
    for (const double g : gammas)
        for (const int p : cfg.degrees) {
            const DeltaStudyResult res = run_delta_study(cfg, g, p);
            const std::string name = cfg.name + "_g" + detail::fmt("%g", g) + "_p" +
                                     std::to_string(p) + ".csv";
            write_file((fs::path(args.out_dir) / name).string(), delta_study_csv(res));
            files.push_back(name);
        }
    write_file((fs::path(args.out_dir) / (cfg.name + ".manifest.json")).string(),
               manifest_json("delta-study", echo, cfg, {}, files).dump(2) + "\n");
    return 0;
}

ParametricMap parse_map_kind(const std::string& kind, double gamma) {
    if (kind == "cusp") return ParametricMap::cusp(gamma);
    if (kind == "collapsed-bilinear") return ParametricMap::collapsed_bilinear();
    if (kind.rfind("model-patch-", 0) == 0)
        return ParametricMap::model_patch(std::stoi(kind.substr(12)), gamma);
    if (kind.rfind("ellipsoid-", 0) == 0)
        return ParametricMap::ellipsoid_quarter(std::stoi(kind.substr(10)));
    throw invalid_input("unknown map kind: " + kind);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multipatch isogeometric Laplace solver with metric regularization"};
    app.require_subcommand(1);

    CommonArgs conv_args, delta_args, cond_args, surf_args;
    CLI::App* conv = app.add_subcommand("convergence", "convergence study");
    add_common(conv, conv_args);
    CLI::App* delta = app.add_subcommand("delta-study", "regularization scaling study");
    add_common(delta, delta_args);
    CLI::App* cond = app.add_subcommand("condition", "condition sweep over gamma");
    add_common(cond, cond_args);
    CLI::App* surf = app.add_subcommand("surface", "Laplace-Beltrami surface study");
    add_common(surf, surf_args);

    std::string region_map = "cusp", region_out = "region.csv";
    double region_gamma = 2.0, region_delta = 0.001;
    int region_res = 256;
    CLI::App* region = app.add_subcommand("region", "region-of-regularization indicator");
    region->add_option("--map", region_map, "cusp | collapsed-bilinear | model-patch-K | ellipsoid-K");
    region->add_option("--gamma", region_gamma, "cusp aggressiveness");
    region->add_option("--delta", region_delta, "regularization parameter");
    region->add_option("--res", region_res, "samples per direction");
    region->add_option("--out", region_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (conv->parsed()) return run_rows_command("convergence", conv_args);
        if (surf->parsed()) return run_rows_command("surface", surf_args);
        if (cond->parsed()) return run_condition_command(cond_args);
        if (delta->parsed()) return run_delta_command(delta_args);
        if (region->parsed()) {
            const ParametricMap map = parse_map_kind(region_map, region_gamma);
            const auto field = regularization_region(map, region_delta, region_res);
            write_file(region_out, region_csv(field, region_res));
            return 0;
        }
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
