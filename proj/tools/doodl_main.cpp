#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "doodl/errors.hpp"
#include "doodl/pipeline.hpp"

namespace {

// Config resolution order: defaults < --config file < --set overrides < flags.
doodl::ExperimentConfig resolve_config(const std::string& config_path,
                                       const std::vector<std::string>& overrides,
                                       const std::string& out_dir, long seed, int threads) {
    doodl::Json j = doodl::config_to_json(doodl::default_config());
    if (!config_path.empty()) {
        const doodl::Json file = doodl::read_json_file(config_path);
        j.merge_patch(file);
    }
    for (const auto& assignment : overrides) doodl::apply_override(j, assignment);
    doodl::ExperimentConfig cfg = doodl::config_from_json(j);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (const char* env_root = std::getenv("DOODL_OUT_ROOT"); env_root && *env_root)
        cfg.out_dir = std::string(env_root) + "/" + cfg.out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) cfg.threads = threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DOODL: operator dictionary learning on Langevin benchmarks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, dictionary_path, out_csv;
    std::vector<std::string> overrides, operator_files;
    long seed = -1;
    int threads = 0;
    long dict_atoms = 0;
    bool print_config = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", overrides, "override config entries, key.path=value")->take_all();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads");
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    auto* sim = app.add_subcommand("simulate", "simulate the two-well population");
    auto* est = app.add_subcommand("estimate", "featurize and estimate operators (RRR)");
    auto* trd = app.add_subcommand("train-dict", "learn the operator dictionary");
    trd->add_option("--atoms", dict_atoms, "number of dictionary atoms");
    auto* evs = app.add_subcommand("eval-short", "short-trajectory estimation sweep");
    evs->add_option("--dictionary", dictionary_path, "dictionary JSON path");
    auto* det = app.add_subcommand("detect-switches", "rolling coefficients on a switching run");
    det->add_option("--dictionary", dictionary_path, "dictionary JSON path");
    auto* dmx = app.add_subcommand("distance-matrix", "pairwise SGOT distance matrix");
    dmx->add_option("operators", operator_files, "operator JSON files")->required();
    dmx->add_option("--out-csv", out_csv, "output CSV path")->required();
    auto* slf = app.add_subcommand("selftest", "fast end-to-end smoke run");

    CLI11_PARSE(app, argc, argv);

    try {
        const doodl::ExperimentConfig cfg =
            resolve_config(config_path, overrides, out_dir, seed, threads);
        if (print_config) {
            std::cout << doodl::config_to_json(cfg).dump(2) << "\n";
            return doodl::kExitOk;
        }
        const std::string dict_path =
            dictionary_path.empty() ? cfg.path("dictionary.json") : dictionary_path;
        if (sim->parsed()) return doodl::cmd_simulate(cfg);
        if (est->parsed()) return doodl::cmd_estimate(cfg);
        if (trd->parsed()) return doodl::cmd_train_dict(cfg, static_cast<doodl::Index>(dict_atoms));
        if (evs->parsed()) return doodl::cmd_eval_short(cfg, dict_path);
        if (det->parsed()) return doodl::cmd_detect_switches(cfg, dict_path);
        if (dmx->parsed()) return doodl::cmd_distance_matrix(cfg, operator_files, out_csv);
        if (slf->parsed()) return doodl::cmd_selftest(cfg);
    } catch (const doodl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return doodl::kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return doodl::kExitFatal;
    }
    return doodl::kExitFatal;
}
