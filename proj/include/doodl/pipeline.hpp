#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "doodl/dictionary.hpp"
#include "doodl/estimators.hpp"
#include "doodl/langevin.hpp"
#include "doodl/serialize.hpp"

namespace doodl {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

struct PopulationConfig {
    int n_train = 32;
    int n_test = 16;
    double w_min = 0.5;
    double w_max = 1.2;
};

struct SwitchingConfig {
    double w_low = 0.5;
    double w_high = 1.2;
    int n_switches = 3;
    Index segment_samples = 4000;
    std::vector<Index> windows = {10, 100, 1000};
    std::vector<Index> strides;  // empty: max(1, window / 10)
};

struct EvalConfig {
    std::vector<Index> prefix_grid;  // explicit; empty: log-spaced from the fields below
    int prefix_steps = 20;
    Index prefix_min = 10;
    Index prefix_max = 0;  // 0: full trajectory length
};

struct ExperimentConfig {
    PopulationConfig population;
    SimConfig sim;  // per-system seed/x0 derived from the master seed
    Index rff_features = 100;
    double rff_bandwidth = 0.0;  // 0: median heuristic over subsampled windows
    RrrConfig rrr;
    SgotConfig sgot;
    TrainConfig train;
    Index dict_atoms = 4;
    EvalConfig eval;
    SwitchingConfig switching;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;

    std::string path(const std::string& rel) const { return out_dir + "/" + rel; }
};

Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig default_config();

// Applies a "--set key.path=value" override onto the config JSON.
void apply_override(Json& config, const std::string& assignment);

// Strictly increasing prefix grid, log-spaced when not explicit.
std::vector<Index> resolve_prefix_grid(const EvalConfig& eval, Index full_length);

// Commands. Each writes its artifacts under cfg.out_dir and returns an exit
// code (0 ok, 2 partial per-item failures, 1 fatal).
int cmd_simulate(const ExperimentConfig& cfg);
int cmd_estimate(const ExperimentConfig& cfg);
int cmd_train_dict(const ExperimentConfig& cfg, Index atoms_override = 0);
int cmd_eval_short(const ExperimentConfig& cfg, const std::string& dictionary_path);
int cmd_detect_switches(const ExperimentConfig& cfg, const std::string& dictionary_path);
int cmd_distance_matrix(const ExperimentConfig& cfg, const std::vector<std::string>& operator_files,
                        const std::string& out_csv);
int cmd_selftest(const ExperimentConfig& cfg);

// Per-system metadata recorded in manifest.json.
struct SystemInfo {
    std::string id;
    std::string role;  // "train" | "test"
    double w = 0.0;
    std::uint64_t seed = 0;
};

std::vector<SystemInfo> read_manifest(const std::string& path);

// Deterministic parallel map: fn(i) for i in [0, n), gathered by index.
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

}  // namespace doodl
