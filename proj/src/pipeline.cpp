#include "doodl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "doodl/errors.hpp"
#include "doodl/rng.hpp"

namespace fs = std::filesystem;

namespace doodl {

namespace {

// Stream ids for master-seed derivation; fixed so artifacts are stable.
constexpr std::uint64_t kStreamTrainW = 1;
constexpr std::uint64_t kStreamTestW = 2;
constexpr std::uint64_t kStreamTrainSeed = 3;
constexpr std::uint64_t kStreamTestSeed = 4;
constexpr std::uint64_t kStreamSwitchSeed = 5;
constexpr std::uint64_t kStreamRff = 6;
constexpr std::uint64_t kStreamTrainRun = 7;

std::string zero_pad(Index v, int width = 3) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*ld", width, static_cast<long>(v));
    return buf;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<Index>(threads, n));
    std::atomic<Index> next(0);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const Index i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["population"] = {{"n_train", cfg.population.n_train},
                       {"n_test", cfg.population.n_test},
                       {"w_min", cfg.population.w_min},
                       {"w_max", cfg.population.w_max}};
    j["sim"] = {{"sigma", cfg.sim.sigma},
                {"dt", cfg.sim.dt},
                {"n_samples", cfg.sim.n_samples},
                {"x0", cfg.sim.x0}};
    j["rff"] = {{"num_features", cfg.rff_features}, {"bandwidth", cfg.rff_bandwidth}};
    j["rrr"] = {{"rank", cfg.rrr.rank}, {"tikhonov", cfg.rrr.tikhonov}, {"window", cfg.rrr.window}};
    j["sgot"] = sgot_config_to_json(cfg.sgot);
    j["train"] = train_config_to_json(cfg.train);
    j["dict_atoms"] = cfg.dict_atoms;
    j["eval"] = {{"prefix_grid", cfg.eval.prefix_grid},
                 {"prefix_steps", cfg.eval.prefix_steps},
                 {"prefix_min", cfg.eval.prefix_min},
                 {"prefix_max", cfg.eval.prefix_max}};
    j["switching"] = {{"w_low", cfg.switching.w_low},       {"w_high", cfg.switching.w_high},
                      {"n_switches", cfg.switching.n_switches},
                      {"segment_samples", cfg.switching.segment_samples},
                      {"windows", cfg.switching.windows},   {"strides", cfg.switching.strides}};
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j;
}

ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig cfg;
    if (j.contains("population")) {
        const Json& p = j["population"];
        cfg.population.n_train = p.value("n_train", cfg.population.n_train);
        cfg.population.n_test = p.value("n_test", cfg.population.n_test);
        cfg.population.w_min = p.value("w_min", cfg.population.w_min);
        cfg.population.w_max = p.value("w_max", cfg.population.w_max);
    }
    if (j.contains("sim")) {
        const Json& s = j["sim"];
        cfg.sim.sigma = s.value("sigma", cfg.sim.sigma);
        cfg.sim.dt = s.value("dt", cfg.sim.dt);
        cfg.sim.n_samples = s.value("n_samples", cfg.sim.n_samples);
        cfg.sim.x0 = s.value("x0", cfg.sim.x0);
    }
    if (j.contains("rff")) {
        cfg.rff_features = j["rff"].value("num_features", cfg.rff_features);
        cfg.rff_bandwidth = j["rff"].value("bandwidth", cfg.rff_bandwidth);
    }
    if (j.contains("rrr")) {
        cfg.rrr.rank = j["rrr"].value("rank", cfg.rrr.rank);
        cfg.rrr.tikhonov = j["rrr"].value("tikhonov", cfg.rrr.tikhonov);
        cfg.rrr.window = j["rrr"].value("window", cfg.rrr.window);
    }
    if (j.contains("sgot")) cfg.sgot = sgot_config_from_json(j["sgot"]);
    if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
    cfg.dict_atoms = j.value("dict_atoms", cfg.dict_atoms);
    if (j.contains("eval")) {
        const Json& e = j["eval"];
        cfg.eval.prefix_grid = e.value("prefix_grid", cfg.eval.prefix_grid);
        cfg.eval.prefix_steps = e.value("prefix_steps", cfg.eval.prefix_steps);
        cfg.eval.prefix_min = e.value("prefix_min", cfg.eval.prefix_min);
        cfg.eval.prefix_max = e.value("prefix_max", cfg.eval.prefix_max);
    }
    if (j.contains("switching")) {
        const Json& s = j["switching"];
        cfg.switching.w_low = s.value("w_low", cfg.switching.w_low);
        cfg.switching.w_high = s.value("w_high", cfg.switching.w_high);
        cfg.switching.n_switches = s.value("n_switches", cfg.switching.n_switches);
        cfg.switching.segment_samples = s.value("segment_samples", cfg.switching.segment_samples);
        cfg.switching.windows = s.value("windows", cfg.switching.windows);
        cfg.switching.strides = s.value("strides", cfg.switching.strides);
    }
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw InvalidInput("--set expects key.path=value, got: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    Json value;
    if (raw == "true" || raw == "false") {
        value = (raw == "true");
    } else if (!raw.empty() && (raw.front() == '[' || raw.front() == '{')) {
        value = Json::parse(raw);
    } else {
        try {
            std::size_t used = 0;
            if (raw.find_first_of(".eE") == std::string::npos) {
                const long long iv = std::stoll(raw, &used);
                if (used == raw.size()) value = iv;
            }
            if (value.is_null()) {
                const double dv = std::stod(raw, &used);
                if (used == raw.size()) value = dv;
            }
        } catch (...) {
        }
        if (value.is_null()) value = raw;
    }

    Json* node = &config;
    std::size_t pos = 0;
    while (true) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw InvalidInput("--set: empty key segment in " + key);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
}

std::vector<Index> resolve_prefix_grid(const EvalConfig& eval, Index full_length) {
    std::vector<Index> grid;
    if (!eval.prefix_grid.empty()) {
        grid = eval.prefix_grid;
    } else {
        const Index lo = std::max<Index>(eval.prefix_min, 2);
        const Index hi = eval.prefix_max > 0 ? eval.prefix_max : full_length;
        if (hi <= lo || eval.prefix_steps < 2)
            throw InvalidInput("eval: bad prefix grid parameters");
        std::set<Index> uniq;
        for (int s = 0; s < eval.prefix_steps; ++s) {
            const double f = static_cast<double>(s) / (eval.prefix_steps - 1);
            const double v = std::exp(std::log(static_cast<double>(lo)) * (1 - f) +
                                      std::log(static_cast<double>(hi)) * f);
            uniq.insert(static_cast<Index>(std::llround(v)));
        }
        grid.assign(uniq.begin(), uniq.end());
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (grid[i] >= grid[i + 1]) throw InvalidInput("eval: prefix grid must be strictly increasing");
    return grid;
}

std::vector<SystemInfo> read_manifest(const std::string& path) {
    const Json j = read_json_file(path);
    std::vector<SystemInfo> out;
    for (const auto& s : j.at("systems")) {
        SystemInfo info;
        info.id = s.at("id").get<std::string>();
        info.role = s.at("role").get<std::string>();
        info.w = s.at("w").get<double>();
        info.seed = s.at("seed").get<std::uint64_t>();
        out.push_back(std::move(info));
    }
    return out;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    ensure_dir(cfg.out_dir);
    ensure_dir(cfg.path("trajectories"));
    write_json_file(cfg.path("config.json"), config_to_json(cfg));

    struct Planned {
        SystemInfo info;
        double x0;
    };
    std::vector<Planned> systems;
    const auto plan = [&](const std::string& role, int count, std::uint64_t w_stream,
                          std::uint64_t seed_stream) {
        for (int i = 0; i < count; ++i) {
            SystemInfo info;
            info.id = role + "_" + zero_pad(i);
            info.role = role;
            info.w = cfg.population.w_min +
                     (cfg.population.w_max - cfg.population.w_min) *
                         rng::uniform01(cfg.seed, w_stream, static_cast<std::uint64_t>(i));
            info.seed = rng::mix3(cfg.seed, seed_stream, static_cast<std::uint64_t>(i));
            const double x0 = cfg.sim.x0 != 0.0 ? cfg.sim.x0 : info.w;
            systems.push_back({std::move(info), x0});
        }
    };
    plan("train", cfg.population.n_train, kStreamTrainW, kStreamTrainSeed);
    plan("test", cfg.population.n_test, kStreamTestW, kStreamTestSeed);

    std::vector<std::string> failures(systems.size());
    parallel_for(static_cast<Index>(systems.size()), cfg.threads, [&](Index i) {
        const auto& sys = systems[i];
        try {
            SimConfig sc = cfg.sim;
            sc.seed = sys.info.seed;
            sc.x0 = sys.x0;
            const Trajectory traj = simulate({sys.info.w}, sc);
            write_trajectory_csv(cfg.path("trajectories/" + sys.info.id + ".csv"), traj);
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });

    Json manifest;
    manifest["dt"] = cfg.sim.dt;
    manifest["sigma"] = cfg.sim.sigma;
    manifest["n_samples"] = cfg.sim.n_samples;
    Json arr = Json::array();
    bool any_failed = false;
    for (std::size_t i = 0; i < systems.size(); ++i) {
        Json s{{"id", systems[i].info.id},
               {"role", systems[i].info.role},
               {"w", systems[i].info.w},
               {"seed", systems[i].info.seed},
               {"x0", systems[i].x0}};
        if (!failures[i].empty()) {
            s["error"] = failures[i];
            any_failed = true;
            std::cerr << "simulate: " << systems[i].info.id << " failed: " << failures[i] << "\n";
        }
        arr.push_back(std::move(s));
    }
    manifest["systems"] = std::move(arr);
    write_json_file(cfg.path("manifest.json"), manifest);
    return any_failed ? kExitPartial : kExitOk;
}

namespace {

double median_heuristic_bandwidth(const ExperimentConfig& cfg,
                                  const std::vector<SystemInfo>& systems) {
    std::vector<RVector> windows;
    std::vector<const SystemInfo*> train;
    for (const auto& s : systems)
        if (s.role == "train") train.push_back(&s);
    if (train.empty()) throw InvalidInput("estimate: no train systems in manifest");
    const std::size_t per_traj = std::max<std::size_t>(1, 1000 / train.size());
    for (const auto* s : train) {
        const Trajectory traj = read_trajectory_csv(cfg.path("trajectories/" + s->id + ".csv"));
        const Index max_start = traj.x.size() - cfg.rrr.window;
        if (max_start < 0) continue;
        const Index stride = std::max<Index>(1, max_start / static_cast<Index>(per_traj));
        for (Index start = 0; start <= max_start && windows.size() < 1000; start += stride)
            windows.push_back(traj.x.segment(start, cfg.rrr.window));
    }
    if (windows.size() < 2) return 1.0;
    std::vector<double> dists;
    dists.reserve(windows.size() * (windows.size() - 1) / 2);
    for (std::size_t i = 0; i < windows.size(); ++i)
        for (std::size_t j = i + 1; j < windows.size(); ++j)
            dists.push_back((windows[i] - windows[j]).norm());
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    const double med = dists[dists.size() / 2];
    return med > 1e-12 ? med : 1.0;
}

Json operator_record(const SystemInfo& sys, const SpectralDecomposition& sd, bool reference) {
    Json j = sd_to_json(sd);
    j["id"] = sys.id;
    j["role"] = sys.role;
    j["w"] = sys.w;
    j["reference"] = reference;
    return j;
}

}  // namespace

int cmd_estimate(const ExperimentConfig& cfg) {
    const std::vector<SystemInfo> systems = read_manifest(cfg.path("manifest.json"));
    ensure_dir(cfg.path("operators"));

    RffMap map;
    if (fs::exists(cfg.path("rff.json"))) {
        map = rff_map_from_json(read_json_file(cfg.path("rff.json")));
    } else {
        const double bw = cfg.rff_bandwidth > 0 ? cfg.rff_bandwidth
                                                : median_heuristic_bandwidth(cfg, systems);
        map = make_rff_map(cfg.rrr.window, cfg.rff_features, bw, rng::mix3(cfg.seed, kStreamRff, 0));
        write_json_file(cfg.path("rff.json"), rff_map_to_json(map));
    }

    std::vector<std::string> failures(systems.size());
    parallel_for(static_cast<Index>(systems.size()), cfg.threads, [&](Index i) {
        const auto& sys = systems[i];
        try {
            const Trajectory traj = read_trajectory_csv(cfg.path("trajectories/" + sys.id + ".csv"));
            const FeatureSeries features = featurize_trajectory(traj.x, map, cfg.rrr.window, traj.dt);
            const OperatorMatrix op = rrr_estimate(features, cfg.rrr);
            const SpectralDecomposition sd = spectral_decompose(op, cfg.rrr.rank);
            write_json_file(cfg.path("operators/" + sys.id + ".json"),
                            operator_record(sys, sd, /*reference=*/true));
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });

    bool any_failed = false;
    for (std::size_t i = 0; i < systems.size(); ++i)
        if (!failures[i].empty()) {
            any_failed = true;
            std::cerr << "estimate: " << systems[i].id << " failed: " << failures[i] << "\n";
        }
    return any_failed ? kExitPartial : kExitOk;
}

namespace {

struct LoadedOperators {
    std::vector<SystemInfo> train, test;
    std::vector<SpectralDecomposition> train_sd, test_sd;
};

LoadedOperators load_operators(const ExperimentConfig& cfg) {
    LoadedOperators out;
    for (const auto& sys : read_manifest(cfg.path("manifest.json"))) {
        const std::string path = cfg.path("operators/" + sys.id + ".json");
        if (!fs::exists(path)) continue;
        SpectralDecomposition sd = sd_from_json(read_json_file(path));
        if (sys.role == "train") {
            out.train.push_back(sys);
            out.train_sd.push_back(std::move(sd));
        } else {
            out.test.push_back(sys);
            out.test_sd.push_back(std::move(sd));
        }
    }
    return out;
}

}  // namespace

int cmd_train_dict(const ExperimentConfig& cfg, Index atoms_override) {
    const Index d = atoms_override > 0 ? atoms_override : cfg.dict_atoms;
    LoadedOperators ops = load_operators(cfg);
    if (static_cast<Index>(ops.train_sd.size()) < d)
        throw InvalidInput("train-dict: fewer train operators than atoms");

    TrainConfig train = cfg.train;
    if (train.seed == 0) train.seed = rng::mix3(cfg.seed, kStreamTrainRun, 0);

    TrainingLog log;
    Dictionary dict = train_dictionary(ops.train_sd, d, train, cfg.sgot, &log);
    dict.created_from["command"] = "train-dict";
    dict.created_from["n_train"] = std::to_string(ops.train_sd.size());
    dict.created_from["master_seed"] = std::to_string(cfg.seed);

    write_json_file(cfg.path("dictionary.json"), dictionary_to_json(dict, train, log));

    std::vector<std::vector<std::string>> rows;
    const Index batches_per_epoch =
        log.batch_losses.empty() ? 0 : static_cast<Index>(log.batch_losses.size()) / train.epochs;
    for (std::size_t b = 0; b < log.batch_losses.size(); ++b) {
        const Index epoch = batches_per_epoch > 0 ? static_cast<Index>(b) / batches_per_epoch : 0;
        const Index batch = batches_per_epoch > 0 ? static_cast<Index>(b) % batches_per_epoch : 0;
        rows.push_back({std::to_string(epoch), std::to_string(batch),
                        format_double(log.batch_losses[b])});
    }
    write_csv(cfg.path("loss_curve.csv"), {"epoch", "batch", "mean_loss"}, rows);
    return kExitOk;
}

namespace {

const char* kMethods[] = {"doodl", "rrr", "linear_dl", "mean_recon"};

struct EvalCell {
    std::string system_id;
    std::string method;
    Index prefix = 0;
    double sgot_error = std::numeric_limits<double>::quiet_NaN();
    double eig_error = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = std::numeric_limits<double>::quiet_NaN();
    std::string error_tag;
};

double leading_eig_abs_error(const SpectralDecomposition& a, const SpectralDecomposition& b) {
    return std::abs(a.eigvals(0) - b.eigvals(0));
}

}  // namespace

int cmd_eval_short(const ExperimentConfig& cfg, const std::string& dictionary_path) {
    TrainConfig train_cfg;
    Dictionary dict = dictionary_from_json(read_json_file(dictionary_path), &train_cfg);
    LoadedOperators ops = load_operators(cfg);
    if (ops.test.empty()) throw InvalidInput("eval-short: no test operators found");
    const RffMap map = rff_map_from_json(read_json_file(cfg.path("rff.json")));

    // Training-set codes: coefficients.csv plus the constant mean predictor.
    const std::vector<FitResult> train_fits = fit_coefficients(ops.train_sd, dict, train_cfg);
    {
        std::vector<std::string> header{"id"};
        for (Index j = 0; j < dict.size(); ++j) header.push_back("alpha_" + std::to_string(j + 1));
        header.push_back("loss");
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < train_fits.size(); ++i) {
            std::vector<std::string> row{ops.train[i].id};
            for (Index j = 0; j < dict.size(); ++j)
                row.push_back(format_double(train_fits[i].coeffs.alpha(j)));
            row.push_back(format_double(train_fits[i].loss));
            rows.push_back(std::move(row));
        }
        write_csv(cfg.path("coefficients.csv"), header, rows);
    }
    std::vector<Coefficients> train_coeffs;
    for (const auto& f : train_fits) train_coeffs.push_back(f.coeffs);
    const SpectralDecomposition mean_recon = mean_reconstruction_baseline(dict, train_coeffs);

    std::vector<OperatorMatrix> train_ops;
    for (const auto& sd : ops.train_sd) train_ops.push_back(assemble_operator(sd));
    const LinearDlModel linear_model =
        linear_dl_baseline(train_ops, dict.size(), rng::mix3(cfg.seed, kStreamTrainRun, 1));

    const std::vector<Index> prefixes = resolve_prefix_grid(cfg.eval, cfg.sim.n_samples);

    const Index n_cells = static_cast<Index>(ops.test.size()) * static_cast<Index>(prefixes.size());
    std::vector<std::vector<EvalCell>> cells(n_cells);
    parallel_for(n_cells, cfg.threads, [&](Index cell_idx) {
        const Index si = cell_idx / static_cast<Index>(prefixes.size());
        const Index pi = cell_idx % static_cast<Index>(prefixes.size());
        const SystemInfo& sys = ops.test[si];
        const SpectralDecomposition& reference = ops.test_sd[si];
        const Index prefix = prefixes[pi];

        const Trajectory full = read_trajectory_csv(cfg.path("trajectories/" + sys.id + ".csv"));
        const Index take = std::min<Index>(prefix, full.x.size());

        auto make_cell = [&](const char* method) {
            EvalCell c;
            c.system_id = sys.id;
            c.method = method;
            c.prefix = prefix;
            return c;
        };
        auto score = [&](EvalCell& c, const SpectralDecomposition& sd,
                         std::chrono::steady_clock::time_point start) {
            c.sgot_error = sgot_divergence(sd, reference, cfg.sgot);
            c.eig_error = leading_eig_abs_error(sd, reference);
            c.wall_ms = elapsed_ms(start);
        };

        FeatureSeries features;
        bool featurized = false;
        std::string featurize_error;
        try {
            features = featurize_trajectory(full.x.head(take), map, cfg.rrr.window, full.dt);
            featurized = true;
        } catch (const Error& e) {
            featurize_error = e.what();
        }

        for (const char* method : kMethods) {
            EvalCell c = make_cell(method);
            const auto start = std::chrono::steady_clock::now();
            try {
                if (!featurized) throw InsufficientData(featurize_error);
                const std::string m = method;
                if (m == "doodl") {
                    const auto est = estimate_short_trajectory(features, dict, train_cfg);
                    score(c, est.decoded, start);
                } else if (m == "rrr") {
                    const OperatorMatrix op = rrr_estimate(features, cfg.rrr);
                    score(c, spectral_decompose(op, cfg.rrr.rank), start);
                } else if (m == "linear_dl") {
                    const TransitionStats stats = make_transition_stats(features);
                    const auto [alpha, g] = linear_dl_short_fit(linear_model, stats);
                    OperatorMatrix op;
                    op.p = g.rows();
                    op.matrix = g;
                    op.rank_hint = cfg.rrr.rank;
                    score(c, spectral_decompose(op, cfg.rrr.rank), start);
                } else {
                    score(c, mean_recon, start);
                }
            } catch (const Error& e) {
                c.error_tag = e.what();
                c.wall_ms = elapsed_ms(start);
            }
            cells[cell_idx].push_back(std::move(c));
        }
    });

    // Flatten in deterministic (system, prefix, method) order.
    std::vector<std::vector<std::string>> rows;
    Json failures = Json::array();
    std::map<std::string, std::map<Index, std::map<std::string, std::vector<double>>>> by_key;
    for (Index idx = 0; idx < n_cells; ++idx)
        for (const auto& c : cells[idx]) {
            rows.push_back({c.system_id, c.method, std::to_string(c.prefix),
                            format_double(c.sgot_error), format_double(c.eig_error),
                            format_double(c.wall_ms)});
            if (!c.error_tag.empty())
                failures.push_back(Json{{"system_id", c.system_id},
                                        {"method", c.method},
                                        {"prefix_len", c.prefix},
                                        {"error", c.error_tag}});
            else {
                by_key[c.method][c.prefix]["sgot"].push_back(c.sgot_error);
                by_key[c.method][c.prefix]["eig"].push_back(c.eig_error);
            }
        }
    write_csv(cfg.path("results.csv"),
              {"system_id", "method", "prefix_len", "sgot_error", "leading_eigval_abs_error",
               "wall_time_ms"},
              rows);

    auto median = [](std::vector<double> v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };

    Json summary;
    summary["prefixes"] = prefixes;
    Json per_method;
    for (const auto& [method, per_prefix] : by_key) {
        Json m;
        for (const auto& [prefix, metrics] : per_prefix) {
            Json cell;
            const auto& sg = metrics.at("sgot");
            const auto& ei = metrics.at("eig");
            cell["median_sgot_error"] = median(sg);
            cell["mean_sgot_error"] = mean(sg);
            cell["median_eig_error"] = median(ei);
            cell["mean_eig_error"] = mean(ei);
            cell["count"] = sg.size();
            m[std::to_string(prefix)] = std::move(cell);
        }
        per_method[method] = std::move(m);
    }
    summary["per_method"] = std::move(per_method);
    summary["failures"] = failures;
    write_json_file(cfg.path("summary.json"), summary);
    return failures.empty() ? kExitOk : kExitPartial;
}

int cmd_detect_switches(const ExperimentConfig& cfg, const std::string& dictionary_path) {
    TrainConfig train_cfg;
    const Dictionary dict = dictionary_from_json(read_json_file(dictionary_path), &train_cfg);
    const RffMap map = rff_map_from_json(read_json_file(cfg.path("rff.json")));
    ensure_dir(cfg.path("switching"));

    std::vector<Regime> regimes;
    for (int s = 0; s <= cfg.switching.n_switches; ++s) {
        const double w = (s % 2 == 0) ? cfg.switching.w_low : cfg.switching.w_high;
        regimes.push_back({{w}, cfg.switching.segment_samples});
    }
    SimConfig sc = cfg.sim;
    sc.seed = rng::mix3(cfg.seed, kStreamSwitchSeed, 0);
    sc.x0 = cfg.switching.w_low;
    auto [traj, switch_indices] = simulate_switching(regimes, sc);
    write_trajectory_csv(cfg.path("switching/trajectory.csv"), traj);
    write_json_file(cfg.path("switching/switches.json"),
                    Json{{"switch_indices", switch_indices},
                         {"segment_samples", cfg.switching.segment_samples},
                         {"w_low", cfg.switching.w_low},
                         {"w_high", cfg.switching.w_high}});

    const FeatureSeries features = featurize_trajectory(traj.x, map, cfg.rrr.window, traj.dt);

    Json report;
    report["true_switches"] = switch_indices;
    Json per_window = Json::array();
    for (std::size_t wi = 0; wi < cfg.switching.windows.size(); ++wi) {
        const Index window = cfg.switching.windows[wi];
        const Index stride = wi < cfg.switching.strides.size() ? cfg.switching.strides[wi]
                                                               : std::max<Index>(1, window / 10);
        const auto rolled = rolling_coefficients(features, dict, window, stride, train_cfg);

        std::vector<std::string> header{"t"};
        for (Index j = 0; j < dict.size(); ++j) header.push_back("alpha_" + std::to_string(j + 1));
        std::vector<std::vector<std::string>> rows;
        for (const auto& [start, coeffs] : rolled) {
            std::vector<std::string> row{format_double(static_cast<double>(start) * features.dt)};
            for (Index j = 0; j < dict.size(); ++j) row.push_back(format_double(coeffs.alpha(j)));
            rows.push_back(std::move(row));
        }
        write_csv(cfg.path("switching/coeffs_w" + std::to_string(window) + ".csv"), header, rows);

        // 0.5-crossings of alpha_1, located at the later window's start row.
        std::vector<Index> crossings;
        for (std::size_t k = 1; k < rolled.size(); ++k) {
            const double prev = rolled[k - 1].second.alpha(0) - 0.5;
            const double cur = rolled[k].second.alpha(0) - 0.5;
            if (prev == 0.0) continue;
            if ((prev < 0) != (cur < 0)) crossings.push_back(rolled[k].first);
        }
        std::vector<Index> crossings_after_burnin;
        for (Index c : crossings)
            if (c >= window) crossings_after_burnin.push_back(c);

        Json latencies = Json::array();
        for (Index s : switch_indices) {
            Index best = -1;
            for (Index c : crossings) {
                const Index lat = std::abs(static_cast<long>(c) - static_cast<long>(s));
                if (best < 0 || lat < best) best = lat;
            }
            latencies.push_back(best);
        }

        per_window.push_back(Json{{"window", window},
                                  {"stride", stride},
                                  {"crossings", crossings},
                                  {"crossings_after_burnin", crossings_after_burnin},
                                  {"min_abs_latency_per_switch", latencies}});
    }
    report["per_window"] = std::move(per_window);
    write_json_file(cfg.path("switching/detection.json"), report);
    return kExitOk;
}

int cmd_distance_matrix(const ExperimentConfig& cfg, const std::vector<std::string>& operator_files,
                        const std::string& out_csv) {
    if (operator_files.empty()) throw InvalidInput("distance-matrix: no operator files");
    std::vector<std::string> ids;
    std::vector<SpectralDecomposition> sds;
    for (const auto& path : operator_files) {
        const Json j = read_json_file(path);
        ids.push_back(j.value("id", path));
        sds.push_back(sd_from_json(j));
    }
    for (const auto& sd : sds)
        if (sd.p != sds.front().p || sd.r != sds.front().r)
            throw InvalidInput("distance-matrix: operators with mixed (p, r)");

    const Index n = static_cast<Index>(sds.size());
    RMatrix dist = RMatrix::Zero(n, n);
    std::vector<std::pair<Index, Index>> pairs;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    parallel_for(static_cast<Index>(pairs.size()), cfg.threads, [&](Index k) {
        const auto [i, j] = pairs[k];
        dist(i, j) = dist(j, i) = sgot_divergence(sds[i], sds[j], cfg.sgot);
    });

    std::vector<std::string> header{"id"};
    header.insert(header.end(), ids.begin(), ids.end());
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < n; ++i) {
        std::vector<std::string> row{ids[i]};
        for (Index j = 0; j < n; ++j) row.push_back(format_double(dist(i, j)));
        rows.push_back(std::move(row));
    }
    write_csv(out_csv, header, rows);
    return kExitOk;
}

int cmd_selftest(const ExperimentConfig& base) {
    ExperimentConfig cfg = base;
    cfg.out_dir = base.out_dir + "/selftest";
    cfg.population = {4, 2, 0.5, 1.2};
    cfg.sim.n_samples = 600;
    cfg.sim.sigma = 0.5;
    cfg.rff_features = 16;
    cfg.rrr = {2, 1e-6, 10};
    cfg.train.epochs = 1;
    cfg.train.batch_size = 4;
    cfg.train.coeff_iters = 15;
    cfg.dict_atoms = 2;
    cfg.eval.prefix_grid = {60, 600};
    cfg.switching.windows = {20};
    cfg.switching.strides = {40};
    cfg.switching.segment_samples = 300;
    cfg.switching.n_switches = 1;

    int rc = cmd_simulate(cfg);
    if (rc == kExitOk) rc = cmd_estimate(cfg);
    if (rc == kExitOk) rc = cmd_train_dict(cfg);
    if (rc == kExitOk) rc = cmd_eval_short(cfg, cfg.path("dictionary.json"));
    if (rc == kExitOk) rc = cmd_detect_switches(cfg, cfg.path("dictionary.json"));
    if (rc == kExitOk) {
        std::vector<std::string> op_files;
        for (const auto& sys : read_manifest(cfg.path("manifest.json")))
            op_files.push_back(cfg.path("operators/" + sys.id + ".json"));
        rc = cmd_distance_matrix(cfg, op_files, cfg.path("distance_matrix.csv"));
    }
    std::cout << (rc == kExitOk ? "selftest: ok" : "selftest: FAILED") << "\n";
    return rc;
}

}  // namespace doodl
