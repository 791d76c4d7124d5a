#include "doodl/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "doodl/errors.hpp"

namespace doodl {

Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw IoError("json: complex scalar must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Json cmatrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix cmatrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw IoError("json: matrix must be a nonempty array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[i].size()) != cols) throw IoError("json: ragged matrix rows");
        for (Index c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[i][c]);
    }
    return m;
}

Json sd_to_json(const SpectralDecomposition& sd) {
    Json j;
    j["p"] = sd.p;
    j["r"] = sd.r;
    Json ev = Json::array();
    for (Index i = 0; i < sd.r; ++i) ev.push_back(complex_to_json(sd.eigvals(i)));
    j["eigvals"] = std::move(ev);
    j["left"] = cmatrix_to_json(sd.left);
    j["right"] = cmatrix_to_json(sd.right);
    return j;
}

SpectralDecomposition sd_from_json(const Json& j) {
    SpectralDecomposition sd;
    sd.p = j.at("p").get<Index>();
    sd.r = j.at("r").get<Index>();
    const Json& ev = j.at("eigvals");
    if (static_cast<Index>(ev.size()) != sd.r) throw IoError("json: eigvals length != r");
    sd.eigvals.resize(sd.r);
    for (Index i = 0; i < sd.r; ++i) sd.eigvals(i) = complex_from_json(ev[i]);
    sd.left = cmatrix_from_json(j.at("left"));
    sd.right = cmatrix_from_json(j.at("right"));
    if (sd.left.rows() != sd.p || sd.left.cols() != sd.r || sd.right.rows() != sd.p ||
        sd.right.cols() != sd.r)
        throw IoError("json: matrix shapes inconsistent with (p, r)");
    return sd;
}

std::string projector_metric_name(ProjectorMetric metric) {
    switch (metric) {
        case ProjectorMetric::geodesic: return "geodesic";
        case ProjectorMetric::chordal: return "chordal";
        case ProjectorMetric::procrustes: return "procrustes";
        case ProjectorMetric::log_martin: return "log_martin";
    }
    throw InvalidInput("unknown projector metric");
}

ProjectorMetric projector_metric_from_name(const std::string& name) {
    if (name == "geodesic") return ProjectorMetric::geodesic;
    if (name == "chordal") return ProjectorMetric::chordal;
    if (name == "procrustes") return ProjectorMetric::procrustes;
    if (name == "log_martin") return ProjectorMetric::log_martin;
    throw InvalidInput("unknown projector metric name: " + name);
}

Json sgot_config_to_json(const SgotConfig& cfg) {
    return Json{{"eta", cfg.eta},
                {"q", cfg.q},
                {"projector_metric", projector_metric_name(cfg.metric)},
                {"delta_clamp", cfg.delta_clamp}};
}

SgotConfig sgot_config_from_json(const Json& j) {
    SgotConfig cfg;
    cfg.eta = j.at("eta").get<double>();
    cfg.q = j.at("q").get<int>();
    cfg.metric = projector_metric_from_name(j.at("projector_metric").get<std::string>());
    cfg.delta_clamp = j.at("delta_clamp").get<double>();
    return cfg;
}

Json train_config_to_json(const TrainConfig& cfg) {
    return Json{{"epochs", cfg.epochs},         {"batch_size", cfg.batch_size},
                {"coeff_lr", cfg.coeff_lr},     {"coeff_iters", cfg.coeff_iters},
                {"dict_lr", cfg.dict_lr},       {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig cfg;
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.coeff_lr = j.at("coeff_lr").get<double>();
    cfg.coeff_iters = j.at("coeff_iters").get<int>();
    cfg.dict_lr = j.at("dict_lr").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

Json dictionary_to_json(const Dictionary& dict, const TrainConfig& train, const TrainingLog& log) {
    Json atoms = Json::array();
    for (const auto& a : dict.atoms) atoms.push_back(sd_to_json(a));
    Json created(dict.created_from);
    return Json{{"sgot", sgot_config_to_json(dict.cfg)},
                {"train", train_config_to_json(train)},
                {"atoms", std::move(atoms)},
                {"init_loss", log.init_loss},
                {"loss_curve", log.batch_losses},
                {"epoch_mean_losses", log.epoch_mean_losses},
                {"created_from", std::move(created)}};
}

Dictionary dictionary_from_json(const Json& j, TrainConfig* train, TrainingLog* log) {
    Dictionary dict;
    dict.cfg = sgot_config_from_json(j.at("sgot"));
    for (const auto& a : j.at("atoms")) dict.atoms.push_back(sd_from_json(a));
    if (j.contains("created_from"))
        dict.created_from = j.at("created_from").get<std::map<std::string, std::string>>();
    if (train) *train = train_config_from_json(j.at("train"));
    if (log) {
        log->init_loss = j.value("init_loss", 0.0);
        log->batch_losses = j.value("loss_curve", std::vector<double>{});
        log->epoch_mean_losses = j.value("epoch_mean_losses", std::vector<double>{});
    }
    return dict;
}

Json rff_map_to_json(const RffMap& map) {
    return Json{{"input_dim", map.input_dim},
                {"num_features", map.num_features},
                {"bandwidth", map.bandwidth},
                {"seed", map.seed}};
}

RffMap rff_map_from_json(const Json& j) {
    return make_rff_map(j.at("input_dim").get<Index>(), j.at("num_features").get<Index>(),
                        j.at("bandwidth").get<double>(), j.at("seed").get<std::uint64_t>());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

Json read_json_file(const std::string& path) {
    try {
        return Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw IoError("json parse error in " + path + ": " + e.what());
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_features_csv(const std::string& path, const FeatureSeries& features) {
    std::vector<std::string> header{"t"};
    for (Index j = 0; j < features.samples.cols(); ++j) header.push_back("z_" + std::to_string(j + 1));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(features.samples.rows());
    for (Index i = 0; i < features.samples.rows(); ++i) {
        std::vector<std::string> row{format_double(static_cast<double>(i) * features.dt)};
        for (Index j = 0; j < features.samples.cols(); ++j)
            row.push_back(format_double(features.samples(i, j)));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

namespace {

std::vector<std::vector<double>> parse_numeric_csv(const std::string& path, std::string* header) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv: " + path);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

FeatureSeries read_features_csv(const std::string& path) {
    std::string header;
    const auto rows = parse_numeric_csv(path, &header);
    if (rows.empty() || rows[0].size() < 2) throw IoError("features csv malformed: " + path);
    FeatureSeries fs;
    const Index t = static_cast<Index>(rows.size());
    const Index p = static_cast<Index>(rows[0].size()) - 1;
    fs.samples.resize(t, p);
    for (Index i = 0; i < t; ++i)
        for (Index j = 0; j < p; ++j) fs.samples(i, j) = rows[i][j + 1];
    fs.dt = t > 1 ? rows[1][0] - rows[0][0] : 0.01;
    return fs;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(traj.x.size());
    for (Index i = 0; i < traj.x.size(); ++i)
        rows.push_back({format_double(static_cast<double>(i) * traj.dt), format_double(traj.x(i))});
    write_csv(path, {"t_seconds", "x"}, rows);
}

Trajectory read_trajectory_csv(const std::string& path) {
    const auto rows = parse_numeric_csv(path, nullptr);
    if (rows.empty() || rows[0].size() != 2) throw IoError("trajectory csv malformed: " + path);
    Trajectory traj;
    traj.x.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) traj.x(static_cast<Index>(i)) = rows[i][1];
    traj.dt = rows.size() > 1 ? rows[1][0] - rows[0][0] : 0.01;
    return traj;
}

bool validate_schema(const Json& value, const Json& schema, std::string* error) {
    auto fail = [&](const std::string& msg) {
        if (error) *error = msg;
        return false;
    };
    if (schema.contains("type")) {
        const std::string type = schema["type"].get<std::string>();
        const bool ok = (type == "object" && value.is_object()) ||
                        (type == "array" && value.is_array()) ||
                        (type == "string" && value.is_string()) ||
                        (type == "number" && value.is_number()) ||
                        (type == "integer" && value.is_number_integer()) ||
                        (type == "boolean" && value.is_boolean());
        if (!ok) return fail("expected type " + type);
    }
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!value.contains(key.get<std::string>()))
                return fail("missing required key " + key.get<std::string>());
    if (schema.contains("properties") && value.is_object())
        for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
            if (value.contains(it.key())) {
                std::string sub;
                if (!validate_schema(value.at(it.key()), it.value(), &sub))
                    return fail(it.key() + ": " + sub);
            }
    if (schema.contains("items") && value.is_array())
        for (const auto& item : value) {
            std::string sub;
            if (!validate_schema(item, schema["items"], &sub)) return fail("item: " + sub);
        }
    if (schema.contains("minItems") && value.is_array() &&
        value.size() < schema["minItems"].get<std::size_t>())
        return fail("array below minItems");
    return true;
}

}  // namespace doodl
