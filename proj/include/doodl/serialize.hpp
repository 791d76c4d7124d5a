#pragma once

#include <string>
#include <vector>

#include "doodl/dictionary.hpp"
#include "doodl/estimators.hpp"
#include "doodl/spectral.hpp"
#include "json.hpp"

namespace doodl {

using Json = nlohmann::json;

// Complex scalars serialize as [re, im]; matrices as row-major nested arrays.
// nlohmann emits shortest round-trip decimals, so double round-trips are
// bit-exact.
Json complex_to_json(const Complex& z);
Complex complex_from_json(const Json& j);
Json cmatrix_to_json(const CMatrix& m);
CMatrix cmatrix_from_json(const Json& j);

Json sd_to_json(const SpectralDecomposition& sd);
SpectralDecomposition sd_from_json(const Json& j);

Json sgot_config_to_json(const SgotConfig& cfg);
SgotConfig sgot_config_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

Json dictionary_to_json(const Dictionary& dict, const TrainConfig& train,
                        const TrainingLog& log);
Dictionary dictionary_from_json(const Json& j, TrainConfig* train = nullptr,
                                TrainingLog* log = nullptr);

Json rff_map_to_json(const RffMap& map);
RffMap rff_map_from_json(const Json& j);

std::string projector_metric_name(ProjectorMetric metric);
ProjectorMetric projector_metric_from_name(const std::string& name);

// File helpers. Writes are whole-buffer so reruns produce identical bytes.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

// Deterministic double formatting for CSV output (17 significant digits).
std::string format_double(double v);

// CSV with a header row; every cell already formatted.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// FeatureSeries CSV: header (t, z_1..z_p), t in seconds.
void write_features_csv(const std::string& path, const FeatureSeries& features);
FeatureSeries read_features_csv(const std::string& path);

// Trajectory CSV: header (t_seconds, x).
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

// Minimal JSON-schema checker (type / properties / required / items subset),
// enough to validate every artifact against the schemas shipped in docs/.
bool validate_schema(const Json& value, const Json& schema, std::string* error = nullptr);

}  // namespace doodl
