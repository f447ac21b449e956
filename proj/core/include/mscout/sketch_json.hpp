#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "mscout/lsh.hpp"
#include "mscout/types.hpp"

namespace mscout {

// Model card stored alongside a sketch in the registry.
struct ModelRecord {
    std::string model_id;
    std::string display_name;
    std::string task_tag;
    std::optional<double> source_accuracy;
    std::string dataset_id;
    std::string created_at;
    std::string notes;
};

inline constexpr const char* kSketchFormatName = "mscout-sketch";
inline constexpr std::uint32_t kSketchFormatVersion = 1;

// {"format": "mscout-sketch", "version": 1, ...}; partition counts are listed
// in the same order as the feature array.
nlohmann::json sketch_to_json(const DatasetSketch& sketch);
DatasetSketch sketch_from_json(const nlohmann::json& doc);

void save_sketch_file(const DatasetSketch& sketch, const std::string& path);
DatasetSketch load_sketch_file(const std::string& path);

nlohmann::json record_to_json(const ModelRecord& record);
ModelRecord record_from_json(const nlohmann::json& doc);

nlohmann::json minhash_params_to_json(const MinHashParams& params);
MinHashParams minhash_params_from_json(const nlohmann::json& doc);
nlohmann::json jslsh_params_to_json(const JsLshParams& params);
JsLshParams jslsh_params_from_json(const nlohmann::json& doc);

} // namespace mscout
