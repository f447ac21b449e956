#include "mscout/sketch_json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

namespace mscout {

namespace {

using nlohmann::json;

const json& need(const json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw FormatError(std::string("missing field: ") + key);
    }
    return doc[key];
}

} // namespace

json sketch_to_json(const DatasetSketch& sketch) {
    json features = json::array();
    for (const auto& d : sketch.descriptors) {
        json f;
        f["name"] = d.name;
        f["kind"] = to_string(d.kind);
        if (d.kind == FeatureKind::numeric) {
            f["edges"] = d.edges;
        } else {
            f["categories"] = d.categories;
        }
        features.push_back(std::move(f));
    }
    json partitions = json::array();
    for (const auto& p : sketch.partitions) {
        json counts = json::array();
        for (const auto& f : p.features) counts.push_back(f.counts);
        partitions.push_back({{"index", p.partition_index},
                              {"rows", p.rows},
                              {"counts", std::move(counts)}});
    }
    return json{{"format", kSketchFormatName},
                {"version", kSketchFormatVersion},
                {"dataset_id", sketch.dataset_id},
                {"partition_size_m", sketch.partition_size_m},
                {"total_rows", sketch.total_rows},
                {"features", std::move(features)},
                {"partitions", std::move(partitions)}};
}

DatasetSketch sketch_from_json(const json& doc) {
    try {
        if (need(doc, "format").get<std::string>() != kSketchFormatName) {
            throw FormatError("not a sketch document");
        }
        if (need(doc, "version").get<std::uint32_t>() != kSketchFormatVersion) {
            throw FormatError("unsupported sketch version");
        }
        DatasetSketch sketch;
        sketch.dataset_id = need(doc, "dataset_id").get<std::string>();
        sketch.partition_size_m = need(doc, "partition_size_m").get<std::uint64_t>();
        sketch.total_rows = need(doc, "total_rows").get<std::uint64_t>();

        for (const auto& f : need(doc, "features")) {
            FeatureDescriptor d;
            d.name = need(f, "name").get<std::string>();
            d.feature_id = feature_id_for(d.name);
            d.kind = feature_kind_from_string(need(f, "kind").get<std::string>());
            if (d.kind == FeatureKind::numeric) {
                d.edges = need(f, "edges").get<std::vector<double>>();
            } else {
                d.categories =
                    need(f, "categories").get<std::map<std::string, std::uint32_t>>();
            }
            sketch.descriptors.push_back(std::move(d));
        }
        // The document keeps the canonical (sorted by feature_id) order; a
        // hand-edited file may not, so restore it and remember the mapping.
        std::vector<std::size_t> order(sketch.descriptors.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return sketch.descriptors[a].feature_id < sketch.descriptors[b].feature_id;
        });
        std::vector<FeatureDescriptor> sorted;
        sorted.reserve(order.size());
        for (std::size_t i : order) sorted.push_back(std::move(sketch.descriptors[i]));
        sketch.descriptors = std::move(sorted);

        for (const auto& p : need(doc, "partitions")) {
            PartitionSketch partition;
            partition.partition_index = need(p, "index").get<std::uint32_t>();
            partition.rows = need(p, "rows").get<std::uint64_t>();
            const auto& counts = need(p, "counts");
            if (!counts.is_array() || counts.size() != order.size()) {
                throw FormatError("partition counts do not match the feature list");
            }
            partition.features.resize(order.size());
            for (std::size_t slot = 0; slot < order.size(); ++slot) {
                // counts arrive in document feature order; place by sorted position
                BinnedFeature feature;
                feature.counts = counts[order[slot]].get<std::vector<std::uint64_t>>();
                feature.feature_id = sketch.descriptors[slot].feature_id;
                for (std::uint64_t c : feature.counts) feature.total += c;
                partition.features[slot] = std::move(feature);
            }
            sketch.partitions.push_back(std::move(partition));
        }
        sketch.validate();
        return sketch;
    } catch (const json::exception& e) {
        throw FormatError("malformed sketch document: " + std::string(e.what()));
    }
}

void save_sketch_file(const DatasetSketch& sketch, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp);
        out << sketch_to_json(sketch).dump(2) << "\n";
        if (!out) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

DatasetSketch load_sketch_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw FormatError("not valid json: " + path + ": " + e.what());
    }
    return sketch_from_json(doc);
}

json record_to_json(const ModelRecord& record) {
    json doc{{"model_id", record.model_id},
             {"display_name", record.display_name},
             {"task_tag", record.task_tag},
             {"dataset_id", record.dataset_id},
             {"created_at", record.created_at},
             {"notes", record.notes}};
    if (record.source_accuracy.has_value()) {
        doc["source_accuracy"] = *record.source_accuracy;
    } else {
        doc["source_accuracy"] = nullptr;
    }
    return doc;
}

ModelRecord record_from_json(const json& doc) {
    try {
        ModelRecord record;
        record.model_id = need(doc, "model_id").get<std::string>();
        if (doc.contains("display_name")) record.display_name = doc["display_name"].get<std::string>();
        if (doc.contains("task_tag")) record.task_tag = doc["task_tag"].get<std::string>();
        if (doc.contains("dataset_id")) record.dataset_id = doc["dataset_id"].get<std::string>();
        if (doc.contains("created_at")) record.created_at = doc["created_at"].get<std::string>();
        if (doc.contains("notes")) record.notes = doc["notes"].get<std::string>();
        if (doc.contains("source_accuracy") && !doc["source_accuracy"].is_null()) {
            record.source_accuracy = doc["source_accuracy"].get<double>();
        }
        return record;
    } catch (const json::exception& e) {
        throw FormatError("malformed model record: " + std::string(e.what()));
    }
}

json minhash_params_to_json(const MinHashParams& params) {
    return json{{"k_per_band", params.k_per_band},
                {"num_bands", params.num_bands},
                {"master_seed", params.master_seed}};
}

MinHashParams minhash_params_from_json(const json& doc) {
    try {
        MinHashParams params;
        params.k_per_band = need(doc, "k_per_band").get<std::uint32_t>();
        params.num_bands = need(doc, "num_bands").get<std::uint32_t>();
        params.master_seed = need(doc, "master_seed").get<std::uint64_t>();
        params.validate();
        return params;
    } catch (const json::exception& e) {
        throw FormatError("malformed minhash params: " + std::string(e.what()));
    }
}

json jslsh_params_to_json(const JsLshParams& params) {
    return json{{"k", params.k},
                {"num_bands", params.num_bands},
                {"bucket_width", params.bucket_width},
                {"master_seed", params.master_seed}};
}

JsLshParams jslsh_params_from_json(const json& doc) {
    try {
        JsLshParams params;
        params.k = need(doc, "k").get<std::uint32_t>();
        params.num_bands = need(doc, "num_bands").get<std::uint32_t>();
        params.bucket_width = need(doc, "bucket_width").get<double>();
        params.master_seed = need(doc, "master_seed").get<std::uint64_t>();
        params.validate();
        return params;
    } catch (const json::exception& e) {
        throw FormatError("malformed js-lsh params: " + std::string(e.what()));
    }
}

} // namespace mscout
