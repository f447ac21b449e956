#include "mscout/registry.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace mscout {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'S', 'C', 'O', 'U', 'T', '0', '1'};
constexpr std::uint32_t kContainerVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) throw CorruptionError("truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) throw CorruptionError("truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_blob(std::ostream& out, const std::string& name, const std::vector<std::uint8_t>& payload) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, payload.size());
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    write_u64(out, fnv1a64(payload.data(), payload.size()));
}

struct Blob {
    std::string name;
    std::vector<std::uint8_t> payload;
};

Blob read_blob(std::istream& in) {
    Blob blob;
    const std::uint32_t name_len = read_u32(in);
    if (name_len > 4096) throw CorruptionError("blob name too long");
    blob.name.resize(name_len);
    if (!in.read(blob.name.data(), name_len)) throw CorruptionError("truncated file");
    const std::uint64_t payload_len = read_u64(in);
    blob.payload.resize(payload_len);
    if (payload_len > 0 &&
        !in.read(reinterpret_cast<char*>(blob.payload.data()),
                 static_cast<std::streamsize>(payload_len))) {
        throw CorruptionError("truncated file");
    }
    const std::uint64_t expected = read_u64(in);
    if (fnv1a64(blob.payload.data(), blob.payload.size()) != expected) {
        throw CorruptionError("checksum mismatch in section '" + blob.name + "'");
    }
    return blob;
}

json signatures_to_json(const std::vector<FeatureSignature>& signatures) {
    json out = json::array();
    for (const auto& sig : signatures) {
        json bands = json::array();
        for (const auto& band : sig.bands) bands.push_back(band.values);
        out.push_back({{"feature_id", sig.feature_id}, {"bands", std::move(bands)}});
    }
    return out;
}

std::vector<FeatureSignature> signatures_from_json(const json& doc, const MinHashParams& params) {
    std::vector<FeatureSignature> out;
    for (const auto& entry : doc) {
        FeatureSignature sig;
        sig.feature_id = entry.at("feature_id").get<std::uint64_t>();
        const auto& bands = entry.at("bands");
        if (bands.size() != params.num_bands) {
            throw CorruptionError("signature band count does not match the manifest");
        }
        std::uint32_t index = 0;
        for (const auto& values : bands) {
            MinHashBand band;
            band.band = index++;
            band.values = values.get<std::vector<std::uint64_t>>();
            if (band.values.size() != params.k_per_band) {
                throw CorruptionError("signature width does not match the manifest");
            }
            sig.bands.push_back(std::move(band));
        }
        out.push_back(std::move(sig));
    }
    return out;
}

} // namespace

void RegistryParams::validate() const {
    minhash.validate();
    jslsh.validate();
    if (partition_size_m == 0) throw ParamsError("partition_size_m must be >= 1");
    if (bins_per_numeric_feature == 0) throw ParamsError("bins must be >= 1");
}

Registry::Registry(RegistryParams params) : params_(std::move(params)) {
    params_.validate();
    auto state = std::make_shared<State>();
    state->bands.resize(params_.minhash.num_bands);
    state_ = std::move(state);
}

std::shared_ptr<const Registry::State> Registry::snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return state_;
}

void Registry::install(std::shared_ptr<const State> next) {
    std::lock_guard<std::mutex> lock(mu_);
    state_ = std::move(next);
}

std::vector<std::unordered_map<std::uint64_t, std::vector<Posting>>>
Registry::build_bands(const std::vector<std::shared_ptr<const RegisteredModel>>& models,
                      const MinHashParams& params) {
    std::vector<std::unordered_map<std::uint64_t, std::vector<Posting>>> bands(params.num_bands);
    for (std::uint32_t m = 0; m < models.size(); ++m) {
        const auto& signatures = models[m]->signatures;
        for (std::uint32_t f = 0; f < signatures.size(); ++f) {
            for (const auto& band : signatures[f].bands) {
                bands[band.band][band.digest()].push_back(Posting{m, f});
            }
        }
    }
    return bands;
}

void Registry::register_model(ModelRecord record, DatasetSketch sketch) {
    if (record.model_id.empty()) throw DataError("model_id is required");
    sketch.validate();
    if (sketch.partition_size_m != params_.partition_size_m) {
        throw ParamsError("sketch partition size " + std::to_string(sketch.partition_size_m) +
                          " does not match the registry's " +
                          std::to_string(params_.partition_size_m));
    }
    for (const auto& d : sketch.descriptors) {
        if (d.kind != FeatureKind::numeric) continue;
        const std::size_t bins = d.bin_count();
        if (bins != params_.bins_per_numeric_feature && bins != 1) {
            throw ParamsError("feature '" + d.name + "' has " + std::to_string(bins) +
                              " bins, registry expects " +
                              std::to_string(params_.bins_per_numeric_feature));
        }
    }
    if (record.dataset_id.empty()) record.dataset_id = sketch.dataset_id;

    auto model = std::make_shared<RegisteredModel>();
    model->record = std::move(record);
    model->sketch = std::move(sketch);
    for (const auto& d : model->sketch.descriptors) {
        const BinnedFeature agg = model->sketch.aggregate_feature(d.feature_id);
        const TokenMultiset tokens = expand_feature(agg, d);
        if (tokens.empty()) continue;
        model->signatures.push_back(
            FeatureSignature{d.feature_id, minhash_signature(tokens, params_.minhash)});
    }

    std::lock_guard<std::mutex> lock(mu_);
    if (state_->by_id.count(model->record.model_id) != 0) {
        throw ConflictError("model already registered: " + model->record.model_id);
    }
    auto next = std::make_shared<State>(*state_);
    const auto index = static_cast<std::uint32_t>(next->models.size());
    next->by_id.emplace(model->record.model_id, index);
    next->models.push_back(model);
    for (std::uint32_t f = 0; f < model->signatures.size(); ++f) {
        for (const auto& band : model->signatures[f].bands) {
            next->bands[band.band][band.digest()].push_back(Posting{index, f});
        }
    }
    state_ = std::move(next);
}

void Registry::remove_model(const std::string& model_id) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = state_->by_id.find(model_id);
    if (it == state_->by_id.end()) throw NotFoundError("no such model: " + model_id);
    auto next = std::make_shared<State>();
    next->models.reserve(state_->models.size() - 1);
    for (const auto& model : state_->models) {
        if (model->record.model_id == model_id) continue;
        next->by_id.emplace(model->record.model_id,
                            static_cast<std::uint32_t>(next->models.size()));
        next->models.push_back(model);
    }
    next->bands = build_bands(next->models, params_.minhash);
    state_ = std::move(next);
}

std::shared_ptr<const RegisteredModel> Registry::find(const std::string& model_id) const {
    auto state = snapshot();
    auto it = state->by_id.find(model_id);
    if (it == state->by_id.end()) return nullptr;
    return state->models[it->second];
}

std::shared_ptr<const RegisteredModel> Registry::get(const std::string& model_id) const {
    auto model = find(model_id);
    if (model == nullptr) throw NotFoundError("no such model: " + model_id);
    return model;
}

std::vector<std::string> Registry::model_ids() const {
    auto state = snapshot();
    std::vector<std::string> ids;
    ids.reserve(state->models.size());
    for (const auto& model : state->models) ids.push_back(model->record.model_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::size_t Registry::size() const { return snapshot()->models.size(); }

void Registry::save(const std::string& path) const {
    auto state = snapshot();
    std::vector<std::shared_ptr<const RegisteredModel>> models = state->models;
    std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) {
        return a->record.model_id < b->record.model_id;
    });

    json manifest{{"container_version", kContainerVersion},
                  {"minhash", minhash_params_to_json(params_.minhash)},
                  {"jslsh", jslsh_params_to_json(params_.jslsh)},
                  {"partition_size_m", params_.partition_size_m},
                  {"bins_per_numeric_feature", params_.bins_per_numeric_feature}};
    json ids = json::array();
    for (const auto& model : models) ids.push_back(model->record.model_id);
    manifest["models"] = std::move(ids);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp);
        out.write(kMagic, sizeof(kMagic));
        write_u32(out, kContainerVersion);
        write_u32(out, static_cast<std::uint32_t>(models.size() + 1));
        write_blob(out, "manifest", json::to_cbor(manifest));
        for (const auto& model : models) {
            json doc{{"record", record_to_json(model->record)},
                     {"sketch", sketch_to_json(model->sketch)},
                     {"signatures", signatures_to_json(model->signatures)}};
            write_blob(out, "model:" + model->record.model_id, json::to_cbor(doc));
        }
        if (!out) throw DataError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Registry Registry::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a registry file: " + path);
    }
    const std::uint32_t version = read_u32(in);
    if (version != kContainerVersion) {
        throw FormatError("unsupported registry version " + std::to_string(version));
    }
    const std::uint32_t blob_count = read_u32(in);
    if (blob_count == 0) throw CorruptionError("registry has no manifest");

    Blob manifest_blob = read_blob(in);
    if (manifest_blob.name != "manifest") throw CorruptionError("first section is not the manifest");

    RegistryParams params;
    std::vector<std::string> expected_ids;
    try {
        const json manifest = json::from_cbor(manifest_blob.payload);
        params.minhash = minhash_params_from_json(manifest.at("minhash"));
        params.jslsh = jslsh_params_from_json(manifest.at("jslsh"));
        params.partition_size_m = manifest.at("partition_size_m").get<std::uint64_t>();
        params.bins_per_numeric_feature =
            manifest.at("bins_per_numeric_feature").get<std::uint32_t>();
        expected_ids = manifest.at("models").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw CorruptionError("malformed manifest: " + std::string(e.what()));
    }
    if (expected_ids.size() + 1 != blob_count) {
        throw CorruptionError("manifest model count does not match section count");
    }

    Registry registry(params);
    auto state = std::make_shared<State>();
    for (const auto& expected_id : expected_ids) {
        Blob blob = read_blob(in);
        if (blob.name != "model:" + expected_id) {
            throw CorruptionError("unexpected section '" + blob.name + "'");
        }
        auto model = std::make_shared<RegisteredModel>();
        try {
            const json doc = json::from_cbor(blob.payload);
            model->record = record_from_json(doc.at("record"));
            model->sketch = sketch_from_json(doc.at("sketch"));
            model->signatures = signatures_from_json(doc.at("signatures"), params.minhash);
        } catch (const json::exception& e) {
            throw CorruptionError("malformed model section: " + std::string(e.what()));
        } catch (const FormatError& e) {
            throw CorruptionError("malformed model section: " + std::string(e.what()));
        }
        if (model->record.model_id != expected_id) {
            throw CorruptionError("model id does not match its section name");
        }
        state->by_id.emplace(expected_id, static_cast<std::uint32_t>(state->models.size()));
        state->models.push_back(std::move(model));
    }
    state->bands = build_bands(state->models, params.minhash);
    registry.state_ = std::move(state);
    return registry;
}

} // namespace mscout
