#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mscout/lsh.hpp"
#include "mscout/sketch_json.hpp"
#include "mscout/types.hpp"

namespace mscout {

// Pinned at registry creation; every registered sketch must agree on
// partition size so partition-level comparisons stay like-for-like.
struct RegistryParams {
    MinHashParams minhash;
    JsLshParams jslsh;  // default search-time hashing, never persisted per model
    std::uint64_t partition_size_m = 500;
    std::uint32_t bins_per_numeric_feature = 32;

    void validate() const;
};

struct FeatureSignature {
    std::uint64_t feature_id = 0;
    std::vector<MinHashBand> bands;
};

struct RegisteredModel {
    ModelRecord record;
    DatasetSketch sketch;
    std::vector<FeatureSignature> signatures;  // one per feature, ascending feature_id
};

// Points into State::models / RegisteredModel::signatures.
struct Posting {
    std::uint32_t model = 0;
    std::uint32_t feature = 0;
};

// Copy-on-write registry: every mutation installs a fresh immutable State,
// so readers work from a consistent snapshot without holding locks.
class Registry {
public:
    struct State {
        std::vector<std::shared_ptr<const RegisteredModel>> models;  // sorted by model_id
        std::unordered_map<std::string, std::uint32_t> by_id;
        // bands[b][band-digest] -> postings whose feature signature hashed there
        std::vector<std::unordered_map<std::uint64_t, std::vector<Posting>>> bands;
    };

    explicit Registry(RegistryParams params = {});
    Registry(Registry&& other) noexcept
        : params_(std::move(other.params_)), state_(std::move(other.state_)) {}
    Registry(const Registry&) = delete;
    Registry& operator=(const Registry&) = delete;
    Registry& operator=(Registry&&) = delete;

    const RegistryParams& params() const { return params_; }

    // Computes per-feature min-hash signatures and indexes them.
    // ConflictError on a duplicate model_id, ParamsError when the sketch was
    // built with a different partition size or bin count.
    void register_model(ModelRecord record, DatasetSketch sketch);
    void remove_model(const std::string& model_id);  // NotFoundError when absent

    std::shared_ptr<const State> snapshot() const;
    std::shared_ptr<const RegisteredModel> find(const std::string& model_id) const;
    std::shared_ptr<const RegisteredModel> get(const std::string& model_id) const;
    std::vector<std::string> model_ids() const;
    std::size_t size() const;

    // Single-file binary container with per-section checksums; the file is
    // written to a temp path then renamed.
    void save(const std::string& path) const;
    static Registry load(const std::string& path);

private:
    void install(std::shared_ptr<const State> next);
    static std::vector<std::unordered_map<std::uint64_t, std::vector<Posting>>>
    build_bands(const std::vector<std::shared_ptr<const RegisteredModel>>& models,
                const MinHashParams& params);

    RegistryParams params_;
    mutable std::mutex mu_;
    std::shared_ptr<const State> state_;
};

} // namespace mscout
