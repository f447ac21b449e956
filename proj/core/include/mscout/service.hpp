#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "mscout/registry.hpp"
#include "mscout/search.hpp"

namespace mscout {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds any free port
    // Registrations whose sketch has more partitions than this run on a
    // worker thread behind a 202 + poll URL; 0 keeps everything synchronous.
    std::size_t async_threshold_partitions = 0;
};

// HTTP front end over a registry. Search requests run through the same
// SearchEngine pipeline the CLI uses, so rankings agree byte for byte.
//
//   GET  /healthz        -> 200 {"status":"ok", "models": N}
//   GET  /models         -> 200 {"models": [record...]}
//   GET  /models/<id>    -> 200 {"record":..., "partitions":..., "features":...} | 404
//   POST /models         -> 201 {"model_id":...} | 202 {"job":...} | 409 | 422
//   GET  /jobs/<id>      -> 200 {"state": "pending"|"done"|"failed", ...} | 404
//   POST /search         -> 200 {"hits": [...]} | 422
class Service {
public:
    Service(Registry& registry, ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    void stop();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Overrides `defaults` with any fields present in `doc`.
SearchConfig search_config_from_json(const nlohmann::json& doc, const SearchConfig& defaults);
nlohmann::json search_config_to_json(const SearchConfig& config);
nlohmann::json hit_to_json(const SearchHit& hit);

} // namespace mscout
