#include "mscout/service.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>

namespace mscout {

namespace {

using nlohmann::json;

json error_body(const std::string& message) { return json{{"error", message}}; }

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

// 422 for anything wrong with the request payload, 409 for conflicts,
// 404 for lookups, 500 for internal failures.
int status_for(const std::exception& e) {
    if (dynamic_cast<const ConflictError*>(&e) != nullptr) return 409;
    if (dynamic_cast<const NotFoundError*>(&e) != nullptr) return 404;
    if (dynamic_cast<const CorruptionError*>(&e) != nullptr) return 500;
    if (dynamic_cast<const Error*>(&e) != nullptr) return 422;
    return 500;
}

} // namespace

SearchConfig search_config_from_json(const json& doc, const SearchConfig& defaults) {
    SearchConfig config = defaults;
    try {
        if (!doc.is_object()) {
            if (doc.is_null()) return config;
            throw FormatError("search config must be an object");
        }
        if (doc.contains("metric")) {
            config.metric = search_metric_from_string(doc["metric"].get<std::string>());
        }
        if (doc.contains("t1")) config.t1 = doc["t1"].get<double>();
        if (doc.contains("t2")) config.t2 = doc["t2"].get<double>();
        if (doc.contains("t_adaptivity")) config.t_adaptivity = doc["t_adaptivity"].get<double>();
        if (doc.contains("t_js")) config.t_js = doc["t_js"].get<double>();
        if (doc.contains("mode")) {
            const std::string mode = doc["mode"].get<std::string>();
            if (mode == "distinct_target") {
                config.adaptivity_mode = AdaptivityMode::distinct_target;
            } else if (mode == "pair_count") {
                config.adaptivity_mode = AdaptivityMode::pair_count;
            } else {
                throw ParamsError("unknown adaptivity mode: " + mode);
            }
        }
        if (doc.contains("exact_rescoring") && !doc["exact_rescoring"].is_null()) {
            config.exact_rescoring = doc["exact_rescoring"].get<bool>();
        }
        if (doc.contains("jslsh") && !doc["jslsh"].is_null()) {
            config.jslsh = jslsh_params_from_json(doc["jslsh"]);
        }
        if (doc.contains("top")) config.top = doc["top"].get<std::size_t>();
    } catch (const json::exception& e) {
        throw FormatError("malformed search config: " + std::string(e.what()));
    }
    config.validate();
    return config;
}

json search_config_to_json(const SearchConfig& config) {
    json doc{{"metric", to_string(config.metric)},
             {"t1", config.t1},
             {"t2", config.t2},
             {"t_adaptivity", config.t_adaptivity},
             {"t_js", config.t_js},
             {"mode", config.adaptivity_mode == AdaptivityMode::distinct_target
                          ? "distinct_target"
                          : "pair_count"},
             {"top", config.top}};
    if (config.exact_rescoring.has_value()) doc["exact_rescoring"] = *config.exact_rescoring;
    if (config.jslsh.has_value()) doc["jslsh"] = jslsh_params_to_json(*config.jslsh);
    return doc;
}

json hit_to_json(const SearchHit& hit) {
    json matches = json::array();
    for (const auto& m : hit.matched_features) {
        matches.push_back({{"query_feature_id", m.query_feature_id},
                           {"model_feature_id", m.model_feature_id},
                           {"estimated_jaccard", m.estimated_jaccard}});
    }
    return json{{"model_id", hit.model_id},
                {"score", hit.score},
                {"value", hit.value},
                {"exact", hit.exact},
                {"overlap_ratio", hit.overlap_ratio},
                {"num_matches", hit.num_matches},
                {"source_partitions", hit.source_partitions},
                {"target_partitions", hit.target_partitions},
                {"matched_features", std::move(matches)}};
}

struct Service::Impl {
    Registry& registry;
    ServiceOptions options;
    SearchEngine engine;
    httplib::Server server;
    std::thread server_thread;
    int bound_port = -1;

    struct Job {
        std::string state = "pending";  // pending | done | failed
        std::string error;
        std::string model_id;
    };
    std::mutex jobs_mu;
    std::uint64_t next_job = 1;
    std::unordered_map<std::uint64_t, Job> jobs;
    std::vector<std::thread> workers;

    Impl(Registry& r, ServiceOptions o) : registry(r), options(std::move(o)), engine(r) {
        install_routes();
    }

    void install_routes() {
        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            reply_json(res, 200, json{{"status", "ok"}, {"models", registry.size()}});
        });

        server.Get("/models", [this](const httplib::Request&, httplib::Response& res) {
            json models = json::array();
            for (const auto& id : registry.model_ids()) {
                models.push_back(record_to_json(registry.get(id)->record));
            }
            reply_json(res, 200, json{{"models", std::move(models)}});
        });

        server.Get("/models/:id", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                auto model = registry.get(req.path_params.at("id"));
                reply_json(res, 200,
                           json{{"record", record_to_json(model->record)},
                                {"partitions", model->sketch.partitions.size()},
                                {"features", model->sketch.descriptors.size()},
                                {"total_rows", model->sketch.total_rows}});
            } catch (const std::exception& e) {
                reply_json(res, status_for(e), error_body(e.what()));
            }
        });

        server.Post("/models", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const json doc = json::parse(req.body);
                ModelRecord record = record_from_json(doc.at("record"));
                DatasetSketch sketch = sketch_from_json(doc.at("sketch"));
                if (options.async_threshold_partitions > 0 &&
                    sketch.partitions.size() > options.async_threshold_partitions) {
                    const std::uint64_t id = enqueue_registration(std::move(record),
                                                                  std::move(sketch));
                    reply_json(res, 202,
                               json{{"job", "/jobs/" + std::to_string(id)}, {"id", id}});
                    return;
                }
                const std::string model_id = record.model_id;
                registry.register_model(std::move(record), std::move(sketch));
                reply_json(res, 201, json{{"model_id", model_id}});
            } catch (const json::exception& e) {
                reply_json(res, 422, error_body("malformed request: " + std::string(e.what())));
            } catch (const std::exception& e) {
                reply_json(res, status_for(e), error_body(e.what()));
            }
        });

        server.Get("/jobs/:id", [this](const httplib::Request& req, httplib::Response& res) {
            std::uint64_t id = 0;
            try {
                id = std::stoull(req.path_params.at("id"));
            } catch (const std::exception&) {
                reply_json(res, 404, error_body("no such job"));
                return;
            }
            std::lock_guard<std::mutex> lock(jobs_mu);
            auto it = jobs.find(id);
            if (it == jobs.end()) {
                reply_json(res, 404, error_body("no such job"));
                return;
            }
            json body{{"state", it->second.state}, {"model_id", it->second.model_id}};
            if (!it->second.error.empty()) body["error"] = it->second.error;
            reply_json(res, 200, body);
        });

        server.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const json doc = json::parse(req.body);
                const DatasetSketch query = sketch_from_json(doc.at("sketch"));
                SearchConfig defaults;
                const SearchConfig config = search_config_from_json(
                    doc.contains("config") ? doc["config"] : json(nullptr), defaults);
                json hits = json::array();
                for (const auto& hit : engine.search(query, config)) {
                    hits.push_back(hit_to_json(hit));
                }
                reply_json(res, 200, json{{"hits", std::move(hits)}});
            } catch (const json::exception& e) {
                reply_json(res, 422, error_body("malformed request: " + std::string(e.what())));
            } catch (const std::exception& e) {
                reply_json(res, status_for(e), error_body(e.what()));
            }
        });
    }

    std::uint64_t enqueue_registration(ModelRecord record, DatasetSketch sketch) {
        std::lock_guard<std::mutex> lock(jobs_mu);
        const std::uint64_t id = next_job++;
        jobs[id] = Job{"pending", "", record.model_id};
        workers.emplace_back([this, id, record = std::move(record),
                              sketch = std::move(sketch)]() mutable {
            std::string error;
            try {
                registry.register_model(std::move(record), std::move(sketch));
            } catch (const std::exception& e) {
                error = e.what();
            }
            std::lock_guard<std::mutex> lock(jobs_mu);
            auto it = jobs.find(id);
            if (it != jobs.end()) {
                it->second.state = error.empty() ? "done" : "failed";
                it->second.error = error;
            }
        });
        return id;
    }

    void join_workers() {
        std::vector<std::thread> pending;
        {
            std::lock_guard<std::mutex> lock(jobs_mu);
            pending.swap(workers);
        }
        for (auto& worker : pending) {
            if (worker.joinable()) worker.join();
        }
    }
};

Service::Service(Registry& registry, ServiceOptions options)
    : impl_(std::make_unique<Impl>(registry, std::move(options))) {}

Service::~Service() { stop(); }

int Service::start() {
    if (impl_->options.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->options.host);
        if (impl_->bound_port < 0) throw DataError("cannot bind to any port");
    } else {
        if (!impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
            throw DataError("cannot bind to port " + std::to_string(impl_->options.port));
        }
        impl_->bound_port = impl_->options.port;
    }
    impl_->server_thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->bound_port;
}

void Service::stop() {
    if (impl_ == nullptr) return;
    if (impl_->server_thread.joinable()) {
        impl_->server.stop();
        impl_->server_thread.join();
    }
    impl_->join_workers();
}

int Service::port() const { return impl_->bound_port; }

} // namespace mscout
