#include <atomic>
#include <chrono>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "mscout/errors.hpp"
#include "mscout/service.hpp"
#include "mscout/sketch_json.hpp"
#include "support/testutil.hpp"

using namespace mscout;
using nlohmann::json;

namespace {

RegistryParams params_with(std::uint64_t m, std::uint32_t bins) {
    RegistryParams params;
    params.partition_size_m = m;
    params.bins_per_numeric_feature = bins;
    return params;
}

ModelRecord record_for(const std::string& model_id) {
    ModelRecord record;
    record.model_id = model_id;
    return record;
}

DatasetSketch prob_sketch(const std::string& dataset_id, const std::string& feature,
                          const std::vector<std::vector<double>>& partition_probs,
                          std::uint64_t m) {
    std::vector<std::vector<std::vector<std::uint64_t>>> counts;
    for (const auto& probs : partition_probs) {
        counts.push_back({testutil::counts_from_probs(probs, m)});
    }
    const std::uint32_t bins = static_cast<std::uint32_t>(partition_probs.front().size());
    const auto descriptors =
        std::vector<FeatureDescriptor>{testutil::numeric_bins(feature, bins)};
    return testutil::sketch_from_counts(dataset_id, descriptors, counts, m);
}

json registration_body(const ModelRecord& record, const DatasetSketch& sketch) {
    return json{{"record", record_to_json(record)}, {"sketch", sketch_to_json(sketch)}};
}

// Serves `registry` on a free port for the lifetime of the fixture.
struct LiveService {
    Service service;
    int port;

    LiveService(Registry& registry, std::size_t async_threshold = 0)
        : service(registry,
                  ServiceOptions{"127.0.0.1", 0, async_threshold}),
          port(service.start()) {}

    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

json wait_for_job(httplib::Client& client, const std::string& job_url) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        auto res = client.Get(job_url);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        json body = json::parse(res->body);
        if (body.at("state") != "pending") return body;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    FAIL("job never left the pending state");
    return {};
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("health endpoint reports the live model count") {
    std::mt19937_64 rng(0x7365727600000001ULL);
    Registry registry(params_with(40, 8));
    registry.register_model(
        record_for("m-0"),
        prob_sketch("m-0", "f", {testutil::dirichlet(rng, 8)}, 40));

    LiveService live(registry);
    auto client = live.client();
    auto res = client.Get("/healthz");
    REQUIRE(res);
    CHECK(res->status == 200);
    json body = json::parse(res->body);
    CHECK(body.at("status") == "ok");
    CHECK(body.at("models") == 1);

    registry.register_model(
        record_for("m-1"),
        prob_sketch("m-1", "f", {testutil::dirichlet(rng, 8)}, 40));
    res = client.Get("/healthz");
    REQUIRE(res);
    CHECK(json::parse(res->body).at("models") == 2);
}

TEST_CASE("model registration round-trips through the http api") {
    std::mt19937_64 rng(0x7365727600000002ULL);
    Registry registry(params_with(40, 8));
    LiveService live(registry);
    auto client = live.client();

    ModelRecord record = record_for("m-web");
    record.display_name = "web model";
    record.source_accuracy = 0.8125;
    const DatasetSketch sketch = prob_sketch(
        "ds-web", "f", {testutil::dirichlet(rng, 8), testutil::dirichlet(rng, 8)}, 40);

    auto res = client.Post("/models", registration_body(record, sketch).dump(),
                           "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(json::parse(res->body).at("model_id") == "m-web");
    CHECK(registry.size() == 1);

    res = client.Get("/models/m-web");
    REQUIRE(res);
    CHECK(res->status == 200);
    json body = json::parse(res->body);
    CHECK(body.at("record").at("model_id") == "m-web");
    CHECK(body.at("record").at("source_accuracy") == doctest::Approx(0.8125));
    CHECK(body.at("partitions") == 2);
    CHECK(body.at("features") == 1);
    CHECK(body.at("total_rows") == 80);

    res = client.Get("/models");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json listed = json::parse(res->body).at("models");
    REQUIRE(listed.size() == 1);
    CHECK(listed[0].at("model_id") == "m-web");
}

TEST_CASE("registration conflicts and malformed payloads map to statuses") {
    std::mt19937_64 rng(0x7365727600000003ULL);
    Registry registry(params_with(40, 8));
    LiveService live(registry);
    auto client = live.client();

    const ModelRecord record = record_for("m-dup");
    const DatasetSketch sketch =
        prob_sketch("ds-dup", "f", {testutil::dirichlet(rng, 8)}, 40);
    const std::string body = registration_body(record, sketch).dump();

    auto res = client.Post("/models", body, "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    res = client.Post("/models", body, "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);
    CHECK(json::parse(res->body).contains("error"));

    res = client.Post("/models", "this is not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    res = client.Post("/models", json{{"record", record_to_json(record)}}.dump(),
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);

    res = client.Get("/models/m-ghost");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body).contains("error"));

    res = client.Get("/jobs/999");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = client.Get("/jobs/not-a-number");
    REQUIRE(res);
    CHECK(res->status == 404);
}

TEST_CASE("large registrations run behind a poll url") {
    std::mt19937_64 rng(0x7365727600000004ULL);
    Registry registry(params_with(40, 8));
    LiveService live(registry, /*async_threshold=*/1);
    auto client = live.client();

    // At the threshold: still synchronous.
    auto res = client.Post(
        "/models",
        registration_body(record_for("m-small"),
                          prob_sketch("ds-s", "f", {testutil::dirichlet(rng, 8)}, 40))
            .dump(),
        "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);

    // Above the threshold: accepted and completed by a worker.
    const DatasetSketch big = prob_sketch(
        "ds-b", "f", {testutil::dirichlet(rng, 8), testutil::dirichlet(rng, 8)}, 40);
    res = client.Post("/models", registration_body(record_for("m-big"), big).dump(),
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 202);
    json accepted = json::parse(res->body);
    const std::string job_url = accepted.at("job");
    CHECK(job_url == "/jobs/" + std::to_string(accepted.at("id").get<std::uint64_t>()));

    json done = wait_for_job(client, job_url);
    CHECK(done.at("state") == "done");
    CHECK(done.at("model_id") == "m-big");
    CHECK(registry.find("m-big") != nullptr);

    // A duplicate through the async path fails in the job, not the response.
    res = client.Post("/models", registration_body(record_for("m-big"), big).dump(),
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 202);
    json failed = wait_for_job(client, json::parse(res->body).at("job"));
    CHECK(failed.at("state") == "failed");
    CHECK(failed.contains("error"));
    CHECK(registry.size() == 2);
}

TEST_CASE("search over http matches the direct engine byte for byte") {
    std::mt19937_64 rng(0x7365727600000005ULL);
    const std::uint64_t m = 200;
    Registry registry(params_with(m, 16));
    const std::vector<double> P = testutil::dirichlet(rng, 16);
    for (int i = 0; i < 5; ++i) {
        const std::string id = "m-" + std::to_string(i);
        const auto probs = testutil::mix(P, testutil::dirichlet(rng, 16), 0.4);
        registry.register_model(record_for(id), prob_sketch(id, "f", {probs}, m));
    }
    const DatasetSketch query =
        prob_sketch("q", "f", {testutil::mix(P, testutil::dirichlet(rng, 16), 0.4)}, m);

    LiveService live(registry);
    auto client = live.client();

    const json config_doc{{"metric", "js"},     {"t1", -1.0}, {"t2", 0.0},
                          {"exact_rescoring", true}, {"t_js", 0.69},  {"top", 0}};
    auto res = client.Post(
        "/search",
        json{{"sketch", sketch_to_json(query)}, {"config", config_doc}}.dump(),
        "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const json served = json::parse(res->body).at("hits");

    SearchConfig defaults;
    const SearchConfig config = search_config_from_json(config_doc, defaults);
    SearchEngine engine(registry);
    json direct = json::array();
    for (const auto& hit : engine.search(query, config)) {
        direct.push_back(hit_to_json(hit));
    }
    REQUIRE(served.size() == direct.size());
    REQUIRE(served.size() >= 1);
    CHECK(served.dump() == direct.dump());

    // Omitting the config entirely runs the default search.
    res = client.Post("/search", json{{"sketch", sketch_to_json(query)}}.dump(),
                      "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    json default_direct = json::array();
    for (const auto& hit : engine.search(query, SearchConfig{})) {
        default_direct.push_back(hit_to_json(hit));
    }
    CHECK(json::parse(res->body).at("hits").dump() == default_direct.dump());

    // Broken payloads and invalid configs are rejected, not crashed on.
    res = client.Post("/search", "{}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    res = client.Post("/search",
                      json{{"sketch", sketch_to_json(query)},
                           {"config", json{{"t1", 5.0}}}}
                          .dump(),
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
}

TEST_CASE("concurrent searches observe only complete registrations") {
    std::mt19937_64 rng(0x7365727600000006ULL);
    const std::uint64_t m = 100;
    const int total_models = 8;
    Registry registry(params_with(m, 8));
    const std::vector<double> P = testutil::dirichlet(rng, 8);

    std::vector<json> bodies;
    for (int i = 0; i < total_models; ++i) {
        const std::string id = "m-" + std::to_string(i);
        const auto probs = testutil::mix(P, testutil::dirichlet(rng, 8), 0.25);
        bodies.push_back(
            registration_body(record_for(id), prob_sketch(id, "f", {probs}, m)));
    }
    const DatasetSketch query =
        prob_sketch("q", "f", {testutil::mix(P, testutil::dirichlet(rng, 8), 0.25)}, m);
    const json search_body{
        {"sketch", sketch_to_json(query)},
        {"config",
         json{{"metric", "overlap"}, {"t1", -1.0}, {"t2", 0.0}, {"top", 0}}}};

    LiveService live(registry);
    std::atomic<bool> writer_done{false};
    std::atomic<bool> violation{false};

    std::thread writer([&]() {
        auto client = live.client();
        for (const auto& body : bodies) {
            auto res = client.Post("/models", body.dump(), "application/json");
            if (!res || res->status != 201) violation = true;
        }
        writer_done = true;
    });

    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&]() {
            auto client = live.client();
            std::size_t last_seen = 0;
            while (!writer_done.load()) {
                auto res = client.Post("/search", search_body.dump(),
                                       "application/json");
                if (!res || res->status != 200) {
                    violation = true;
                    break;
                }
                const json hits = json::parse(res->body).at("hits");
                // Registrations only add models, so the visible hit set can
                // only grow; a shrink would mean a torn snapshot.
                if (hits.size() < last_seen || hits.size() > bodies.size()) {
                    violation = true;
                    break;
                }
                for (const auto& hit : hits) {
                    if (!hit.contains("model_id") || !hit.contains("score")) {
                        violation = true;
                    }
                }
                last_seen = hits.size();
            }
        });
    }
    writer.join();
    for (auto& reader : readers) reader.join();
    CHECK_FALSE(violation.load());
    CHECK(registry.size() == static_cast<std::size_t>(total_models));

    // After the dust settles every model is visible.
    auto client = live.client();
    auto res = client.Post("/search", search_body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    CHECK(json::parse(res->body).at("hits").size() ==
          static_cast<std::size_t>(total_models));
}

TEST_CASE("search config json round-trips and rejects junk") {
    SearchConfig config;
    config.metric = SearchMetric::l2;
    config.t1 = 0.25;
    config.t2 = 0.125;
    config.t_adaptivity = 0.375;
    config.t_js = 0.2;
    config.adaptivity_mode = AdaptivityMode::pair_count;
    config.exact_rescoring = false;
    JsLshParams jslsh;
    jslsh.k = 4;
    jslsh.num_bands = 12;
    jslsh.bucket_width = 2.0;
    config.jslsh = jslsh;
    config.top = 3;

    const SearchConfig defaults;
    const SearchConfig parsed = search_config_from_json(search_config_to_json(config),
                                                        defaults);
    CHECK(parsed.metric == config.metric);
    CHECK(parsed.t1 == config.t1);
    CHECK(parsed.t2 == config.t2);
    CHECK(parsed.t_adaptivity == config.t_adaptivity);
    CHECK(parsed.t_js == config.t_js);
    CHECK(parsed.adaptivity_mode == config.adaptivity_mode);
    CHECK(parsed.exact_rescoring == config.exact_rescoring);
    REQUIRE(parsed.jslsh.has_value());
    CHECK(parsed.jslsh->digest() == jslsh.digest());
    CHECK(parsed.top == config.top);

    // Null leaves the defaults untouched.
    const SearchConfig untouched = search_config_from_json(json(nullptr), defaults);
    CHECK(untouched.metric == defaults.metric);
    CHECK(untouched.t1 == defaults.t1);
    CHECK(untouched.top == defaults.top);

    CHECK_THROWS_AS(search_config_from_json(json(3), defaults), FormatError);
    CHECK_THROWS_AS(search_config_from_json(json{{"t1", "wide"}}, defaults), FormatError);
    CHECK_THROWS_AS(search_config_from_json(json{{"metric", "vibes"}}, defaults),
                    ParamsError);
    CHECK_THROWS_AS(search_config_from_json(json{{"mode", "zigzag"}}, defaults),
                    ParamsError);
    CHECK_THROWS_AS(search_config_from_json(json{{"t2", 7.0}}, defaults), ParamsError);
}

} // TEST_SUITE
