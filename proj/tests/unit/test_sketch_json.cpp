#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "mscout/errors.hpp"
#include "mscout/sketch.hpp"
#include "mscout/sketch_json.hpp"
#include "support/testutil.hpp"

using namespace mscout;

namespace {

DatasetSketch random_sketch(std::mt19937_64& rng) {
    const std::size_t partitions = 1 + rng() % 4;
    std::vector<std::vector<std::vector<std::uint64_t>>> counts(partitions);
    for (auto& part : counts) {
        part = {testutil::counts_from_probs(testutil::dirichlet(rng, 4), 40),
                testutil::counts_from_probs(testutil::dirichlet(rng, 3), 40)};
    }
    const auto descriptors = std::vector<FeatureDescriptor>{
        testutil::numeric_bins("num", 4, -2.5, 7.5),
        testutil::categorical_descriptor("cat", {"red", "green", "blue"})};
    return testutil::sketch_from_counts("rt-" + std::to_string(rng() % 1000),
                                        descriptors, counts, 80);
}

} // namespace

TEST_SUITE("sketchjson") {

TEST_CASE("sketch round-trips through json without loss") {
    std::mt19937_64 rng(0x6a736f6e72743031ULL);
    for (int trial = 0; trial < 25; ++trial) {
        const DatasetSketch sketch = random_sketch(rng);
        const nlohmann::json doc = sketch_to_json(sketch);
        CHECK(doc.at("format") == kSketchFormatName);
        CHECK(doc.at("version") == kSketchFormatVersion);
        const DatasetSketch back = sketch_from_json(doc);
        CHECK(back.dataset_id == sketch.dataset_id);
        CHECK(back.partition_size_m == sketch.partition_size_m);
        CHECK(back.total_rows == sketch.total_rows);
        REQUIRE(back.descriptors.size() == sketch.descriptors.size());
        for (std::size_t i = 0; i < sketch.descriptors.size(); ++i) {
            CHECK(back.descriptors[i].feature_id == sketch.descriptors[i].feature_id);
            CHECK(back.descriptors[i].name == sketch.descriptors[i].name);
            CHECK(back.descriptors[i].kind == sketch.descriptors[i].kind);
            CHECK(back.descriptors[i].edges == sketch.descriptors[i].edges);
            CHECK(back.descriptors[i].categories == sketch.descriptors[i].categories);
        }
        REQUIRE(back.partitions.size() == sketch.partitions.size());
        for (std::size_t p = 0; p < sketch.partitions.size(); ++p) {
            CHECK(back.partitions[p].rows == sketch.partitions[p].rows);
            REQUIRE(back.partitions[p].features.size() ==
                    sketch.partitions[p].features.size());
            for (std::size_t f = 0; f < sketch.partitions[p].features.size(); ++f) {
                CHECK(back.partitions[p].features[f].counts ==
                      sketch.partitions[p].features[f].counts);
            }
        }
        // Round-tripping the round-trip is byte-stable.
        CHECK(sketch_to_json(back).dump() == doc.dump());
    }
}

TEST_CASE("sketch files round-trip on disk") {
    std::mt19937_64 rng(0x6a736f6e72743032ULL);
    const DatasetSketch sketch = random_sketch(rng);
    const std::string dir = "sketch_json_tmp";
    std::filesystem::create_directories(dir);
    save_sketch_file(sketch, dir + "/s.json");
    const DatasetSketch back = load_sketch_file(dir + "/s.json");
    CHECK(sketch_to_json(back).dump() == sketch_to_json(sketch).dump());
    CHECK_THROWS_AS(load_sketch_file(dir + "/absent.json"), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("rejects foreign and unsupported documents") {
    std::mt19937_64 rng(0x6a736f6e72743033ULL);
    nlohmann::json doc = sketch_to_json(random_sketch(rng));

    nlohmann::json wrong_format = doc;
    wrong_format["format"] = "something-else";
    CHECK_THROWS_AS(sketch_from_json(wrong_format), FormatError);

    nlohmann::json wrong_version = doc;
    wrong_version["version"] = 999;
    CHECK_THROWS_AS(sketch_from_json(wrong_version), FormatError);

    nlohmann::json missing = doc;
    missing.erase("partitions");
    CHECK_THROWS_AS(sketch_from_json(missing), FormatError);

    CHECK_THROWS_AS(sketch_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("model records round-trip including optional accuracy") {
    ModelRecord record;
    record.model_id = "m-17";
    record.display_name = "tabular baseline";
    record.task_tag = "classify";
    record.source_accuracy = 0.8125;
    record.dataset_id = "ds-17";
    record.created_at = "2026-08-16T00:00:00Z";
    record.notes = "quoted \"notes\" with, commas";
    const ModelRecord back = record_from_json(record_to_json(record));
    CHECK(back.model_id == record.model_id);
    CHECK(back.display_name == record.display_name);
    CHECK(back.task_tag == record.task_tag);
    CHECK(back.source_accuracy.value() == doctest::Approx(0.8125));
    CHECK(back.dataset_id == record.dataset_id);
    CHECK(back.created_at == record.created_at);
    CHECK(back.notes == record.notes);

    ModelRecord bare;
    bare.model_id = "m-0";
    const ModelRecord bare_back = record_from_json(record_to_json(bare));
    CHECK_FALSE(bare_back.source_accuracy.has_value());

    CHECK_THROWS_AS(record_from_json(nlohmann::json::array()), FormatError);
}

TEST_CASE("hash params round-trip exactly") {
    MinHashParams mh;
    mh.k_per_band = 7;
    mh.num_bands = 11;
    mh.master_seed = 0xabcdef12345ULL;
    const MinHashParams mh_back = minhash_params_from_json(minhash_params_to_json(mh));
    CHECK(mh_back.k_per_band == 7);
    CHECK(mh_back.num_bands == 11);
    CHECK(mh_back.master_seed == 0xabcdef12345ULL);
    CHECK(mh_back.digest() == mh.digest());

    JsLshParams js;
    js.k = 3;
    js.num_bands = 9;
    js.bucket_width = 0.75;
    const JsLshParams js_back = jslsh_params_from_json(jslsh_params_to_json(js));
    CHECK(js_back.digest() == js.digest());

    CHECK_THROWS_AS(minhash_params_from_json(nlohmann::json::object()), FormatError);
    CHECK_THROWS_AS(jslsh_params_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("sketch json never embeds raw rows") {
    // Interior values are folded into bin counts; only min/max survive as
    // bin edges. A distinctive interior value must not appear anywhere.
    TableData table;
    table.schema = {{"reading", FeatureKind::numeric}, {"tag", FeatureKind::categorical}};
    for (const double v : {10.0, 11.0, 12.0, 13.37, 20.0}) {
        table.rows.push_back({Cell{v}, Cell{std::string("sensor-77-secret")}});
    }
    IngestOptions options;
    options.dataset_id = "no-rows";
    options.partition_size_m = 5;
    options.bins_per_numeric_feature = 2;
    const DatasetSketch sketch = ingest_table(table, options);
    const std::string text = sketch_to_json(sketch).dump();
    CHECK(text.find("13.37") == std::string::npos);
    CHECK(sketch.total_rows == 5);
}

} // TEST_SUITE
