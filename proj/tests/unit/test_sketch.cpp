#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "mscout/errors.hpp"
#include "mscout/sketch.hpp"

#include "support/testutil.hpp"

using namespace mscout;

namespace {

TableData numeric_table(const std::string& name, const std::vector<double>& values) {
    TableData table;
    table.schema.push_back({name, FeatureKind::numeric});
    for (double v : values) table.rows.push_back({Cell{v}});
    return table;
}

} // namespace

TEST_SUITE("sketch") {

TEST_CASE("ingest splits four rows into two partitions with split counts") {
    IngestOptions options;
    options.dataset_id = "t";
    options.partition_size_m = 2;
    options.bins_per_numeric_feature = 2;
    const DatasetSketch sketch = ingest_table(numeric_table("x", {1, 2, 3, 4}), options);

    REQUIRE(sketch.partitions.size() == 2);
    CHECK(sketch.total_rows == 4);
    REQUIRE(sketch.descriptors.size() == 1);
    const auto& edges = sketch.descriptors[0].edges;
    REQUIRE(edges.size() == 3);
    CHECK(edges[0] == doctest::Approx(1.0));
    CHECK(edges[1] == doctest::Approx(2.5));
    CHECK(edges[2] == doctest::Approx(4.0));
    CHECK(sketch.partitions[0].features[0].counts == std::vector<std::uint64_t>{2, 0});
    CHECK(sketch.partitions[1].features[0].counts == std::vector<std::uint64_t>{0, 2});
}

TEST_CASE("ingest single categorical row") {
    TableData table;
    table.schema.push_back({"c", FeatureKind::categorical});
    table.rows.push_back({Cell{std::string("x")}});
    IngestOptions options;
    options.dataset_id = "t";
    options.partition_size_m = 1;
    const DatasetSketch sketch = ingest_table(table, options);
    REQUIRE(sketch.partitions.size() == 1);
    CHECK(sketch.partitions[0].features[0].counts == std::vector<std::uint64_t>{1});
    CHECK(sketch.partitions[0].features[0].total == 1);
}

TEST_CASE("residue partition is kept by default") {
    IngestOptions options;
    options.dataset_id = "t";
    options.partition_size_m = 2;
    const DatasetSketch sketch = ingest_table(numeric_table("x", {1, 2, 3, 4, 5}), options);
    REQUIRE(sketch.partitions.size() == 3);
    CHECK(sketch.partitions[0].rows == 2);
    CHECK(sketch.partitions[1].rows == 2);
    CHECK(sketch.partitions[2].rows == 1);
    CHECK(sketch.total_rows == 5);
}

TEST_CASE("drop_residue removes the short tail") {
    IngestOptions options;
    options.dataset_id = "t";
    options.partition_size_m = 2;
    options.drop_residue = true;
    const DatasetSketch sketch = ingest_table(numeric_table("x", {1, 2, 3, 4, 5}), options);
    CHECK(sketch.partitions.size() == 2);
    CHECK(sketch.total_rows == 4);

    // Dropping the residue of a sub-m dataset would leave nothing.
    CHECK_THROWS_AS(ingest_table(numeric_table("x", {1}), options), IngestError);
}

TEST_CASE("partition count is ceil(total/m)") {
    for (std::uint64_t total : {1, 2, 3, 7, 10, 11, 499, 500, 501}) {
        std::vector<double> values;
        for (std::uint64_t i = 0; i < total; ++i) values.push_back(static_cast<double>(i));
        IngestOptions options;
        options.dataset_id = "t";
        options.partition_size_m = 5;
        const DatasetSketch sketch = ingest_table(numeric_table("x", values), options);
        CHECK(sketch.partitions.size() == (total + 4) / 5);
    }
}

TEST_CASE("ingest rejects bad input") {
    IngestOptions options;
    options.dataset_id = "t";
    CHECK_THROWS_AS(ingest_table(TableData{}, options), IngestError);

    TableData arity;
    arity.schema.push_back({"a", FeatureKind::numeric});
    arity.schema.push_back({"b", FeatureKind::numeric});
    arity.rows.push_back({Cell{1.0}});
    CHECK_THROWS_AS(ingest_table(arity, options), IngestError);

    TableData dupe;
    dupe.schema.push_back({"Age", FeatureKind::numeric});
    dupe.schema.push_back({"age ", FeatureKind::numeric});
    dupe.rows.push_back({Cell{1.0}, Cell{2.0}});
    CHECK_THROWS_AS(ingest_table(dupe, options), IngestError);
}

TEST_CASE("missing values are dropped from counts") {
    TableData table;
    table.schema.push_back({"x", FeatureKind::numeric});
    table.rows.push_back({Cell{1.0}});
    table.rows.push_back({Cell{}});
    table.rows.push_back({Cell{3.0}});
    IngestOptions options;
    options.dataset_id = "t";
    options.partition_size_m = 3;
    options.bins_per_numeric_feature = 2;
    const DatasetSketch sketch = ingest_table(table, options);
    CHECK(sketch.partitions[0].rows == 3);
    CHECK(sketch.partitions[0].features[0].total == 2);
}

TEST_CASE("quantize_numeric equal-width edges") {
    const std::vector<double> v{0, 10};
    const auto edges = quantize_numeric(v, 2);
    REQUIRE(edges.size() == 3);
    CHECK(edges[0] == doctest::Approx(0));
    CHECK(edges[1] == doctest::Approx(5));
    CHECK(edges[2] == doctest::Approx(10));

    const FeatureDescriptor d = testutil::numeric_descriptor("x", edges);
    CHECK(d.bin_for_number(0).value() == 0);
    CHECK(d.bin_for_number(4.99).value() == 0);
    CHECK(d.bin_for_number(5.0).value() == 1);
    CHECK(d.bin_for_number(10.0).value() == 1);  // max lands in the last bin
}

TEST_CASE("quantize_numeric degenerate range collapses to one bin") {
    const std::vector<double> v{7, 7, 7};
    const auto edges = quantize_numeric(v, 4);
    const FeatureDescriptor d = testutil::numeric_descriptor("x", edges);
    CHECK(d.bin_count() == 1);
    CHECK(d.bin_for_number(7.0).value() == 0);

    IngestOptions options;
    options.dataset_id = "t";
    options.bins_per_numeric_feature = 4;
    const DatasetSketch sketch = ingest_table(numeric_table("x", v), options);
    CHECK(sketch.partitions[0].features[0].counts == std::vector<std::uint64_t>{3});
}

TEST_CASE("quantize_numeric spreads distinct values over matching bins") {
    IngestOptions options;
    options.dataset_id = "t";
    options.bins_per_numeric_feature = 4;
    const DatasetSketch sketch = ingest_table(numeric_table("x", {0, 1, 2, 3}), options);
    CHECK(sketch.partitions[0].features[0].counts ==
          std::vector<std::uint64_t>{1, 1, 1, 1});
}

TEST_CASE("quantize_numeric needs a finite value") {
    CHECK_THROWS_AS(quantize_numeric(std::vector<double>{}, 4), IngestError);
}

TEST_CASE("flatten hand examples") {
    const DatasetSketch one =
        testutil::single_feature_sketch("d", "x", {{2, 2}}, 4);
    const auto ids_one = one.feature_ids();
    const ProbabilityVector p = flatten(one, one.partitions[0], ids_one);
    CHECK(p.entries() == std::vector<double>{0.5, 0.5});

    const DatasetSketch two = testutil::sketch_from_counts(
        "d", {testutil::numeric_bins("a", 2), testutil::numeric_bins("b", 2)},
        {{{1, 0}, {0, 1}}}, 1);
    const auto ids_two = two.feature_ids();
    const ProbabilityVector q = flatten(two, two.partitions[0], ids_two);
    REQUIRE(q.dimension() == 4);
    // Two features, one count each: each occupied slot carries half the mass.
    std::vector<double> sorted = q.entries();
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<double>{0.0, 0.0, 0.5, 0.5});

    const DatasetSketch sub = testutil::sketch_from_counts(
        "d", {testutil::numeric_bins("a", 2), testutil::numeric_bins("b", 2)},
        {{{3, 1}, {2, 2}}}, 4);
    const std::vector<std::uint64_t> only_a{feature_id_for("a")};
    const ProbabilityVector r = flatten(sub, sub.partitions[0], only_a);
    CHECK(r.entries() == std::vector<double>{0.75, 0.25});
}

TEST_CASE("flatten errors") {
    const DatasetSketch s = testutil::single_feature_sketch("d", "x", {{1, 1}}, 2);
    const std::vector<std::uint64_t> unknown{999};
    const std::vector<std::uint64_t> empty;
    CHECK_THROWS_AS(flatten(s, s.partitions[0], unknown), ProjectionError);
    CHECK_THROWS_AS(flatten(s, s.partitions[0], empty), ProjectionError);

    const DatasetSketch z = testutil::sketch_from_counts(
        "d", {testutil::numeric_bins("a", 2), testutil::numeric_bins("b", 2)},
        {{{0, 0}, {1, 1}}}, 2);
    const std::vector<std::uint64_t> only_a{feature_id_for("a")};
    const std::vector<std::uint64_t> all = z.feature_ids();
    CHECK_THROWS_AS(flatten(z, z.partitions[0], only_a), EmptyDistributionError);
    CHECK_FALSE(try_flatten(z, z.partitions[0], only_a).has_value());
    CHECK(try_flatten(z, z.partitions[0], all).has_value());
}

TEST_CASE("flatten sums to one and ignores subset order and duplicates") {
    std::mt19937_64 rng(0x666c6174);
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint32_t bins = 2 + static_cast<std::uint32_t>(rng() % 6);
        std::vector<FeatureDescriptor> descriptors;
        const int nf = 2 + static_cast<int>(rng() % 3);
        for (int f = 0; f < nf; ++f) {
            descriptors.push_back(
                testutil::numeric_bins("f" + std::to_string(f), bins));
        }
        std::vector<std::vector<std::uint64_t>> counts;
        for (int f = 0; f < nf; ++f) {
            counts.push_back(testutil::multinomial(
                rng, testutil::dirichlet(rng, bins), 20));
        }
        const DatasetSketch sketch =
            testutil::sketch_from_counts("d", descriptors, {counts}, 20);

        std::vector<std::uint64_t> ids = sketch.feature_ids();
        const ProbabilityVector canonical = flatten(sketch, sketch.partitions[0], ids);
        double total = 0.0;
        for (double x : canonical.entries()) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

        std::shuffle(ids.begin(), ids.end(), rng);
        ids.push_back(ids.front());  // duplicate entry is ignored
        CHECK(flatten(sketch, sketch.partitions[0], ids).entries() ==
              canonical.entries());
    }
}

TEST_CASE("partition counts sum to the whole-dataset counts") {
    std::mt19937_64 rng(0x636f6e73);
    std::vector<double> values;
    for (int i = 0; i < 157; ++i) {
        values.push_back(static_cast<double>(rng() % 1000) / 10.0);
    }
    IngestOptions options;
    options.dataset_id = "t";
    options.partition_size_m = 20;
    options.bins_per_numeric_feature = 8;
    const DatasetSketch sketch = ingest_table(numeric_table("x", values), options);

    options.partition_size_m = 157;
    const DatasetSketch whole = ingest_table(numeric_table("x", values), options);

    const std::uint64_t fid = feature_id_for("x");
    CHECK(sketch.aggregate_feature(fid).counts == whole.partitions[0].features[0].counts);
}

TEST_CASE("expand_feature replicates occupied bins") {
    const FeatureDescriptor d = testutil::numeric_bins("x", 3);
    const auto tokens = d.bin_tokens();

    BinnedFeature f;
    f.feature_id = d.feature_id;
    f.counts = {2, 0, 1};
    f.total = 3;
    const TokenMultiset m = expand_feature(f, d);
    REQUIRE(m.items.size() == 2);
    CHECK(m.total_multiplicity() == 3);
    const auto distinct = m.distinct();
    CHECK(std::count(distinct.begin(), distinct.end(), tokens[0]) == 1);
    CHECK(std::count(distinct.begin(), distinct.end(), tokens[2]) == 1);
    for (const auto& [token, count] : m.items) {
        if (token == tokens[0]) CHECK(count == 2);
        if (token == tokens[2]) CHECK(count == 1);
    }

    BinnedFeature zero;
    zero.feature_id = d.feature_id;
    zero.counts = {0, 0, 0};
    zero.total = 0;
    CHECK(expand_feature(zero, d).empty());

    const FeatureDescriptor single = testutil::numeric_bins("y", 1);
    BinnedFeature one;
    one.feature_id = single.feature_id;
    one.counts = {1};
    one.total = 1;
    const TokenMultiset s = expand_feature(one, single);
    REQUIRE(s.items.size() == 1);
    CHECK(s.items[0].second == 1);
}

TEST_CASE("bin tokens align across datasets") {
    // Same name, same bin count: identical numeric tokens even over
    // different observed ranges.
    const auto a = testutil::numeric_bins("x", 4, 0.0, 1.0);
    const auto b = testutil::numeric_bins("x", 4, -10.0, 10.0);
    CHECK(a.bin_tokens() == b.bin_tokens());

    // Different bin count: disjoint token spaces by construction.
    const auto c = testutil::numeric_bins("x", 8);
    const auto ta = a.bin_tokens();
    const auto tc = c.bin_tokens();
    for (auto t : ta) {
        CHECK(std::find(tc.begin(), tc.end(), t) == tc.end());
    }

    // Categorical tokens key on the category string, so shared categories
    // align across different vocabularies.
    const auto u = testutil::categorical_descriptor("color", {"red", "green"});
    const auto v = testutil::categorical_descriptor("color", {"green", "blue"});
    const auto tu = u.bin_tokens();
    const auto tv = v.bin_tokens();
    CHECK(tu[u.categories.at("green")] == tv[v.categories.at("green")]);
    CHECK(tu[u.categories.at("red")] != tv[v.categories.at("blue")]);
}

TEST_CASE("subspace_labels mirrors flatten order") {
    const DatasetSketch sketch = testutil::sketch_from_counts(
        "d", {testutil::numeric_bins("a", 2), testutil::numeric_bins("b", 3)},
        {{{1, 1}, {1, 1, 1}}}, 5);
    const auto ids = sketch.feature_ids();
    const auto labels = subspace_labels(sketch, ids);
    REQUIRE(labels.size() == 5);

    std::vector<std::uint64_t> expected;
    for (std::uint64_t fid : ids) {
        const auto tokens = sketch.descriptor(fid)->bin_tokens();
        expected.insert(expected.end(), tokens.begin(), tokens.end());
    }
    CHECK(labels == expected);
}

TEST_CASE("center_vector weights partitions by rows") {
    const DatasetSketch sketch =
        testutil::single_feature_sketch("d", "x", {{4, 0}, {0, 4}}, 4);
    const auto ids = sketch.feature_ids();
    const ProbabilityVector center = center_vector(sketch, ids);
    CHECK(center.entries()[0] == doctest::Approx(0.5));
    CHECK(center.entries()[1] == doctest::Approx(0.5));

    const DatasetSketch skew =
        testutil::single_feature_sketch("d", "x", {{6, 0}, {0, 2}}, 6);
    const auto skew_ids = skew.feature_ids();
    const ProbabilityVector sc = center_vector(skew, skew_ids);
    CHECK(sc.entries()[0] == doctest::Approx(0.75));
    CHECK(sc.entries()[1] == doctest::Approx(0.25));

    // Identical partitions: the center equals each partition's flatten.
    const DatasetSketch same =
        testutil::single_feature_sketch("d", "x", {{3, 1}, {3, 1}}, 4);
    const auto same_ids = same.feature_ids();
    const ProbabilityVector fc = center_vector(same, same_ids);
    CHECK(fc.entries()[0] == doctest::Approx(0.75));
}

TEST_CASE("flatten_whole aggregates partitions before normalizing") {
    const DatasetSketch sketch =
        testutil::single_feature_sketch("d", "x", {{4, 0}, {0, 4}}, 4);
    const auto ids = sketch.feature_ids();
    const ProbabilityVector whole = flatten_whole(sketch, ids);
    CHECK(whole.entries() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("probability vector constructors enforce their contracts") {
    CHECK_THROWS_AS(ProbabilityVector::from_weights({}), EmptyDistributionError);
    CHECK_THROWS_AS(ProbabilityVector::from_weights({0.0, 0.0}), EmptyDistributionError);
    CHECK_THROWS_AS(ProbabilityVector::from_weights({1.0, -0.5}), NormalizationError);
    CHECK_THROWS_AS(ProbabilityVector::from_normalized({0.5, 0.4}), NormalizationError);
    const ProbabilityVector p = ProbabilityVector::from_weights({1.0, 3.0});
    CHECK(p.entries() == std::vector<double>{0.25, 0.75});
}

} // TEST_SUITE
