#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include "doctest.h"
#include "mscout/csv.hpp"
#include "mscout/errors.hpp"
#include "mscout/sketch.hpp"

using namespace mscout;

TEST_SUITE("csv") {

TEST_CASE("parses header and simple records") {
    const CsvTable t = parse_csv_text("a,b\n1,2\n3,4\n");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.records.size() == 2);
    CHECK(t.records[0][0].value() == "1");
    CHECK(t.records[1][1].value() == "4");
}

TEST_CASE("quoting rules") {
    const CsvTable t = parse_csv_text(
        "name,notes\n"
        "\"x,y\",\"say \"\"hi\"\"\"\n"
        "\"multi\nline\",plain\n");
    REQUIRE(t.records.size() == 2);
    CHECK(t.records[0][0].value() == "x,y");
    CHECK(t.records[0][1].value() == "say \"hi\"");
    CHECK(t.records[1][0].value() == "multi\nline");
    CHECK(t.records[1][1].value() == "plain");
}

TEST_CASE("crlf records and missing trailing newline") {
    const CsvTable t = parse_csv_text("a,b\r\n1,2\r\n3,4");
    REQUIRE(t.records.size() == 2);
    CHECK(t.records[1][0].value() == "3");
}

TEST_CASE("empty unquoted field is missing, quoted empty is present") {
    const CsvTable t = parse_csv_text("a,b\n,\"\"\n");
    REQUIRE(t.records.size() == 1);
    CHECK_FALSE(t.records[0][0].has_value());
    REQUIRE(t.records[0][1].has_value());
    CHECK(t.records[0][1].value().empty());
}

TEST_CASE("malformed input reports the line") {
    try {
        parse_csv_text("a,b\n1,2\n\"oops,3\n");
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv_text("a,b\n1,\"x\"y\n"), IngestError);
    CHECK_THROWS_AS(parse_csv_text(""), IngestError);
}

TEST_CASE("parse_numeric_cell accepts decimals and rejects junk") {
    CHECK(parse_numeric_cell("12.5").value() == doctest::Approx(12.5));
    CHECK(parse_numeric_cell("-3e2").value() == doctest::Approx(-300.0));
    CHECK(parse_numeric_cell(" 7 ").value() == doctest::Approx(7.0));
    CHECK_FALSE(parse_numeric_cell("12abc").has_value());
    CHECK_FALSE(parse_numeric_cell("nan").has_value());
    CHECK_FALSE(parse_numeric_cell("inf").has_value());
    CHECK_FALSE(parse_numeric_cell("").has_value());
    CHECK_FALSE(parse_numeric_cell("two").has_value());
}

TEST_CASE("typed_table infers numeric only when every present cell parses") {
    const CsvTable csv = parse_csv_text("num,mixed,cat\n1,2,x\n2.5,,y\n3,z,x\n");
    const TableData t = typed_table(csv);
    REQUIRE(t.schema.size() == 3);
    CHECK(t.schema[0].kind == FeatureKind::numeric);
    CHECK(t.schema[1].kind == FeatureKind::categorical);
    CHECK(t.schema[2].kind == FeatureKind::categorical);

    CHECK(std::get<double>(*t.rows[0][0]) == doctest::Approx(1.0));
    CHECK_FALSE(t.rows[1][1].has_value());
    CHECK(std::get<std::string>(*t.rows[1][2]) == "y");
}

TEST_CASE("typed_table honors declared kinds and exclusions") {
    const CsvTable csv = parse_csv_text("id,score,label\n1,0.5,a\n2,0.7,b\n");
    TypedTableOptions options;
    options.declared.push_back({"id", FeatureKind::categorical});
    options.exclude.push_back(" Label ");  // canonical-name match
    const TableData t = typed_table(csv, options);
    REQUIRE(t.schema.size() == 2);
    CHECK(t.schema[0].name == "id");
    CHECK(t.schema[0].kind == FeatureKind::categorical);
    CHECK(std::get<std::string>(*t.rows[0][0]) == "1");

    TypedTableOptions all;
    all.exclude = {"id", "score", "label"};
    CHECK_THROWS_AS(typed_table(csv, all), IngestError);
}

TEST_CASE("declared numeric column with a stray token fails with the row number") {
    const CsvTable csv = parse_csv_text("x\n1\nboom\n");
    TypedTableOptions options;
    options.declared.push_back({"x", FeatureKind::numeric});
    try {
        typed_table(csv, options);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("schema files load and reject malformed documents") {
    const std::string dir = "csv_test_tmp";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/schema.json");
        out << R"({"fields": [{"name": "x", "kind": "numeric"},)"
            << R"( {"name": "c", "kind": "categorical"}]})";
    }
    const auto fields = load_schema_file(dir + "/schema.json");
    REQUIRE(fields.size() == 2);
    CHECK(fields[0].name == "x");
    CHECK(fields[0].kind == FeatureKind::numeric);
    CHECK(fields[1].kind == FeatureKind::categorical);

    {
        std::ofstream out(dir + "/bad.json");
        out << "not json";
    }
    CHECK_THROWS_AS(load_schema_file(dir + "/bad.json"), FormatError);
    {
        std::ofstream out(dir + "/badkind.json");
        out << R"({"fields": [{"name": "x", "kind": "integer"}]})";
    }
    CHECK_THROWS_AS(load_schema_file(dir + "/badkind.json"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv to sketch end to end") {
    std::string text = "age,city\n";
    for (int i = 0; i < 10; ++i) {
        text += std::to_string(20 + i) + "," + (i % 2 == 0 ? "rome" : "oslo") + "\n";
    }
    const TableData table = typed_table(parse_csv_text(text));
    IngestOptions options;
    options.partition_size_m = 4;
    options.bins_per_numeric_feature = 2;
    options.dataset_id = "cities";
    const DatasetSketch sketch = ingest_table(table, options);
    CHECK(sketch.partitions.size() == 3);
    CHECK(sketch.total_rows == 10);
    CHECK(sketch.descriptors.size() == 2);
}

} // TEST_SUITE
