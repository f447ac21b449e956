#include "mscout/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace mscout {

namespace {

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
    throw IngestError("line " + std::to_string(line) + ": " + what);
}

} // namespace

CsvTable parse_csv(std::istream& in) {
    CsvTable table;
    std::vector<std::optional<std::string>> record;
    std::string field;
    bool field_quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t quote_open_line = 1;

    enum class State { field_start, unquoted, quoted, quote_seen };
    State state = State::field_start;

    auto end_field = [&]() {
        if (!field_started && !field_quoted) {
            record.emplace_back(std::nullopt);  // empty unquoted field = missing
        } else {
            record.emplace_back(std::move(field));
        }
        field.clear();
        field_quoted = false;
        field_started = false;
        state = State::field_start;
    };
    auto end_record = [&]() {
        end_field();
        if (table.header.empty()) {
            table.header.reserve(record.size());
            for (auto& cell : record) {
                if (!cell.has_value()) fail_at(line, "empty header field");
                table.header.push_back(std::move(*cell));
            }
        } else {
            table.records.push_back(std::move(record));
        }
        record.clear();
    };

    char c = 0;
    bool any_input = false;
    while (in.get(c)) {
        any_input = true;
        switch (state) {
        case State::field_start:
            if (c == '"') {
                state = State::quoted;
                field_quoted = true;
                quote_open_line = line;
            } else if (c == ',') {
                end_field();
            } else if (c == '\n') {
                end_record();
                ++line;
            } else if (c == '\r') {
                if (in.peek() == '\n') in.get();
                end_record();
                ++line;
            } else {
                state = State::unquoted;
                field_started = true;
                field.push_back(c);
            }
            break;
        case State::unquoted:
            if (c == ',') {
                end_field();
            } else if (c == '\n') {
                end_record();
                ++line;
            } else if (c == '\r') {
                if (in.peek() == '\n') in.get();
                end_record();
                ++line;
            } else if (c == '"') {
                fail_at(line, "quote inside unquoted field");
            } else {
                field.push_back(c);
            }
            break;
        case State::quoted:
            if (c == '"') {
                state = State::quote_seen;
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            break;
        case State::quote_seen:
            if (c == '"') {
                field.push_back('"');
                state = State::quoted;
            } else if (c == ',') {
                end_field();
            } else if (c == '\n') {
                end_record();
                ++line;
            } else if (c == '\r') {
                if (in.peek() == '\n') in.get();
                end_record();
                ++line;
            } else {
                fail_at(line, "unexpected character after closing quote");
            }
            break;
        }
    }
    if (state == State::quoted) fail_at(quote_open_line, "unterminated quoted field");
    if (state != State::field_start || field_started || field_quoted || !record.empty()) {
        end_record();  // final record without trailing newline
    }
    if (!any_input || table.header.empty()) throw IngestError("csv input is empty");
    for (std::size_t r = 0; r < table.records.size(); ++r) {
        if (table.records[r].size() != table.header.size()) {
            throw IngestError("row " + std::to_string(r + 1) + " has " +
                              std::to_string(table.records[r].size()) + " fields, expected " +
                              std::to_string(table.header.size()));
        }
    }
    return table;
}

CsvTable parse_csv_text(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

CsvTable parse_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file: " + path);
    return parse_csv(in);
}

std::optional<double> parse_numeric_cell(const std::string& cell) {
    std::size_t begin = cell.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::nullopt;
    std::size_t end = cell.find_last_not_of(" \t") + 1;
    for (std::size_t i = begin; i < end; ++i) {
        const char c = cell[i];
        const bool ok = (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.' ||
                        c == 'e' || c == 'E';
        if (!ok) return std::nullopt;  // rejects nan/inf/hex spellings
    }
    double value = 0.0;
    const char* first = cell.data() + begin;
    const char* last = cell.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

TableData typed_table(const CsvTable& csv, const TypedTableOptions& options) {
    if (csv.header.empty()) throw IngestError("csv has no header");

    std::set<std::string> excluded;
    for (const auto& name : options.exclude) excluded.insert(canonical_feature_name(name));
    std::unordered_map<std::string, FeatureKind> declared;
    for (const auto& field : options.declared) {
        declared[canonical_feature_name(field.name)] = field.kind;
    }

    std::vector<std::size_t> columns;
    TableData table;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        const std::string canonical = canonical_feature_name(csv.header[c]);
        if (excluded.count(canonical) != 0) continue;
        FeatureKind kind;
        if (auto it = declared.find(canonical); it != declared.end()) {
            kind = it->second;
        } else {
            bool any_present = false;
            bool all_numeric = true;
            for (const auto& record : csv.records) {
                const auto& cell = record[c];
                if (!cell.has_value()) continue;
                any_present = true;
                if (!parse_numeric_cell(*cell).has_value()) {
                    all_numeric = false;
                    break;
                }
            }
            kind = (any_present && all_numeric) ? FeatureKind::numeric : FeatureKind::categorical;
        }
        table.schema.push_back({csv.header[c], kind});
        columns.push_back(c);
    }
    if (table.schema.empty()) throw IngestError("no columns left after exclusions");

    table.rows.reserve(csv.records.size());
    for (std::size_t r = 0; r < csv.records.size(); ++r) {
        Row row;
        row.reserve(columns.size());
        for (std::size_t k = 0; k < columns.size(); ++k) {
            const auto& cell = csv.records[r][columns[k]];
            if (!cell.has_value()) {
                row.emplace_back(std::nullopt);
                continue;
            }
            if (table.schema[k].kind == FeatureKind::numeric) {
                auto value = parse_numeric_cell(*cell);
                if (!value.has_value()) {
                    throw IngestError("row " + std::to_string(r + 1) +
                                      ": non-numeric value in numeric column '" +
                                      table.schema[k].name + "': " + *cell);
                }
                row.emplace_back(*value);
            } else {
                row.emplace_back(*cell);
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<SchemaField> load_schema_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open schema file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("schema file is not valid json: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("fields") || !doc["fields"].is_array()) {
        throw FormatError("schema file must be an object with a 'fields' array");
    }
    std::vector<SchemaField> fields;
    for (const auto& entry : doc["fields"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry.contains("kind")) {
            throw FormatError("schema field needs 'name' and 'kind'");
        }
        fields.push_back({entry["name"].get<std::string>(),
                          feature_kind_from_string(entry["kind"].get<std::string>())});
    }
    return fields;
}

} // namespace mscout
