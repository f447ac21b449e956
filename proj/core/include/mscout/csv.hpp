#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mscout/sketch.hpp"
#include "mscout/types.hpp"

namespace mscout {

// Raw CSV contents: first record is the header, every cell still a string.
// An absent optional is a missing value (empty unquoted field).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<std::string>>> records;
};

// RFC 4180 rules: quoted fields, doubled quotes inside quotes, CRLF or LF
// record breaks, newlines allowed inside quoted fields. Throws IngestError
// with a line number on malformed input.
CsvTable parse_csv(std::istream& in);
CsvTable parse_csv_text(const std::string& text);
CsvTable parse_csv_file(const std::string& path);

// Parses a full cell as a decimal number; rejects nan/inf spellings and
// trailing junk so "12abc" stays categorical.
std::optional<double> parse_numeric_cell(const std::string& cell);

struct TypedTableOptions {
    // name -> kind overrides; unlisted columns fall back to inference.
    std::vector<SchemaField> declared;
    // Columns dropped before sketching (matched on canonical name).
    std::vector<std::string> exclude;
};

// Infers a column as numeric iff every present cell parses as a number,
// then converts cells to typed values.
TableData typed_table(const CsvTable& csv, const TypedTableOptions& options = {});

// Reads a JSON schema file: {"fields": [{"name": ..., "kind": "numeric"|"categorical"}, ...]}.
std::vector<SchemaField> load_schema_file(const std::string& path);

} // namespace mscout
