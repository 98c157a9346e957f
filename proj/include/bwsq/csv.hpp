#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace bwsq::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// line breaks. A UTF-8 BOM on the first field is dropped. Throws
// SchemaError on an unterminated quote.
std::vector<Row> parse(std::string_view content);

std::vector<Row> read_file(const std::string& path);

// Quotes only when the field needs it.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

// Shortest representation that round-trips to the same double.
std::string format_number(double value);

}  // namespace bwsq::csv
