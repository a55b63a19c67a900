#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace halluguard::csv {

using Row = std::vector<std::string>;

// Quotes a field only when it contains a comma, quote or line break.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const Row& row);

// Reads every record; quoted fields may span lines. Throws Error(kParse) on
// an unterminated quote.
std::vector<Row> read_all(std::istream& in);

// "NA" for absent values, otherwise %.17g so values round-trip exactly.
std::string format_number(double value);

}  // namespace halluguard::csv
