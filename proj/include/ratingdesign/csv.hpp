#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ratingdesign::csv {

// Splits one RFC-4180 style line (double-quote escaping, no embedded newlines).
// Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_line(std::string_view line);

// Quotes a field when it contains a comma, quote, or surrounding whitespace.
std::string escape(std::string_view field);

// Reads the next line without its terminator (handles CRLF); false at EOF.
bool read_line(std::istream& in, std::string& line);

// Shortest round-trip decimal form of a double; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double value);

}  // namespace ratingdesign::csv
