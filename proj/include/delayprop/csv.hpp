#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace delayprop::csv {

// Splits one CSV line. Double-quoted fields may contain commas and "" escapes;
// embedded newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

// Reads the next non-empty line, stripping a trailing '\r'. Increments line_no
// for every physical line consumed.
std::optional<std::string> next_line(std::istream& in, std::size_t& line_no);

// Quotes a field if it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace delayprop::csv
