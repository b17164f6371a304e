#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace triage::csv {

using Row = std::vector<std::string>;

// RFC-4180 parser: quoted fields, doubled quotes, CRLF or LF line ends, newlines
// inside quoted fields. Throws Error{validation} on an unterminated quote.
std::vector<Row> parse(std::string_view text);

// Quotes a field only when it contains a delimiter, quote, or line break.
std::string escape(std::string_view field);

std::string join(const Row& row);

}  // namespace triage::csv
