#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tabaudit::csv {

using Record = std::vector<std::string>;

/// Splits delimited text into records. Handles double-quoted fields with
/// embedded delimiters, doubled quotes and newlines; accepts LF or CRLF line
/// endings. Blank lines are skipped.
std::vector<Record> parse(std::string_view text, char delimiter);

/// Quotes `field` when needed so that `parse` restores it unchanged.
std::string quote(std::string_view field, char delimiter);

/// Joins fields into one line (no trailing newline).
std::string join(const Record& fields, char delimiter);

/// Removes leading and trailing ASCII whitespace.
std::string_view trim(std::string_view s) noexcept;

} // namespace tabaudit::csv
