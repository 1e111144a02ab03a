#include "tabaudit/csv.hpp"

#include "tabaudit/error.hpp"

namespace tabaudit::csv {

std::vector<Record> parse(std::string_view text, char delimiter) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool line_has_content = false;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        if (line_has_content) {
            end_field();
            records.push_back(std::move(current));
        }
        current.clear();
        field.clear();
        field_was_quoted = false;
        line_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !field_was_quoted) {
            in_quotes = true;
            field_was_quoted = true;
            line_has_content = true;
        } else if (c == delimiter) {
            line_has_content = true;
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                continue;
            }
            end_record();
        } else {
            field.push_back(c);
            line_has_content = true;
        }
    }
    if (in_quotes) {
        throw InputError("unterminated quoted field");
    }
    end_record();
    return records;
}

std::string quote(std::string_view field, char delimiter) {
    bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
    if (!field.empty() && (field.front() == ' ' || field.back() == ' ' || field.front() == '\t' ||
                           field.back() == '\t')) {
        needs = true;
    }
    if (!needs) {
        return std::string(field);
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const Record& fields, char delimiter) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) {
            line.push_back(delimiter);
        }
        line += quote(fields[i], delimiter);
    }
    return line;
}

std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

} // namespace tabaudit::csv
