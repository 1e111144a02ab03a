#include "tabaudit/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "tabaudit/csv.hpp"
#include "tabaudit/error.hpp"

namespace tabaudit {

ColumnKind infer_column_kind(std::size_t cardinality, std::size_t n_rows) {
    if (n_rows == 0) {
        throw DomainError("infer_column_kind: n_rows must be >= 1");
    }
    const double kappa = static_cast<double>(cardinality) / static_cast<double>(n_rows);
    return kappa < kCategoricalKappa ? ColumnKind::Categorical : ColumnKind::Numeric;
}

std::string_view to_string(ColumnKind kind) noexcept {
    return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

Column Column::from_numbers(std::string name, std::vector<double> values) {
    Column c;
    c.name_ = std::move(name);
    c.storage_ = CellStorage::Number;
    c.numbers_ = std::move(values);
    for (double& v : c.numbers_) {
        if (!std::isfinite(v)) {
            v = kMissing;
        }
    }
    c.size_ = c.numbers_.size();
    c.finalize();
    return c;
}

Column Column::from_tokens(std::string name, std::vector<std::int32_t> codes,
                           std::vector<std::string> dictionary) {
    Column c;
    c.name_ = std::move(name);
    c.storage_ = CellStorage::Token;
    c.codes_ = std::move(codes);
    c.dictionary_ = std::move(dictionary);
    for (auto code : c.codes_) {
        if (code < -1 || code >= static_cast<std::int32_t>(c.dictionary_.size())) {
            throw DomainError("Column: token code out of dictionary range");
        }
    }
    c.size_ = c.codes_.size();
    c.finalize();
    return c;
}

void Column::finalize() {
    missing_ = 0;
    if (storage_ == CellStorage::Number) {
        std::vector<double> present;
        present.reserve(numbers_.size());
        for (double v : numbers_) {
            if (std::isnan(v)) {
                ++missing_;
            } else {
                present.push_back(v);
            }
        }
        std::sort(present.begin(), present.end());
        cardinality_ = static_cast<std::size_t>(
            std::unique(present.begin(), present.end()) - present.begin());
    } else {
        std::vector<bool> seen(dictionary_.size(), false);
        cardinality_ = 0;
        for (auto code : codes_) {
            if (code < 0) {
                ++missing_;
            } else if (!seen[static_cast<std::size_t>(code)]) {
                seen[static_cast<std::size_t>(code)] = true;
                ++cardinality_;
            }
        }
    }
    if (size_ > 0) {
        kappa_ = static_cast<double>(cardinality_) / static_cast<double>(size_);
        kind_ = infer_column_kind(cardinality_, size_);
    }
}

bool Column::is_missing(std::size_t row) const {
    if (storage_ == CellStorage::Number) {
        return std::isnan(numbers_.at(row));
    }
    return codes_.at(row) < 0;
}

std::vector<double> Column::present_numbers() const {
    std::vector<double> out;
    out.reserve(numbers_.size() - std::min(missing_, numbers_.size()));
    for (double v : numbers_) {
        if (!std::isnan(v)) {
            out.push_back(v);
        }
    }
    return out;
}

std::vector<std::size_t> Column::value_counts() const {
    std::vector<std::size_t> counts;
    if (storage_ == CellStorage::Number) {
        std::vector<double> present = present_numbers();
        std::sort(present.begin(), present.end());
        for (std::size_t i = 0; i < present.size();) {
            std::size_t j = i;
            while (j < present.size() && present[j] == present[i]) {
                ++j;
            }
            counts.push_back(j - i);
            i = j;
        }
    } else {
        std::vector<std::size_t> by_code(dictionary_.size(), 0);
        for (auto code : codes_) {
            if (code >= 0) {
                ++by_code[static_cast<std::size_t>(code)];
            }
        }
        for (auto n : by_code) {
            if (n > 0) {
                counts.push_back(n);
            }
        }
    }
    return counts;
}

std::string Column::cell_text(std::size_t row) const {
    if (is_missing(row)) {
        return {};
    }
    if (storage_ == CellStorage::Token) {
        return dictionary_[static_cast<std::size_t>(codes_[row])];
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), numbers_[row]);
    (void)ec;
    return std::string(buf, ptr);
}

Table::Table(std::string source_id, std::vector<Column> columns)
    : source_id_(std::move(source_id)), columns_(std::move(columns)) {
    if (columns_.empty()) {
        throw DomainError("Table '" + source_id_ + "': needs at least one column");
    }
    n_rows_ = columns_.front().size();
    if (n_rows_ == 0) {
        throw DomainError("Table '" + source_id_ + "': needs at least one row");
    }
    for (const auto& c : columns_) {
        if (c.size() != n_rows_) {
            throw DomainError("Table '" + source_id_ + "': column '" + c.name() +
                              "' has a different row count");
        }
    }
}

namespace {

bool parse_finite(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    if (text.empty()) {
        return false;
    }
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

Column build_column(std::string name, const std::vector<std::string_view>& cells, double numeric_fraction) {
    std::vector<double> values(cells.size(), kMissing);
    std::size_t present = 0;
    std::size_t parsed = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].empty()) {
            continue;
        }
        ++present;
        double v = 0.0;
        if (parse_finite(cells[i], v)) {
            values[i] = v;
            ++parsed;
        }
    }
    if (present == 0 || static_cast<double>(parsed) >= numeric_fraction * static_cast<double>(present)) {
        return Column::from_numbers(std::move(name), std::move(values));
    }

    std::vector<std::int32_t> codes(cells.size(), -1);
    std::vector<std::string> dictionary;
    std::unordered_map<std::string_view, std::int32_t> lookup;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].empty()) {
            continue;
        }
        auto [it, inserted] = lookup.try_emplace(cells[i], static_cast<std::int32_t>(dictionary.size()));
        if (inserted) {
            dictionary.emplace_back(cells[i]);
        }
        codes[i] = it->second;
    }
    return Column::from_tokens(std::move(name), std::move(codes), std::move(dictionary));
}

} // namespace

Table parse_table(std::string_view text, std::string source_id, const LoadOptions& options) {
    auto records = csv::parse(text, options.delimiter);
    if (records.empty()) {
        throw InputError("'" + source_id + "': empty file");
    }

    std::vector<std::string> names;
    std::size_t first_data = 0;
    if (options.header) {
        for (auto& h : records.front()) {
            names.emplace_back(csv::trim(h));
        }
        first_data = 1;
    } else {
        for (std::size_t j = 0; j < records.front().size(); ++j) {
            names.push_back(std::to_string(j));
        }
    }
    const std::size_t width = names.size();
    const std::size_t n_rows = records.size() - first_data;
    if (n_rows == 0) {
        throw InputError("'" + source_id + "': no data rows");
    }

    std::size_t ragged = 0;
    for (std::size_t r = first_data; r < records.size(); ++r) {
        if (records[r].size() != width) {
            ++ragged;
        }
    }
    if (ragged > options.ragged_tolerance) {
        throw InputError("'" + source_id + "': " + std::to_string(ragged) +
                         " ragged row(s) exceed tolerance " + std::to_string(options.ragged_tolerance));
    }

    std::vector<Column> columns;
    columns.reserve(width);
    std::vector<std::string_view> cells(n_rows);
    for (std::size_t j = 0; j < width; ++j) {
        for (std::size_t r = 0; r < n_rows; ++r) {
            const auto& rec = records[first_data + r];
            cells[r] = j < rec.size() ? csv::trim(rec[j]) : std::string_view{};
        }
        columns.push_back(build_column(names[j], cells, options.numeric_fraction));
    }
    return Table(std::move(source_id), std::move(columns));
}

Table load_table(const std::filesystem::path& path, std::string source_id, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw InputError("read failure on '" + path.string() + "'");
    }
    return parse_table(buffer.str(), std::move(source_id), options);
}

Table load_table(const std::filesystem::path& path, const LoadOptions& options) {
    return load_table(path, path.filename().string(), options);
}

std::string format_table(const Table& table, char delimiter) {
    std::string out;
    csv::Record fields(table.n_cols());
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        fields[j] = table.column(j).name();
    }
    out += csv::join(fields, delimiter);
    out.push_back('\n');
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        for (std::size_t j = 0; j < table.n_cols(); ++j) {
            fields[j] = table.column(j).cell_text(r);
        }
        if (table.n_cols() == 1 && fields[0].empty()) {
            // A bare empty line would be skipped by the parser.
            out += "\"\"";
        } else {
            out += csv::join(fields, delimiter);
        }
        out.push_back('\n');
    }
    return out;
}

void write_table(const Table& table, const std::filesystem::path& path, char delimiter) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out << format_table(table, delimiter);
    if (!out) {
        throw InputError("write failure on '" + path.string() + "'");
    }
}

} // namespace tabaudit
