#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace tabaudit {

/// Uniqueness-ratio threshold below which a column is treated as categorical.
inline constexpr double kCategoricalKappa = 0.2;

enum class ColumnKind { Numeric, Categorical };

/// How the cells of a column are held in memory. Independent of ColumnKind: a
/// low-cardinality numeric column is Number-stored but Categorical-kind.
enum class CellStorage { Number, Token };

/// Categorical iff cardinality / n_rows < 0.2 (strict). Requires n_rows >= 1.
ColumnKind infer_column_kind(std::size_t cardinality, std::size_t n_rows);

std::string_view to_string(ColumnKind kind) noexcept;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

class Column {
public:
    /// Number-stored column; NaN marks a missing cell.
    static Column from_numbers(std::string name, std::vector<double> values);
    /// Token-stored column. `codes` index into `dictionary` (first-appearance
    /// order); -1 marks a missing cell.
    static Column from_tokens(std::string name, std::vector<std::int32_t> codes,
                              std::vector<std::string> dictionary);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] CellStorage storage() const noexcept { return storage_; }
    [[nodiscard]] ColumnKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::size_t cardinality() const noexcept { return cardinality_; }
    [[nodiscard]] double uniqueness_ratio() const noexcept { return kappa_; }
    [[nodiscard]] std::size_t missing_count() const noexcept { return missing_; }

    [[nodiscard]] bool is_missing(std::size_t row) const;
    /// True when cells carry magnitudes (Number storage).
    [[nodiscard]] bool has_magnitudes() const noexcept { return storage_ == CellStorage::Number; }

    /// Raw numeric cells (NaN = missing); empty for token columns.
    [[nodiscard]] const std::vector<double>& numbers() const noexcept { return numbers_; }
    [[nodiscard]] const std::vector<std::int32_t>& codes() const noexcept { return codes_; }
    [[nodiscard]] const std::vector<std::string>& dictionary() const noexcept { return dictionary_; }

    /// Non-missing numeric values in row order.
    [[nodiscard]] std::vector<double> present_numbers() const;
    /// Occurrence count of each distinct non-missing value.
    [[nodiscard]] std::vector<std::size_t> value_counts() const;
    /// Text form of a cell; empty for missing.
    [[nodiscard]] std::string cell_text(std::size_t row) const;

private:
    Column() = default;
    void finalize();

    std::string name_;
    CellStorage storage_ = CellStorage::Number;
    ColumnKind kind_ = ColumnKind::Numeric;
    std::size_t size_ = 0;
    std::size_t cardinality_ = 0;
    std::size_t missing_ = 0;
    double kappa_ = 0.0;
    std::vector<double> numbers_;
    std::vector<std::int32_t> codes_;
    std::vector<std::string> dictionary_;
};

/// Immutable table: every column holds exactly n_rows cells.
class Table {
public:
    Table(std::string source_id, std::vector<Column> columns);

    [[nodiscard]] const std::string& source_id() const noexcept { return source_id_; }
    [[nodiscard]] std::size_t n_rows() const noexcept { return n_rows_; }
    [[nodiscard]] std::size_t n_cols() const noexcept { return columns_.size(); }
    [[nodiscard]] const std::vector<Column>& columns() const noexcept { return columns_; }
    [[nodiscard]] const Column& column(std::size_t j) const { return columns_.at(j); }

private:
    std::string source_id_;
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

struct LoadOptions {
    char delimiter = ',';
    bool header = true;
    /// Rows whose width differs from the header. Up to this many are padded
    /// with missing cells (or truncated); more is an error.
    std::size_t ragged_tolerance = 0;
    /// Minimum share of non-missing cells that must parse as finite reals for
    /// a column to be Number-stored.
    double numeric_fraction = 0.99;
};

/// Parses delimited text into a Table. Throws InputError.
Table parse_table(std::string_view text, std::string source_id, const LoadOptions& options = {});

/// Reads and parses a delimited file. Throws InputError.
Table load_table(const std::filesystem::path& path, const LoadOptions& options = {});
Table load_table(const std::filesystem::path& path, std::string source_id, const LoadOptions& options);

/// Serialises with a header row; numbers use the shortest round-trip form.
std::string format_table(const Table& table, char delimiter = ',');
void write_table(const Table& table, const std::filesystem::path& path, char delimiter = ',');

} // namespace tabaudit
