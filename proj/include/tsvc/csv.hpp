#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tsvc {

/// CSV dialect: comma separated, mandatory header row, '.' decimal point, no
/// quoting of embedded commas. Cells are kept as text and parsed on access.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws InvalidArgument when the cell is not a plain number.
    double number(std::size_t row, std::size_t col) const;

    std::optional<std::size_t> find_column(const std::string& name) const;
    /// Throws InvalidArgument when the column is missing.
    std::size_t column_index(const std::string& name) const;
};

CsvTable read_csv_table(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Shortest representation that round-trips through strtod.
std::string format_number(double value);

}  // namespace tsvc
