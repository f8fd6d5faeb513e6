#include "tsvc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>

#include "tsvc/core.hpp"

namespace tsvc {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& field, std::size_t row) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
        throw Error(ErrorKind::InvalidArgument, "data row " + std::to_string(row + 1) +
                                                    ": not a number: '" + field + "'");
    return value;
}

}  // namespace

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    return parse_double(rows.at(row).at(col), row);
}

std::size_t CsvTable::column_index(const std::string& name) const {
    if (auto idx = find_column(name)) return *idx;
    throw Error(ErrorKind::InvalidArgument, "CSV has no column '" + name + "'");
}

CsvTable read_csv_table(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (table.header.empty()) {
            std::set<std::string> seen;
            for (const auto& f : fields) {
                if (f.empty()) throw Error(ErrorKind::InvalidArgument, "empty column name in CSV header");
                if (!seen.insert(f).second)
                    throw Error(ErrorKind::InvalidArgument, "duplicate CSV column '" + f + "'");
            }
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size())
            throw Error(ErrorKind::InvalidArgument, "line " + std::to_string(line_no) + ": expected " +
                                                        std::to_string(table.header.size()) + " fields, got " +
                                                        std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) throw Error(ErrorKind::InvalidArgument, "CSV is empty (header row required)");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return read_csv_table(in);
}

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace tsvc
