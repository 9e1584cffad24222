#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fluorosim::csv {

// Shortest representation that parses back to the same double.
std::string format_double(double v);

double parse_double(std::string_view text, std::string_view column);
long long parse_int(std::string_view text, std::string_view column);
bool parse_bool(std::string_view text, std::string_view column);

std::vector<std::string> split_row(std::string_view line);

// Header-checked table reader. Schema violations throw DataError naming the
// offending column.
class Table {
public:
    static Table read(std::istream& in, const std::vector<std::string>& expected_columns);
    static Table read(const std::string& path, const std::vector<std::string>& expected_columns);

    std::size_t rows() const { return cells_.size(); }
    const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }
    const std::vector<std::string>& columns() const { return columns_; }

    double number(std::size_t row, std::size_t col) const;
    long long integer(std::size_t row, std::size_t col) const;
    bool boolean(std::size_t row, std::size_t col) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> cells_;
};

}  // namespace fluorosim::csv
