#include "fluorosim/csv.hpp"

#include "fluorosim/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <system_error>

namespace fluorosim::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string describe(std::string_view column, std::string_view text) {
    return "column '" + std::string(column) + "': cannot parse '" + std::string(text) + "'";
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

double parse_double(std::string_view text, std::string_view column) {
    text = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw DataError(describe(column, text));
    }
    return v;
}

long long parse_int(std::string_view text, std::string_view column) {
    text = trim(text);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw DataError(describe(column, text));
    }
    return v;
}

bool parse_bool(std::string_view text, std::string_view column) {
    text = trim(text);
    if (text == "1" || text == "true") return true;
    if (text == "0" || text == "false") return false;
    throw DataError(describe(column, text));
}

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

Table Table::read(std::istream& in, const std::vector<std::string>& expected_columns) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV: missing header row");
    t.columns_ = split_row(line);
    for (std::size_t i = 0; i < expected_columns.size(); ++i) {
        if (i >= t.columns_.size()) throw DataError("missing column '" + expected_columns[i] + "'");
        if (t.columns_[i] != expected_columns[i]) {
            throw DataError("column '" + expected_columns[i] + "' expected at position " + std::to_string(i) +
                            ", found '" + t.columns_[i] + "'");
        }
    }
    if (t.columns_.size() != expected_columns.size()) {
        throw DataError("unexpected column '" + t.columns_[expected_columns.size()] + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto row = split_row(line);
        if (row.size() != t.columns_.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.columns_.size()) +
                            " fields, found " + std::to_string(row.size()));
        }
        t.cells_.push_back(std::move(row));
    }
    return t;
}

Table Table::read(const std::string& path, const std::vector<std::string>& expected_columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return read(in, expected_columns);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

double Table::number(std::size_t row, std::size_t col) const { return parse_double(cells_[row][col], columns_[col]); }

long long Table::integer(std::size_t row, std::size_t col) const { return parse_int(cells_[row][col], columns_[col]); }

bool Table::boolean(std::size_t row, std::size_t col) const { return parse_bool(cells_[row][col], columns_[col]); }

}  // namespace fluorosim::csv
