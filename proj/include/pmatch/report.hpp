#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmatch/simulate.hpp"

// Rendering and persistence for CLI artifacts.  All numeric output goes
// through the shortest round-trip formatter, so files are byte-stable
// and lossless.

namespace pmatch::report {

enum class Format { text, csv, json };

std::optional<Format> format_from_string(std::string_view name);
std::string_view to_string(Format f);

// A typed cell so every format renders the same value the same way.
// Null cells appear as "NA" in text/CSV and null in JSON.
struct Cell {
    enum class Kind { null, text, number, integer };
    Kind kind = Kind::null;
    std::string text;
    double number = 0.0;
    std::int64_t integer = 0;

    static Cell na() { return {}; }
    static Cell str(std::string s) { return {Kind::text, std::move(s), 0.0, 0}; }
    static Cell num(double v) { return {Kind::number, {}, v, 0}; }
    static Cell num(std::optional<double> v) { return v ? num(*v) : na(); }
    static Cell count(std::int64_t v) { return {Kind::integer, {}, 0.0, v}; }
};

// Column-oriented rows (simulation tables, curves).
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> cells);
};

// Key/value document (single test results).
struct Document {
    std::vector<std::pair<std::string, Cell>> fields;

    void add(std::string key, Cell value);
};

std::string render(const ResultTable& table, Format f);
std::string render(const Document& doc, Format f);

// Calibration grid persistence.  CSV schema: header n,prop,rho,q_star;
// conservative rows carry rho=*; not-calculable cells carry q_star=NA.
// JSON is the equivalent array of objects with nulls.  load_grid sniffs
// which of the two it is reading.
void save_grid(std::ostream& out, const simulate::QuantileGrid& grid, Format f);
simulate::QuantileGrid load_grid(std::istream& in);
simulate::QuantileGrid load_grid_file(const std::string& path);

} // namespace pmatch::report
