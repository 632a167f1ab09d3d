#include "pmatch/report.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pmatch/errors.hpp"
#include "pmatch/format.hpp"

namespace pmatch::report {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string cell_text(const Cell& c) {
    switch (c.kind) {
        case Cell::Kind::null: return "NA";
        case Cell::Kind::text: return c.text;
        case Cell::Kind::number: return format::fmt_double(c.number);
        case Cell::Kind::integer: return format::fmt_int(c.integer);
    }
    return {};
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

ordered_json cell_json(const Cell& c) {
    switch (c.kind) {
        case Cell::Kind::null: return nullptr;
        case Cell::Kind::text: return c.text;
        case Cell::Kind::number: return c.number;
        case Cell::Kind::integer: return c.integer;
    }
    return nullptr;
}

std::string render_text_columns(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());

    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += "  ";
            out += row[i];
            if (i + 1 < row.size()) out.append(widths[i] - row[i].size(), ' ');
        }
        out += '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    return out;
}

} // namespace

std::optional<Format> format_from_string(std::string_view name) {
    if (name == "text") return Format::text;
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    return std::nullopt;
}

std::string_view to_string(Format f) {
    switch (f) {
        case Format::text: return "text";
        case Format::csv: return "csv";
        case Format::json: return "json";
    }
    return "unknown";
}

void ResultTable::add_row(std::vector<Cell> cells) {
    if (cells.size() != columns.size())
        throw std::domain_error("ResultTable: row width does not match column count");
    rows.push_back(std::move(cells));
}

void Document::add(std::string key, Cell value) {
    fields.emplace_back(std::move(key), std::move(value));
}

std::string render(const ResultTable& table, Format f) {
    switch (f) {
        case Format::csv: {
            std::string out;
            for (std::size_t i = 0; i < table.columns.size(); ++i) {
                if (i) out.push_back(',');
                out += csv_escape(table.columns[i]);
            }
            out.push_back('\n');
            for (const auto& row : table.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    if (i) out.push_back(',');
                    out += csv_escape(cell_text(row[i]));
                }
                out.push_back('\n');
            }
            return out;
        }
        case Format::json: {
            ordered_json arr = ordered_json::array();
            for (const auto& row : table.rows) {
                ordered_json obj;
                for (std::size_t i = 0; i < row.size(); ++i)
                    obj[table.columns[i]] = cell_json(row[i]);
                arr.push_back(std::move(obj));
            }
            return arr.dump(2) + "\n";
        }
        case Format::text: {
            std::vector<std::vector<std::string>> rows;
            rows.reserve(table.rows.size());
            for (const auto& row : table.rows) {
                std::vector<std::string> cells;
                cells.reserve(row.size());
                for (const auto& c : row) cells.push_back(cell_text(c));
                rows.push_back(std::move(cells));
            }
            return render_text_columns(table.columns, rows);
        }
    }
    throw std::domain_error("render: bad format");
}

std::string render(const Document& doc, Format f) {
    switch (f) {
        case Format::csv: {
            std::string keys, values;
            for (std::size_t i = 0; i < doc.fields.size(); ++i) {
                if (i) {
                    keys.push_back(',');
                    values.push_back(',');
                }
                keys += csv_escape(doc.fields[i].first);
                values += csv_escape(cell_text(doc.fields[i].second));
            }
            return keys + "\n" + values + "\n";
        }
        case Format::json: {
            ordered_json obj;
            for (const auto& [key, cell] : doc.fields) obj[key] = cell_json(cell);
            return obj.dump(2) + "\n";
        }
        case Format::text: {
            std::size_t width = 0;
            for (const auto& [key, cell] : doc.fields) width = std::max(width, key.size());
            std::string out;
            for (const auto& [key, cell] : doc.fields) {
                out += key;
                out.append(width - key.size() + 2, ' ');
                out += cell_text(cell);
                out.push_back('\n');
            }
            return out;
        }
    }
    throw std::domain_error("render: bad format");
}

namespace {

const char* kGridHeader = "n,prop,rho,q_star";

simulate::QuantileGrid grid_from_json(const ordered_json& arr) {
    if (!arr.is_array()) throw ParseError("grid json: expected a top-level array");
    simulate::QuantileGrid grid;
    for (const auto& obj : arr) {
        if (!obj.is_object() || !obj.contains("n") || !obj.contains("prop")
            || !obj.contains("rho") || !obj.contains("q_star"))
            throw ParseError("grid json: each entry needs n, prop, rho, q_star");
        simulate::QuantileGrid::Entry e;
        e.n = obj.at("n").get<int>();
        e.prop = obj.at("prop").get<double>();
        if (!obj.at("rho").is_null()) e.rho = obj.at("rho").get<double>();
        if (!obj.at("q_star").is_null()) e.q = obj.at("q_star").get<double>();
        grid.entries.push_back(e);
    }
    return grid;
}

double parse_double_field(const std::string& field, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError("grid csv: unparsable number '" + field + "'", line_no);
    return v;
}

simulate::QuantileGrid grid_from_csv(std::istream& in, const std::string& first_line) {
    if (first_line != kGridHeader)
        throw ParseError("grid csv: expected header '" + std::string(kGridHeader) + "'", 1);

    simulate::QuantileGrid grid;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 4)
            throw ParseError("grid csv: expected 4 fields, got " + std::to_string(fields.size()),
                             line_no);

        simulate::QuantileGrid::Entry e;
        e.n = static_cast<int>(parse_double_field(fields[0], line_no));
        e.prop = parse_double_field(fields[1], line_no);
        if (fields[2] != "*") e.rho = parse_double_field(fields[2], line_no);
        if (fields[3] != "NA") e.q = parse_double_field(fields[3], line_no);
        grid.entries.push_back(e);
    }
    return grid;
}

} // namespace

void save_grid(std::ostream& out, const simulate::QuantileGrid& grid, Format f) {
    switch (f) {
        case Format::json: {
            ordered_json arr = ordered_json::array();
            for (const auto& e : grid.entries) {
                ordered_json obj;
                obj["n"] = e.n;
                obj["prop"] = e.prop;
                obj["rho"] = e.rho ? ordered_json(*e.rho) : ordered_json(nullptr);
                obj["q_star"] = e.q ? ordered_json(*e.q) : ordered_json(nullptr);
                arr.push_back(std::move(obj));
            }
            out << arr.dump(2) << "\n";
            return;
        }
        case Format::text:
        case Format::csv: {
            out << kGridHeader << "\n";
            for (const auto& e : grid.entries) {
                out << e.n << ',' << format::fmt_double(e.prop) << ','
                    << (e.rho ? format::fmt_double(*e.rho) : std::string("*")) << ','
                    << (e.q ? format::fmt_double(*e.q) : std::string("NA")) << '\n';
            }
            return;
        }
    }
    throw std::domain_error("save_grid: bad format");
}

simulate::QuantileGrid load_grid(std::istream& in) {
    // Sniff: JSON starts with '[', the CSV schema starts with its header.
    std::string first_line;
    if (!std::getline(in, first_line)) throw ParseError("grid: empty input");
    if (!first_line.empty() && first_line.back() == '\r') first_line.pop_back();

    std::size_t i = 0;
    while (i < first_line.size() && std::isspace(static_cast<unsigned char>(first_line[i]))) ++i;
    if (i < first_line.size() && first_line[i] == '[') {
        std::ostringstream rest;
        rest << first_line << '\n' << in.rdbuf();
        ordered_json parsed;
        try {
            parsed = ordered_json::parse(rest.str());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("grid json: ") + e.what());
        }
        return grid_from_json(parsed);
    }
    return grid_from_csv(in, first_line);
}

simulate::QuantileGrid load_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return load_grid(in);
}

} // namespace pmatch::report
