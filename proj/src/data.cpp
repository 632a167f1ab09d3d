#include "pmatch/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "pmatch/errors.hpp"
#include "pmatch/format.hpp"

namespace pmatch::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Splits one CSV line.  Quoted fields may contain commas and doubled
// quotes; embedded newlines are not supported.
std::vector<std::string> split_fields(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

double parse_value(std::string_view field, std::size_t line_no) {
    const std::string_view body = trim(field);
    double v = 0.0;
    const auto res = std::from_chars(body.data(), body.data() + body.size(), v);
    if (res.ec != std::errc{} || res.ptr != body.data() + body.size())
        throw ParseError("unparsable value '" + std::string(field) + "'", line_no);
    if (!std::isfinite(v))
        throw ParseError("value must be finite, got '" + std::string(field) + "'", line_no);
    return v;
}

Phase parse_phase(std::string_view field, std::size_t line_no) {
    const std::string tok = to_lower(trim(field));
    if (tok == "pre") return Phase::pre;
    if (tok == "post") return Phase::post;
    throw ParseError("unknown phase '" + std::string(field) + "' (expected pre or post)",
                     line_no);
}

} // namespace

std::vector<SurveyRecord> parse_csv(std::istream& in, const ParseOptions& opts) {
    std::string line;
    std::size_t line_no = 0;

    // Header: locate the three configured columns, ignore the rest.
    if (!std::getline(in, line)) throw ParseError("empty input: missing header row", 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line, line_no);

    std::size_t id_col = header.size(), phase_col = header.size(), value_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = trim(header[i]);
        if (name == opts.id_column) id_col = i;
        else if (name == opts.phase_column) phase_col = i;
        else if (name == opts.value_column) value_col = i;
    }
    auto require = [&](std::size_t col, const std::string& name) {
        if (col == header.size())
            throw ParseError("header is missing required column '" + name + "'", 1);
    };
    require(id_col, opts.id_column);
    require(phase_col, opts.phase_column);
    require(value_col, opts.value_column);

    std::vector<SurveyRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        const auto fields = split_fields(line, line_no);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got "
                             + std::to_string(fields.size()), line_no);

        SurveyRecord rec;
        const std::string_view raw_id = trim(fields[id_col]);
        if (!raw_id.empty())
            rec.id = opts.fold_id_case ? to_lower(raw_id) : std::string(raw_id);
        rec.phase = parse_phase(fields[phase_col], line_no);
        rec.value = parse_value(fields[value_col], line_no);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SurveyRecord> parse_csv_file(const std::string& path, const ParseOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return parse_csv(in, opts);
}

BuildResult build_dataset(std::span<const SurveyRecord> records) {
    BuildResult out;
    auto& ds = out.dataset;
    auto& rep = out.report;

    // Group by id; ordered map keeps the result independent of row order.
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_id;
    for (const auto& rec : records) {
        if (rec.phase == Phase::pre) ++rep.n_pre; else ++rep.n_post;
        if (!rec.id) {
            ++rep.n_blank_ids;
            (rec.phase == Phase::pre ? ds.unmatched_pre : ds.unmatched_post).push_back(rec.value);
            continue;
        }
        auto& bucket = by_id[*rec.id];
        (rec.phase == Phase::pre ? bucket.first : bucket.second).push_back(rec.value);
    }

    if (rep.n_pre != rep.n_post)
        throw UnequalArms("build_dataset: " + std::to_string(rep.n_pre) + " pre records vs "
                          + std::to_string(rep.n_post) + " post records");
    if (rep.n_pre < 2)
        throw InsufficientData("build_dataset: need at least two records per phase");

    for (const auto& [id, bucket] : by_id) {
        const auto& [pre, post] = bucket;
        if (pre.size() == 1 && post.size() == 1) {
            ds.matched.emplace_back(pre.front(), post.front());
            continue;
        }
        // Duplicate ids are ambiguous; demote everything for this id.
        if (pre.size() > 1 || post.size() > 1)
            rep.n_dropped_duplicates += pre.size() + post.size();
        ds.unmatched_pre.insert(ds.unmatched_pre.end(), pre.begin(), pre.end());
        ds.unmatched_post.insert(ds.unmatched_post.end(), post.begin(), post.end());
    }
    rep.m_matched = ds.matched.size();

    std::sort(ds.unmatched_pre.begin(), ds.unmatched_pre.end());
    std::sort(ds.unmatched_post.begin(), ds.unmatched_post.end());
    ds.validate();
    return out;
}

std::vector<SurveyRecord> to_records(const tests::PartiallyMatchedDataset& ds) {
    std::vector<SurveyRecord> records;
    records.reserve(2 * ds.matched.size() + ds.unmatched_pre.size() + ds.unmatched_post.size());
    for (std::size_t i = 0; i < ds.matched.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "m%06zu", i);
        records.push_back({std::string(id), Phase::pre, ds.matched[i].first});
        records.push_back({std::string(id), Phase::post, ds.matched[i].second});
    }
    for (double v : ds.unmatched_pre) records.push_back({std::nullopt, Phase::pre, v});
    for (double v : ds.unmatched_post) records.push_back({std::nullopt, Phase::post, v});
    return records;
}

void write_csv(std::ostream& out, std::span<const SurveyRecord> records) {
    auto quote_if_needed = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += "\"\"";
            else quoted.push_back(c);
        }
        quoted.push_back('"');
        return quoted;
    };

    out << "id,phase,value\n";
    for (const auto& rec : records) {
        out << (rec.id ? quote_if_needed(*rec.id) : "") << ','
            << (rec.phase == Phase::pre ? "pre" : "post") << ','
            << format::fmt_double(rec.value) << '\n';
    }
}

} // namespace pmatch::data
