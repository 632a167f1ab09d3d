#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmatch/tests.hpp"

// Survey ingestion: CSV of (id, phase, value) rows, one per response,
// matched into a PartiallyMatchedDataset by subject id.

namespace pmatch::data {

enum class Phase { pre, post };

struct SurveyRecord {
    std::optional<std::string> id; // absent = respondent declined to identify
    Phase phase = Phase::pre;
    double value = 0.0;
};

struct ParseOptions {
    std::string id_column = "id";
    std::string phase_column = "phase";
    std::string value_column = "value";
    // Ids are always trimmed (a whitespace-only id counts as absent);
    // case folding can be turned off for case-sensitive id schemes.
    bool fold_id_case = true;
};

// Parses a CSV with a header row naming at least the three configured
// columns (extra columns are ignored).  Values must be finite numbers;
// phase tokens are "pre"/"post" (any case).  Throws ParseError with a
// 1-based line number on malformed input.
std::vector<SurveyRecord> parse_csv(std::istream& in, const ParseOptions& opts = {});
std::vector<SurveyRecord> parse_csv_file(const std::string& path, const ParseOptions& opts = {});

struct MatchReport {
    std::size_t n_pre = 0;
    std::size_t n_post = 0;
    std::size_t m_matched = 0;
    std::size_t n_dropped_duplicates = 0; // records demoted to unmatched due to duplicate ids
    std::size_t n_blank_ids = 0;
};

struct BuildResult {
    tests::PartiallyMatchedDataset dataset;
    MatchReport report;
};

// Matches pre and post records by id.  An id with exactly one record in
// each phase becomes a matched pair; ids with duplicates within a phase
// are demoted to the unmatched pools (counted in n_dropped_duplicates),
// as are one-phase-only ids and blank-id records.  Matched pairs are
// ordered by id and unmatched pools are sorted, so the result does not
// depend on input row order.  Throws UnequalArms when the phases have
// different record counts and InsufficientData when either has < 2.
BuildResult build_dataset(std::span<const SurveyRecord> records);

// Inverse convenience for round-trip tests and fixtures: synthesizes
// ids m000000, m000001, ... for matched pairs and blank ids for the
// unmatched pools.
std::vector<SurveyRecord> to_records(const tests::PartiallyMatchedDataset& ds);

// Serializes records in the schema parse_csv reads.
void write_csv(std::ostream& out, std::span<const SurveyRecord> records);

} // namespace pmatch::data
