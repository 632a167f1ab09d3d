#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmatch/data.hpp"
#include "pmatch/errors.hpp"
#include "pmatch/format.hpp"
#include "pmatch/report.hpp"
#include "pmatch/rng.hpp"
#include "pmatch/simulate.hpp"

using namespace pmatch;

namespace {

std::vector<data::SurveyRecord> parse(const std::string& text,
                                      const data::ParseOptions& opts = {}) {
    std::istringstream in(text);
    return data::parse_csv(in, opts);
}

} // namespace

TEST_CASE("fmt_double is shortest and round-trips") {
    CHECK(format::fmt_double(0.5) == "0.5");
    CHECK(format::fmt_double(1.0) == "1");
    CHECK(format::fmt_double(-0.25) == "-0.25");
    CHECK(format::fmt_int(-3) == "-3");
    CHECK(format::fmt_int(0) == "0");

    for (const double v : {1.0 / 3.0, 0.1, 1e300, -2.2250738585072014e-308, 123456.789}) {
        const std::string s = format::fmt_double(v);
        double back = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
        REQUIRE(res.ec == std::errc{});
        CHECK(back == v);
    }
}

TEST_CASE("parse_csv reads the survey schema") {
    const std::string text =
        "id,phase,extra,value\r\n"
        " Alice ,pre,x,1.5\n"
        "alice,post,y,2.5\n"
        "\"b,ob\",PRE,z,-3.25e-1\n"
        ",post,w,4\n"
        "\n"
        "bob,Post,v,0.125\n";
    const auto recs = parse(text);
    REQUIRE(recs.size() == 5);

    CHECK(recs[0].id == "alice"); // trimmed and case-folded
    CHECK(recs[0].phase == data::Phase::pre);
    CHECK(recs[0].value == 1.5);
    CHECK(recs[1].id == "alice");
    CHECK(recs[1].phase == data::Phase::post);
    CHECK(recs[2].id == "b,ob"); // quoted comma survives
    CHECK(recs[2].phase == data::Phase::pre);
    CHECK(recs[2].value == -0.325);
    CHECK(!recs[3].id.has_value()); // blank id
    CHECK(recs[3].value == 4.0);
    CHECK(recs[4].id == "bob");
    CHECK(recs[4].phase == data::Phase::post);
}

TEST_CASE("parse_csv honors custom options") {
    data::ParseOptions opts;
    opts.id_column = "subject";
    opts.phase_column = "wave";
    opts.value_column = "score";
    opts.fold_id_case = false;
    const auto recs = parse("subject,wave,score\nAlice,pre,1\n", opts);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].id == "Alice"); // case preserved

    // Quoted header cells and doubled quotes inside fields.
    const auto quoted = parse("id,phase,value\n\"say \"\"hi\"\"\",pre,1\n");
    REQUIRE(quoted.size() == 1);
    CHECK(quoted[0].id == "say \"hi\"");
}

TEST_CASE("parse_csv reports 1-based line numbers") {
    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            data::parse_csv(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return static_cast<std::size_t>(-1);
    };

    CHECK(line_of("") == 1);                                  // empty input
    CHECK(line_of("id,phase\nx,pre\n") == 1);                 // missing column
    CHECK(line_of("id,phase,value\nx,pre,1\ny,mid,2\n") == 3); // bad phase
    CHECK(line_of("id,phase,value\nx,pre,abc\n") == 2);       // bad value
    CHECK(line_of("id,phase,value\nx,pre,inf\n") == 2);       // non-finite value
    CHECK(line_of("id,phase,value\nx,pre\n") == 2);           // short row
    CHECK(line_of("id,phase,value\n\"x,pre,1\n") == 2);       // unterminated quote

    CHECK_THROWS_AS(data::parse_csv_file("/nonexistent/file.csv"), ParseError);
}

TEST_CASE("build_dataset matches by id and demotes ambiguity") {
    const std::vector<data::SurveyRecord> recs = {
        {"b", data::Phase::pre, 3.0},    // matched pair "b", out of order
        {"a", data::Phase::pre, 1.0},    // matched pair "a"
        {"dup", data::Phase::pre, 5.0},  // duplicate-in-phase id: all demoted
        {"dup", data::Phase::pre, 6.0},
        {"dup", data::Phase::post, 7.0},
        {"solo", data::Phase::pre, 8.0}, // pre only
        {std::nullopt, data::Phase::post, 9.0},
        {std::nullopt, data::Phase::pre, 10.0},
        {"c", data::Phase::post, 11.0},  // post only
        {"a", data::Phase::post, 2.0},
        {"b", data::Phase::post, 4.0},
        {"d", data::Phase::post, 12.0},  // post only
    };
    const auto built = data::build_dataset(recs);

    CHECK(built.report.n_pre == 6);
    CHECK(built.report.n_post == 6);
    CHECK(built.report.m_matched == 2);
    CHECK(built.report.n_dropped_duplicates == 3);
    CHECK(built.report.n_blank_ids == 2);

    const auto& ds = built.dataset;
    REQUIRE(ds.matched.size() == 2);
    CHECK(ds.matched[0] == std::pair{1.0, 2.0}); // ordered by id: a before b
    CHECK(ds.matched[1] == std::pair{3.0, 4.0});
    CHECK(ds.unmatched_pre == std::vector{5.0, 6.0, 8.0, 10.0});
    CHECK(ds.unmatched_post == std::vector{7.0, 9.0, 11.0, 12.0});

    // Row order cannot matter.
    auto shuffled = recs;
    std::mt19937 gen(99);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const auto again = data::build_dataset(shuffled);
        CHECK(again.dataset.matched == ds.matched);
        CHECK(again.dataset.unmatched_pre == ds.unmatched_pre);
        CHECK(again.dataset.unmatched_post == ds.unmatched_post);
        CHECK(again.report.n_dropped_duplicates == built.report.n_dropped_duplicates);
    }
}

TEST_CASE("build_dataset rejects malformed surveys") {
    const std::vector<data::SurveyRecord> unequal = {
        {"a", data::Phase::pre, 1.0},
        {"b", data::Phase::pre, 2.0},
        {"a", data::Phase::post, 3.0},
    };
    CHECK_THROWS_AS(data::build_dataset(unequal), UnequalArms);

    const std::vector<data::SurveyRecord> tiny = {
        {"a", data::Phase::pre, 1.0},
        {"a", data::Phase::post, 2.0},
    };
    CHECK_THROWS_AS(data::build_dataset(tiny), InsufficientData);
}

TEST_CASE("dataset round-trips through the record form and CSV") {
    simulate::PhiloxStream rng(31, 0);
    auto ds = simulate::sample_dataset({0.2, 0.0, 1.0, 1.0, 0.5}, 40, 0.4, rng);
    // build_dataset sorts the pools, so compare against the sorted original.
    std::sort(ds.unmatched_pre.begin(), ds.unmatched_pre.end());
    std::sort(ds.unmatched_post.begin(), ds.unmatched_post.end());

    const auto recs = data::to_records(ds);
    std::ostringstream out;
    data::write_csv(out, recs);

    std::istringstream in(out.str());
    const auto parsed = data::parse_csv(in);
    const auto rebuilt = data::build_dataset(parsed);

    CHECK(rebuilt.dataset.matched == ds.matched);
    CHECK(rebuilt.dataset.unmatched_pre == ds.unmatched_pre);
    CHECK(rebuilt.dataset.unmatched_post == ds.unmatched_post);
    CHECK(rebuilt.report.m_matched == ds.matched.size());
    CHECK(rebuilt.report.n_blank_ids
          == ds.unmatched_pre.size() + ds.unmatched_post.size());
}

TEST_CASE("write_csv quotes ids that need it") {
    const std::vector<data::SurveyRecord> recs = {
        {"a,b", data::Phase::pre, 0.5},
        {"say \"hi\"", data::Phase::post, 1.0},
        {std::nullopt, data::Phase::pre, 2.0},
    };
    std::ostringstream out;
    data::write_csv(out, recs);
    CHECK(out.str()
          == "id,phase,value\n\"a,b\",pre,0.5\n\"say \"\"hi\"\"\",post,1\n,pre,2\n");
}

TEST_CASE("table rendering in all three formats") {
    report::ResultTable t;
    t.columns = {"name", "rate", "n", "note"};
    t.add_row({report::Cell::str("alpha"), report::Cell::num(0.5), report::Cell::count(10),
               report::Cell::na()});
    t.add_row({report::Cell::str("b"), report::Cell::num(std::optional<double>{}),
               report::Cell::count(-3), report::Cell::str("x,y")});

    CHECK(render(t, report::Format::csv)
          == "name,rate,n,note\nalpha,0.5,10,NA\nb,NA,-3,\"x,y\"\n");

    CHECK(render(t, report::Format::text)
          == "name   rate  n   note\n"
             "alpha  0.5   10  NA\n"
             "b      NA    -3  x,y\n");

    const auto parsed = nlohmann::json::parse(render(t, report::Format::json));
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0]["name"] == "alpha");
    CHECK(parsed[0]["rate"] == 0.5);
    CHECK(parsed[0]["n"] == 10);
    CHECK(parsed[0]["note"].is_null());
    CHECK(parsed[1]["rate"].is_null());
    CHECK(parsed[1]["note"] == "x,y");

    CHECK_THROWS_AS(t.add_row({report::Cell::na()}), std::domain_error);
}

TEST_CASE("document rendering in all three formats") {
    report::Document d;
    d.add("method", report::Cell::str("quantile"));
    d.add("p", report::Cell::num(0.25));
    d.add("note", report::Cell::na());

    CHECK(render(d, report::Format::csv) == "method,p,note\nquantile,0.25,NA\n");
    CHECK(render(d, report::Format::text) == "method  quantile\np       0.25\nnote    NA\n");

    const auto parsed = nlohmann::json::parse(render(d, report::Format::json));
    CHECK(parsed["method"] == "quantile");
    CHECK(parsed["p"] == 0.25);
    CHECK(parsed["note"].is_null());
}

TEST_CASE("format names round-trip") {
    for (const auto f : {report::Format::text, report::Format::csv, report::Format::json})
        CHECK(report::format_from_string(report::to_string(f)) == f);
    CHECK(!report::format_from_string("yaml").has_value());
}

TEST_CASE("grid persistence round-trips in CSV and JSON") {
    simulate::QuantileGrid grid;
    grid.entries = {{20, 0.1, 0.1, std::nullopt},
                    {20, 0.1, std::nullopt, std::nullopt},
                    {50, 0.5, 0.9, 0.35},
                    {50, 0.5, std::nullopt, 0.35}};

    std::ostringstream csv;
    report::save_grid(csv, grid, report::Format::csv);
    CHECK(csv.str()
          == "n,prop,rho,q_star\n"
             "20,0.1,0.1,NA\n"
             "20,0.1,*,NA\n"
             "50,0.5,0.9,0.35\n"
             "50,0.5,*,0.35\n");

    auto check_equal = [&](const simulate::QuantileGrid& got) {
        REQUIRE(got.entries.size() == grid.entries.size());
        for (std::size_t i = 0; i < grid.entries.size(); ++i) {
            CHECK(got.entries[i].n == grid.entries[i].n);
            CHECK(got.entries[i].prop == grid.entries[i].prop);
            CHECK(got.entries[i].rho == grid.entries[i].rho);
            CHECK(got.entries[i].q == grid.entries[i].q);
        }
    };

    std::istringstream csv_in(csv.str());
    check_equal(report::load_grid(csv_in));

    std::ostringstream json;
    report::save_grid(json, grid, report::Format::json);
    std::istringstream json_in("  " + json.str()); // sniffing tolerates leading space
    check_equal(report::load_grid(json_in));

    // The text format persists as CSV so files stay machine-readable.
    std::ostringstream text;
    report::save_grid(text, grid, report::Format::text);
    CHECK(text.str() == csv.str());
}

TEST_CASE("grid loading rejects malformed input") {
    auto load = [](const std::string& text) {
        std::istringstream in(text);
        return report::load_grid(in);
    };
    CHECK_THROWS_AS(load(""), ParseError);
    CHECK_THROWS_AS(load("a,b,c\n"), ParseError);
    CHECK_THROWS_AS(load("n,prop,rho,q_star\n20,0.1,0.1\n"), ParseError);
    CHECK_THROWS_AS(load("n,prop,rho,q_star\n20,x,0.1,NA\n"), ParseError);
    CHECK_THROWS_AS(load("[{]"), ParseError);
    CHECK_THROWS_AS(load("[{\"n\": 20}]"), ParseError);
    CHECK_THROWS_AS(load("{\"n\": 20}"), ParseError); // object, not array: read as CSV
    CHECK_THROWS_AS(report::load_grid_file("/nonexistent/grid.csv"), ParseError);
}
