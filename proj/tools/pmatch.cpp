// pmatch: tests for mean change in partially matched pre/post surveys,
// plus the Monte Carlo tooling that calibrates and benchmarks them.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmatch/data.hpp"
#include "pmatch/errors.hpp"
#include "pmatch/format.hpp"
#include "pmatch/report.hpp"
#include "pmatch/simulate.hpp"
#include "pmatch/tests.hpp"

namespace {

using namespace pmatch;

struct CommonOpts {
    std::uint64_t seed = 2;
    std::int64_t runs = 10000;
    double alpha = 0.05;
    std::string format = "text";
    int threads = 0;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& c, bool with_sim_flags = true) {
    if (with_sim_flags) {
        cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
        cmd->add_option("--runs", c.runs, "Monte Carlo runs")->capture_default_str();
        cmd->add_option("--alpha", c.alpha, "nominal level")->capture_default_str();
        cmd->add_option("--threads", c.threads, "worker threads (0 = hardware count)")
            ->capture_default_str();
    }
    cmd->add_option("--format", c.format, "output format")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "csv", "json"}));
    cmd->add_option("--out", c.out, "write output to this path instead of stdout");
}

report::Format parse_format(const std::string& name) {
    const auto f = report::format_from_string(name);
    if (!f) throw std::domain_error("unknown format '" + name + "'");
    return *f;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw Error("cannot write '" + out_path + "'");
    f << text;
}

// ---- test -----------------------------------------------------------------

struct TestOpts {
    CommonOpts common;
    std::string input;
    std::string method = "quantile";
    std::string tail = "two_sided";
    std::optional<double> q;
    std::optional<double> rho;
    std::string grid_path;
    data::ParseOptions parse;
};

tests::Tail parse_tail(const std::string& name) {
    if (name == "two_sided") return tests::Tail::two_sided;
    if (name == "greater") return tests::Tail::greater;
    if (name == "less") return tests::Tail::less;
    throw std::domain_error("unknown tail '" + name + "'");
}

void run_test(const TestOpts& opt) {
    const auto method = tests::method_from_string(opt.method);
    if (!method) throw std::domain_error("unknown method '" + opt.method + "'");
    const auto tail = parse_tail(opt.tail);

    const auto records = data::parse_csv_file(opt.input, opt.parse);
    const auto built = data::build_dataset(records);
    const auto& ds = built.dataset;

    std::optional<double> q_used;
    tests::TestResult res;
    switch (*method) {
        case tests::Method::TwoSample:
            res = tests::two_sample_t(ds, tail);
            break;
        case tests::Method::MatchedPaired:
            if (ds.matched.size() < 2)
                throw InsufficientMatchedSamples("paired test needs at least two matched pairs");
            res = tests::paired_t(ds.matched, tail);
            break;
        case tests::Method::QuantileT: {
            if (opt.q) {
                q_used = *opt.q;
            } else {
                if (opt.grid_path.empty())
                    throw std::domain_error(
                        "quantile method needs --q or a calibration grid (--grid)");
                const auto grid = report::load_grid_file(opt.grid_path);
                q_used = grid.conservative_for(static_cast<int>(ds.per_arm_count()),
                                               static_cast<double>(ds.matched.size())
                                                   / static_cast<double>(ds.per_arm_count()));
            }
            res = tests::quantile_t(ds, *q_used, tail);
            break;
        }
        case tests::Method::PearsonT:
            res = tests::pearson_t(ds, tail);
            break;
        case tests::Method::CorrelatedKnownRho:
            if (!opt.rho)
                throw std::domain_error("--rho is required with --method correlated");
            res = tests::correlated_t(ds, *opt.rho, tail);
            break;
    }

    report::Document doc;
    doc.add("method", report::Cell::str(std::string(tests::to_string(res.method))));
    doc.add("n", report::Cell::count(static_cast<std::int64_t>(ds.per_arm_count())));
    doc.add("m_matched", report::Cell::count(static_cast<std::int64_t>(built.report.m_matched)));
    doc.add("n_pre", report::Cell::count(static_cast<std::int64_t>(built.report.n_pre)));
    doc.add("n_post", report::Cell::count(static_cast<std::int64_t>(built.report.n_post)));
    doc.add("n_dropped_duplicates",
            report::Cell::count(static_cast<std::int64_t>(built.report.n_dropped_duplicates)));
    doc.add("n_blank_ids",
            report::Cell::count(static_cast<std::int64_t>(built.report.n_blank_ids)));
    doc.add("tail", report::Cell::str(opt.tail));
    doc.add("q_used", report::Cell::num(q_used));
    doc.add("rho_used", report::Cell::num(res.rho_used));
    doc.add("statistic", report::Cell::num(res.statistic));
    doc.add("df", report::Cell::num(res.df));
    doc.add("p_value", report::Cell::num(res.p_value));
    emit(report::render(doc, parse_format(opt.common.format)), opt.common.out);
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateOpts {
    CommonOpts common;
    std::vector<int> ns = {20, 50, 100, 200};
    std::vector<double> props = {0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> rhos = {0.1, 0.25, 0.5, 0.9};
};

void run_calibrate(const CalibrateOpts& opt) {
    const auto grid = simulate::calibrate_grid(opt.ns, opt.props, opt.rhos, opt.common.alpha,
                                               opt.common.runs, opt.common.seed,
                                               opt.common.threads);
    std::ostringstream out;
    report::save_grid(out, grid, parse_format(opt.common.format));
    emit(out.str(), opt.common.out);
}

// ---- table2 ---------------------------------------------------------------

struct TableOpts {
    CommonOpts common;
    std::string grid_path;
    std::vector<int> ns = {20, 50, 100, 200};
    std::vector<double> props = {0.1, 0.5, 0.9};
    std::vector<double> deltas = {0.0, 0.25, 0.5};
};

void run_table(const TableOpts& opt) {
    const auto grid = report::load_grid_file(opt.grid_path);
    simulate::ComparisonConfig cfg;
    cfg.ns = opt.ns;
    cfg.props = opt.props;
    cfg.deltas = opt.deltas;
    cfg.alpha = opt.common.alpha;
    cfg.n_runs = opt.common.runs;
    cfg.seed = opt.common.seed;
    const auto cells = simulate::run_comparison(cfg, grid, opt.common.threads);

    report::ResultTable table;
    table.columns = {"n",     "prop", "delta",          "method",
                     "rejection_rate", "mc_se", "n_effective", "q_star"};
    for (const auto& c : cells) {
        std::vector<report::Cell> row;
        row.push_back(report::Cell::count(c.n));
        row.push_back(report::Cell::num(c.prop));
        row.push_back(report::Cell::num(c.delta));
        row.push_back(report::Cell::str(std::string(tests::to_string(c.method))));
        if (c.summary) {
            row.push_back(report::Cell::num(c.summary->rejection_rate));
            row.push_back(report::Cell::num(c.summary->mc_se));
            row.push_back(report::Cell::count(c.summary->n_effective));
        } else {
            row.push_back(report::Cell::na());
            row.push_back(report::Cell::na());
            row.push_back(report::Cell::na());
        }
        row.push_back(report::Cell::num(c.q_used));
        table.add_row(std::move(row));
    }
    emit(report::render(table, parse_format(opt.common.format)), opt.common.out);
}

// ---- curve ----------------------------------------------------------------

struct CurveOpts {
    CommonOpts common;
    std::string grid_path;
    int n = 50;
    double prop = 0.1;
};

void run_curve(const CurveOpts& opt) {
    const auto grid = report::load_grid_file(opt.grid_path);

    report::ResultTable table;
    table.columns = {"method", "rho", "expected_rejection"};
    for (const auto method : {tests::Method::QuantileT, tests::Method::PearsonT,
                              tests::Method::TwoSample}) {
        const auto curve =
            simulate::error_curve(opt.n, opt.prop, method, grid, opt.common.alpha,
                                  opt.common.runs, opt.common.seed, opt.common.threads);
        for (const auto& pt : curve)
            table.add_row({report::Cell::str(std::string(tests::to_string(method))),
                           report::Cell::num(pt.rho), report::Cell::num(pt.expected_rejection)});
    }
    emit(report::render(table, parse_format(opt.common.format)), opt.common.out);
}

// ---- powergap ---------------------------------------------------------------

struct PowerGapOpts {
    CommonOpts common;
    simulate::PowerGapConfig cfg;
};

void run_powergap(PowerGapOpts& opt) {
    opt.cfg.alpha = opt.common.alpha;
    opt.cfg.n_runs = opt.common.runs;
    opt.cfg.seed = opt.common.seed;
    const auto rows = simulate::power_gap_curve(opt.cfg, opt.common.threads);

    report::ResultTable table;
    table.columns = {"prop", "method", "delta", "rejection_rate", "mc_se", "n_effective"};
    for (const auto& r : rows) {
        std::vector<report::Cell> row;
        row.push_back(report::Cell::num(r.prop));
        row.push_back(report::Cell::str(std::string(simulate::to_string(r.arm))));
        row.push_back(report::Cell::num(r.delta));
        if (r.summary) {
            row.push_back(report::Cell::num(r.summary->rejection_rate));
            row.push_back(report::Cell::num(r.summary->mc_se));
            row.push_back(report::Cell::count(r.summary->n_effective));
        } else {
            row.push_back(report::Cell::na());
            row.push_back(report::Cell::na());
            row.push_back(report::Cell::na());
        }
        table.add_row(std::move(row));
    }
    emit(report::render(table, parse_format(opt.common.format)), opt.common.out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-change tests for partially matched pre/post samples"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "pmatch 1.0.0");

    TestOpts test_opts;
    auto* cmd_test = app.add_subcommand("test", "run one test on a survey CSV");
    cmd_test->add_option("input", test_opts.input, "survey CSV (id,phase,value)")
        ->required();
    cmd_test->add_option("--method", test_opts.method,
                         "two_sample|paired|quantile|pearson|correlated")
        ->capture_default_str();
    cmd_test->add_option("--tail", test_opts.tail, "two_sided|greater|less")
        ->capture_default_str()
        ->check(CLI::IsMember({"two_sided", "greater", "less"}));
    cmd_test->add_option("--q", test_opts.q, "shrinkage quantile (skips grid lookup)");
    cmd_test->add_option("--rho", test_opts.rho, "known correlation for --method correlated");
    cmd_test->add_option("--grid", test_opts.grid_path, "calibration grid (csv or json)");
    cmd_test->add_option("--id-col", test_opts.parse.id_column, "id column name")
        ->capture_default_str();
    cmd_test->add_option("--phase-col", test_opts.parse.phase_column, "phase column name")
        ->capture_default_str();
    cmd_test->add_option("--value-col", test_opts.parse.value_column, "value column name")
        ->capture_default_str();
    cmd_test->add_flag_callback(
        "--keep-id-case", [&test_opts] { test_opts.parse.fold_id_case = false; },
        "match ids case-sensitively");
    add_common(cmd_test, test_opts.common, /*with_sim_flags=*/false);
    cmd_test->callback([&test_opts] { run_test(test_opts); });

    CalibrateOpts cal_opts;
    auto* cmd_cal = app.add_subcommand("calibrate",
                                       "alpha-targeted quantile grid over a design lattice");
    cmd_cal->add_option("--ns", cal_opts.ns, "per-arm sample sizes")
        ->delimiter(',')
        ->capture_default_str();
    cmd_cal->add_option("--props", cal_opts.props, "matched proportions")
        ->delimiter(',')
        ->capture_default_str();
    cmd_cal->add_option("--rhos", cal_opts.rhos, "correlations calibrated per design")
        ->delimiter(',')
        ->capture_default_str();
    add_common(cmd_cal, cal_opts.common);
    cmd_cal->callback([&cal_opts] { run_calibrate(cal_opts); });

    TableOpts table_opts;
    auto* cmd_table = app.add_subcommand("table2",
                                         "method comparison under random correlation");
    cmd_table->add_option("--grid", table_opts.grid_path, "calibration grid file")->required();
    cmd_table->add_option("--ns", table_opts.ns, "per-arm sample sizes")
        ->delimiter(',')
        ->capture_default_str();
    cmd_table->add_option("--props", table_opts.props, "matched proportions")
        ->delimiter(',')
        ->capture_default_str();
    cmd_table->add_option("--deltas", table_opts.deltas, "mean shifts")
        ->delimiter(',')
        ->capture_default_str();
    add_common(cmd_table, table_opts.common);
    cmd_table->callback([&table_opts] { run_table(table_opts); });

    CurveOpts curve_opts;
    auto* cmd_curve = app.add_subcommand("curve",
                                         "smoothed Type-I error versus true correlation");
    cmd_curve->add_option("--grid", curve_opts.grid_path, "calibration grid file")->required();
    cmd_curve->add_option("--n", curve_opts.n, "per-arm sample size")->capture_default_str();
    cmd_curve->add_option("--prop", curve_opts.prop, "matched proportion")->capture_default_str();
    add_common(cmd_curve, curve_opts.common);
    cmd_curve->callback([&curve_opts] { run_curve(curve_opts); });

    PowerGapOpts gap_opts;
    auto* cmd_gap = app.add_subcommand("powergap",
                                       "paired-test power versus the oracle and the two-sample "
                                       "test as the matched share varies");
    cmd_gap->add_option("--n", gap_opts.cfg.n, "per-arm sample size")->capture_default_str();
    cmd_gap->add_option("--rho", gap_opts.cfg.rho, "true correlation")->capture_default_str();
    cmd_gap->add_option("--delta", gap_opts.cfg.delta, "mean shift for the power rows")
        ->capture_default_str();
    cmd_gap->add_option("--props", gap_opts.cfg.props, "matched proportions")
        ->delimiter(',')
        ->capture_default_str();
    add_common(cmd_gap, gap_opts.common);
    cmd_gap->callback([&gap_opts] { run_powergap(gap_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const pmatch::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
