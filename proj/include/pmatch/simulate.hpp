#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pmatch/rng.hpp"
#include "pmatch/tests.hpp"

// Monte Carlo machinery: dataset sampling, rejection-rate estimation,
// alpha-targeted calibration of the shrinkage quantile, and the summary
// tables/curves built on top of it.
//
// Reproducibility contract: run i of a simulation draws everything it
// needs from PhiloxStream(seed, i).  Results are therefore independent
// of the worker count, and any routine given the same seed regenerates
// the same datasets run for run (so competing methods are always scored
// on identical data).

namespace pmatch::simulate {

// Candidate shrinkage quantiles searched during calibration.
inline constexpr std::array<double, 8> kQuantileGrid = {0.15, 0.20, 0.25, 0.30,
                                                        0.35, 0.40, 0.45, 0.50};

struct BivariateParams {
    double mu_pre = 0.0;
    double mu_post = 0.0;
    double sigma_pre = 1.0;
    double sigma_post = 1.0;
    double rho = 0.0;

    void validate() const;
};

// Correlation specification for a simulation: a fixed value or a
// uniform draw per run.
struct RhoSpec {
    double lo = 0.0;
    double hi = 0.0;

    static RhoSpec fixed(double rho) { return {rho, rho}; }
    static RhoSpec uniform(double lo, double hi) { return {lo, hi}; }

    bool is_fixed() const { return lo == hi; }
    void validate() const;
    // Fixed specs return lo without consuming from the stream.
    double draw(PhiloxStream& rng) const;
};

struct SimulationConfig {
    int n = 50;                // subjects per arm
    double prop_matched = 0.5; // matched fraction; matched count is floor(prop*n)
    RhoSpec rho = RhoSpec::uniform(0.1, 0.9);
    double delta = 0.0;        // pre-arm mean shift (post mean is 0, unit variances)
    std::int64_t n_runs = 10000;
    std::uint64_t seed = 0;
    double alpha = 0.05;

    void validate() const;
};

struct SimulationSummary {
    double rejection_rate = 0.0;
    double mc_se = 0.0;              // sqrt(rate*(1-rate)/n_effective)
    std::int64_t n_effective = 0;    // runs that produced an estimate
    tests::Method method = tests::Method::TwoSample;
};

// Matched-pair count for a design: floor(prop * n), with a 1e-9 guard
// against products landing one ulp under an integer.
int matched_count(int n, double prop);

// n correlated (pre, post) pairs from the bivariate normal.
std::vector<std::pair<double, double>> sample_pairs(const BivariateParams& params, int n,
                                                    PhiloxStream& rng);

// Splits pairs into the partially matched design: the first
// matched_count(n, prop) pairs keep their links, the rest contribute
// one unmatched observation to each arm.
tests::PartiallyMatchedDataset split_dataset(std::span<const std::pair<double, double>> pairs,
                                             double prop_matched);

// sample_pairs + split_dataset in one step.
tests::PartiallyMatchedDataset sample_dataset(const BivariateParams& params, int n,
                                              double prop_matched, PhiloxStream& rng);

// Monte Carlo rejection rate of one method under cfg.  q names the
// shrinkage quantile and is required iff method == QuantileT.  Runs on
// which the method throws a pmatch::Error are excluded and n_effective
// reduced accordingly; if no run is estimable, throws EmptyResult.
// threads <= 0 means use the hardware count.
SimulationSummary run_simulation(const SimulationConfig& cfg, tests::Method method,
                                 std::optional<double> q = std::nullopt, int threads = 0);

// Calibration for one design point: simulates the null at fixed rho,
// scores every grid quantile on the same datasets, and returns the one
// whose rejection rate lands closest to alpha (ties break toward the
// smaller, more conservative quantile).  Returns nullopt when the
// design has fewer than four matched pairs, where the estimator is not
// calculable.
std::optional<double> alpha_target_search(int n, double prop_matched, double rho, double alpha,
                                          std::int64_t n_runs, std::uint64_t seed,
                                          int threads = 0);

// Calibrated quantiles over a design grid.  A row with rho == nullopt
// holds the conservative choice for its design: the minimum calibrated
// q across that design's correlation values.  q == nullopt marks a
// not-calculable cell.
struct QuantileGrid {
    struct Entry {
        int n = 0;
        double prop = 0.0;
        std::optional<double> rho; // nullopt: conservative row
        std::optional<double> q;   // nullopt: not calculable
    };
    std::vector<Entry> entries;

    bool has_design(int n, double prop) const;
    // Exact-row lookups; outer nullopt means "no such row".
    std::optional<std::optional<double>> q_at(int n, double prop, double rho) const;
    std::optional<std::optional<double>> conservative_at(int n, double prop) const;
    // Lookup for observed data: the minimum calculable conservative q
    // over the stored designs bracketing (n, prop) on each axis.  Throws
    // MissingGridEntry when no bracketing design has a calculable value.
    double conservative_for(int n, double prop) const;
};

// alpha_target_search over the cross product of designs, plus the
// conservative row per (n, prop).
QuantileGrid calibrate_grid(std::span<const int> ns, std::span<const double> props,
                            std::span<const double> rhos, double alpha, std::int64_t n_runs,
                            std::uint64_t seed, int threads = 0);

// Head-to-head rejection rates with per-run rho ~ U(rho_lo, rho_hi).
// All methods and matched proportions are scored on the same datasets,
// so methods that ignore the matching produce identical rows across
// proportions by construction.
struct ComparisonConfig {
    std::vector<int> ns;
    std::vector<double> props;
    std::vector<double> deltas;
    double rho_lo = 0.1;
    double rho_hi = 0.9;
    double alpha = 0.05;
    std::int64_t n_runs = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ComparisonCell {
    int n = 0;
    double prop = 0.0;
    double delta = 0.0;
    tests::Method method = tests::Method::TwoSample;
    std::optional<double> q_used;              // quantile rows only
    std::optional<SimulationSummary> summary;  // nullopt: not calculable for this design
};

// Requires an exact conservative grid row for every design with at
// least four matched pairs (throws MissingGridEntry otherwise).
// Designs below a method's minimum pair count get marker cells.
std::vector<ComparisonCell> run_comparison(const ComparisonConfig& cfg, const QuantileGrid& grid,
                                           int threads = 0);

// Smoothed Type-I error versus true correlation: simulates the null
// with per-run rho ~ U(0.1, 0.9), fits a logistic regression of the
// rejection indicator on rho, and evaluates it on rho = 0.10..0.90 in
// steps of 0.01.  Logistic-fit failures propagate.
struct CurvePoint {
    double rho = 0.0;
    double expected_rejection = 0.0;
};

std::vector<CurvePoint> error_curve(int n, double prop, tests::Method method,
                                    const QuantileGrid& grid, double alpha, std::int64_t n_runs,
                                    std::uint64_t seed, int threads = 0);

// Cost-of-unmatching curves: how much power the paired test loses as
// the matched fraction shrinks, against the oracle that pairs every
// subject and the two-sample test that pairs none.  Both comparators
// ignore the proportion, so their rows repeat across props.
enum class GapArm {
    Oracle,    // paired t on all n true pairs
    Paired,    // paired t on the matched subset
    TwoSample, // two-sample t on the pooled arms
};

std::string_view to_string(GapArm arm);

struct PowerGapConfig {
    int n = 75;
    double rho = 0.65;
    double delta = 0.25; // shift used for the power rows; 0 rows are always included
    std::vector<double> props = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    double alpha = 0.05;
    std::int64_t n_runs = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PowerGapRow {
    double prop = 0.0;
    GapArm arm = GapArm::Oracle;
    double delta = 0.0;
    std::optional<SimulationSummary> summary; // nullopt: not calculable (e.g. m < 2)
};

std::vector<PowerGapRow> power_gap_curve(const PowerGapConfig& cfg, int threads = 0);

} // namespace pmatch::simulate
