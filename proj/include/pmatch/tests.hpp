#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

// Hypothesis tests for the partially matched pre/post design: a fraction of
// subjects answers both waves (matched pairs), the rest answer exactly one.
// The headline procedure is the quantile-based t test, which shrinks the
// matched-pairs correlation toward zero by a Fisher-z quantile before
// plugging it into the correlated-samples statistic.

namespace pmatch::tests {

enum class Method {
    TwoSample,          // ignores matching entirely
    MatchedPaired,      // discards unmatched observations
    QuantileT,          // correlated t with the quantile-shrunk correlation
    PearsonT,           // correlated t with the raw Pearson correlation
    CorrelatedKnownRho, // correlated t with an externally supplied rho
};

std::string_view to_string(Method m);
std::optional<Method> method_from_string(std::string_view name);

// One partially matched dataset.  The two unmatched arms must be the same
// size: the design assumes every subject was solicited in both waves.
struct PartiallyMatchedDataset {
    std::vector<std::pair<double, double>> matched; // (pre, post)
    std::vector<double> unmatched_pre;
    std::vector<double> unmatched_post;

    std::size_t matched_count() const { return matched.size(); }
    // Observations per arm (matched + unmatched).
    std::size_t per_arm_count() const { return matched.size() + unmatched_pre.size(); }

    std::vector<double> all_pre() const;
    std::vector<double> all_post() const;

    // Enforces the shape invariants: equal arm sizes, at least two
    // observations per arm, all values finite.
    void validate() const;
};

struct SummaryStats {
    double mean_pre = 0.0;
    double mean_post = 0.0;
    double var_pre = 0.0;  // sample variance, n-1 denominator
    double var_post = 0.0;
    std::size_t n = 0;     // per-arm count
};

SummaryStats summarize(const PartiallyMatchedDataset& ds);

// Pearson correlation of matched pairs; throws InsufficientData for fewer
// than two pairs and DegenerateData when either margin has zero variance.
double pearson_cor(std::span<const std::pair<double, double>> pairs);

struct CorrelationEstimate {
    double r = 0.0;     // sample Pearson correlation
    double q = 0.0;     // quantile level used for shrinkage
    double z = 0.0;     // Fisher z transform of r
    double se_z = 0.0;  // 1 / sqrt(m - 3)
    double r_q = 0.0;   // shrunk correlation fed to the test
    std::size_t m = 0;  // matched pair count
};

// Lower Fisher-z confidence quantile of the matched-pairs correlation:
// r_q = tanh(atanh(r) - z_{1-q} / sqrt(m - 3)).  q = 0.5 reproduces r.
// Requires m >= 4 (throws InsufficientMatchedSamples) and |r| < 1
// (throws DegenerateCorrelation); q must lie in (0, 1).
CorrelationEstimate quantile_cor(std::span<const std::pair<double, double>> pairs, double q);

enum class Tail {
    two_sided,
    greater, // H1: mean(pre) > mean(post)
    less,    // H1: mean(pre) < mean(post)
};

struct TestResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 0.0;
    Method method = Method::TwoSample;
    // Correlation plugged into the variance, when the method uses one.
    std::optional<double> rho_used;
};

// Correlated-samples t test with a known correlation rho in (-1, 1):
//   T = (mean_pre - mean_post) / sqrt(((var_pre + var_post) / n) (1 - rho)),
// with df = 2n - 2.  rho = 0 reduces it to the classic two-sample statistic.
TestResult correlated_t(const PartiallyMatchedDataset& ds, double rho,
                        Tail tail = Tail::two_sided);

// correlated_t with rho = 0; ignores the matching structure.
TestResult two_sample_t(const PartiallyMatchedDataset& ds, Tail tail = Tail::two_sided);

// Classic paired t test on the given pairs (unmatched data ignored).
TestResult paired_t(std::span<const std::pair<double, double>> pairs,
                    Tail tail = Tail::two_sided);

// Quantile-based t test: correlated_t with rho = quantile_cor(matched, q).r_q.
TestResult quantile_t(const PartiallyMatchedDataset& ds, double q,
                      Tail tail = Tail::two_sided);

// Plug-in test using the raw Pearson correlation of the matched pairs
// (requires at least three pairs).  Anti-conservative for small m; kept
// as the natural naive competitor.
TestResult pearson_t(const PartiallyMatchedDataset& ds, Tail tail = Tail::two_sided);

} // namespace pmatch::tests
