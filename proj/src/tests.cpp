#include "pmatch/tests.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmatch/errors.hpp"
#include "pmatch/stat_core.hpp"

namespace pmatch::tests {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::TwoSample: return "two_sample";
        case Method::MatchedPaired: return "paired";
        case Method::QuantileT: return "quantile";
        case Method::PearsonT: return "pearson";
        case Method::CorrelatedKnownRho: return "correlated";
    }
    return "unknown";
}

std::optional<Method> method_from_string(std::string_view name) {
    if (name == "two_sample") return Method::TwoSample;
    if (name == "paired") return Method::MatchedPaired;
    if (name == "quantile") return Method::QuantileT;
    if (name == "pearson") return Method::PearsonT;
    if (name == "correlated") return Method::CorrelatedKnownRho;
    return std::nullopt;
}

std::vector<double> PartiallyMatchedDataset::all_pre() const {
    std::vector<double> out;
    out.reserve(per_arm_count());
    for (const auto& [pre, post] : matched) out.push_back(pre);
    out.insert(out.end(), unmatched_pre.begin(), unmatched_pre.end());
    return out;
}

std::vector<double> PartiallyMatchedDataset::all_post() const {
    std::vector<double> out;
    out.reserve(matched.size() + unmatched_post.size());
    for (const auto& [pre, post] : matched) out.push_back(post);
    out.insert(out.end(), unmatched_post.begin(), unmatched_post.end());
    return out;
}

void PartiallyMatchedDataset::validate() const {
    if (unmatched_pre.size() != unmatched_post.size())
        throw UnequalArms("dataset: unmatched pre and post arms differ in size ("
                          + std::to_string(unmatched_pre.size()) + " vs "
                          + std::to_string(unmatched_post.size()) + ")");
    if (per_arm_count() < 2)
        throw InsufficientData("dataset: need at least two observations per arm");

    auto check_finite = [](double v) {
        if (!std::isfinite(v))
            throw std::domain_error("dataset: values must be finite");
    };
    for (const auto& [pre, post] : matched) {
        check_finite(pre);
        check_finite(post);
    }
    for (double v : unmatched_pre) check_finite(v);
    for (double v : unmatched_post) check_finite(v);
}

namespace {

struct MeanVar {
    double mean;
    double var;
};

// Two-pass sample mean/variance (n-1 denominator).
MeanVar mean_var(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        ss += d * d;
    }
    return {mean, ss / static_cast<double>(n - 1)};
}

double p_from_statistic(double stat, double df, Tail tail) {
    switch (tail) {
        case Tail::two_sided:
            return 2.0 * (1.0 - stat_core::t_cdf(std::fabs(stat), df));
        case Tail::greater:
            return 1.0 - stat_core::t_cdf(stat, df);
        case Tail::less:
            return stat_core::t_cdf(stat, df);
    }
    throw std::domain_error("p_from_statistic: bad tail");
}

} // namespace

SummaryStats summarize(const PartiallyMatchedDataset& ds) {
    ds.validate();
    const auto pre = mean_var(ds.all_pre());
    const auto post = mean_var(ds.all_post());
    return {pre.mean, post.mean, pre.var, post.var, ds.per_arm_count()};
}

double pearson_cor(std::span<const std::pair<double, double>> pairs) {
    const std::size_t m = pairs.size();
    if (m < 2) throw InsufficientData("pearson_cor: need at least two pairs");

    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pairs) {
        sx += x;
        sy += y;
    }
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pairs) {
        const double dx = x - mx;
        const double dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0))
        throw DegenerateData("pearson_cor: a margin has zero variance");

    // Clamp the last-ulp spill that exactly collinear data can produce.
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationEstimate quantile_cor(std::span<const std::pair<double, double>> pairs, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("quantile_cor: q must lie in (0, 1)");
    const std::size_t m = pairs.size();
    if (m < 4)
        throw InsufficientMatchedSamples("quantile_cor: need at least four matched pairs, have "
                                         + std::to_string(m));

    CorrelationEstimate est;
    est.m = m;
    est.q = q;
    est.r = pearson_cor(pairs);
    if (std::fabs(est.r) >= 1.0)
        throw DegenerateCorrelation("quantile_cor: matched pairs are perfectly correlated");

    est.z = std::atanh(est.r);
    est.se_z = 1.0 / std::sqrt(static_cast<double>(m) - 3.0);
    // q = 0.5 makes the normal quantile exactly zero, so r_q == r there
    // up to the roundoff of tanh(atanh(r)).
    est.r_q = std::tanh(est.z - stat_core::normal_quantile(1.0 - q) * est.se_z);
    return est;
}

TestResult correlated_t(const PartiallyMatchedDataset& ds, double rho, Tail tail) {
    if (!(rho > -1.0 && rho < 1.0))
        throw std::domain_error("correlated_t: rho must lie in (-1, 1)");

    const SummaryStats s = summarize(ds);
    const double pooled = (s.var_pre + s.var_post) / static_cast<double>(s.n);
    if (!(pooled > 0.0))
        throw DegenerateData("correlated_t: both arms have zero variance");

    TestResult res;
    res.method = Method::CorrelatedKnownRho;
    res.rho_used = rho;
    res.df = 2.0 * static_cast<double>(s.n) - 2.0;
    res.statistic = (s.mean_pre - s.mean_post) / std::sqrt(pooled * (1.0 - rho));
    res.p_value = p_from_statistic(res.statistic, res.df, tail);
    return res;
}

TestResult two_sample_t(const PartiallyMatchedDataset& ds, Tail tail) {
    TestResult res = correlated_t(ds, 0.0, tail);
    res.method = Method::TwoSample;
    res.rho_used.reset();
    return res;
}

TestResult paired_t(std::span<const std::pair<double, double>> pairs, Tail tail) {
    const std::size_t m = pairs.size();
    if (m < 2) throw InsufficientMatchedSamples("paired_t: need at least two pairs");

    std::vector<double> diffs;
    diffs.reserve(m);
    for (const auto& [x, y] : pairs) diffs.push_back(x - y);
    const auto dv = mean_var(diffs);
    if (!(dv.var > 0.0))
        throw DegenerateData("paired_t: differences have zero variance");

    TestResult res;
    res.method = Method::MatchedPaired;
    res.df = static_cast<double>(m) - 1.0;
    res.statistic = dv.mean / std::sqrt(dv.var / static_cast<double>(m));
    res.p_value = p_from_statistic(res.statistic, res.df, tail);
    return res;
}

TestResult quantile_t(const PartiallyMatchedDataset& ds, double q, Tail tail) {
    ds.validate();
    const CorrelationEstimate est = quantile_cor(ds.matched, q);
    TestResult res = correlated_t(ds, est.r_q, tail);
    res.method = Method::QuantileT;
    return res;
}

TestResult pearson_t(const PartiallyMatchedDataset& ds, Tail tail) {
    ds.validate();
    if (ds.matched.size() < 3)
        throw InsufficientMatchedSamples("pearson_t: need at least three matched pairs, have "
                                         + std::to_string(ds.matched.size()));
    const double r = pearson_cor(ds.matched);
    if (std::fabs(r) >= 1.0)
        throw DegenerateCorrelation("pearson_t: matched pairs are perfectly correlated");

    TestResult res = correlated_t(ds, r, tail);
    res.method = Method::PearsonT;
    return res;
}

} // namespace pmatch::tests
