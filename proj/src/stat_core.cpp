#include "pmatch/stat_core.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "pmatch/errors.hpp"

namespace pmatch::stat_core {

namespace {

// Continued fraction for I_x(a,b) by the modified Lentz algorithm.
// Converges quickly when x < (a+1)/(a+b+2); the caller flips to the
// symmetric expansion otherwise.
double incomplete_beta_cf(double a, double b, double x) {
    constexpr int max_iter = 10000;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;

        double num = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;

        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;

        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw DegenerateData("incomplete beta: continued fraction did not converge");
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("regularized_incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("regularized_incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    // x^a (1-x)^b / B(a,b), computed in log space to dodge overflow.
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
                          + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);

    if (x < (a + 1.0) / (a + b + 2.0))
        return front * incomplete_beta_cf(a, b, x) / a;
    return 1.0 - front * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

double t_cdf(double x, double df) {
    if (!(df > 0.0) || !std::isfinite(df))
        throw std::domain_error("t_cdf: degrees of freedom must be positive and finite");
    if (std::isnan(x))
        throw std::domain_error("t_cdf: x must not be NaN");
    if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
    if (x == 0.0) return 0.5;

    // P(|T| >= |x|) = I_{df/(df+x^2)}(df/2, 1/2); split by sign around 1/2.
    const double xt = df / (df + x * x);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, xt);
    return x > 0.0 ? 1.0 - tail : tail;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must lie in the open interval (0, 1)");

    // Rational approximation (Acklam 2003), |relative error| < 1.15e-9.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Newton step against the erfc-based CDF sharpens the tail digits.
    // Skip it when exp(x^2/2) would overflow; the raw approximation is
    // already past double precision's resolving power out there.
    const double half_x2 = 0.5 * x * x;
    if (half_x2 < 700.0) {
        const double err = normal_cdf(x) - p;
        x -= err * std::sqrt(2.0 * M_PI) * std::exp(half_x2);
    }
    return x;
}

double logistic(double eta) {
    // Evaluate from the side that keeps exp() bounded.
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

LogisticFit fit_logistic_1d(std::span<const double> xs, std::span<const int> ys) {
    const std::size_t n = xs.size();
    if (ys.size() != n)
        throw std::domain_error("fit_logistic_1d: xs and ys lengths differ");
    if (n < 2) throw InsufficientData("fit_logistic_1d: need at least two observations");

    std::size_t ones = 0;
    for (int y : ys) {
        if (y != 0 && y != 1)
            throw std::domain_error("fit_logistic_1d: responses must be 0 or 1");
        ones += static_cast<std::size_t>(y);
    }
    if (ones == 0 || ones == n)
        throw DegenerateData("fit_logistic_1d: responses are all equal");

    bool distinct = false;
    for (std::size_t i = 1; i < n && !distinct; ++i) distinct = xs[i] != xs[0];
    if (!distinct)
        throw DegenerateData("fit_logistic_1d: covariate has fewer than two distinct values");

    constexpr int max_iter = 100;
    constexpr double ridge = 1e-10;
    constexpr double tol = 1e-8;

    // Start from the intercept-only MLE.
    const double pbar = static_cast<double>(ones) / static_cast<double>(n);
    LogisticFit fit;
    fit.intercept = std::log(pbar / (1.0 - pbar));
    fit.slope = 0.0;

    for (int iter = 1; iter <= max_iter; ++iter) {
        double g0 = 0.0, g1 = 0.0;          // score
        double sw = 0.0, swx = 0.0, swxx = 0.0; // Fisher information
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = logistic(fit.intercept + fit.slope * xs[i]);
            const double resid = static_cast<double>(ys[i]) - mu;
            const double w = mu * (1.0 - mu);
            g0 += resid;
            g1 += resid * xs[i];
            sw += w;
            swx += w * xs[i];
            swxx += w * xs[i] * xs[i];
        }

        const double h00 = sw + ridge;
        const double h01 = swx;
        const double h11 = swxx + ridge;
        const double det = h00 * h11 - h01 * h01;
        if (!(det > 0.0) || !std::isfinite(det))
            throw NonConvergence("fit_logistic_1d: information matrix collapsed");

        const double step0 = (h11 * g0 - h01 * g1) / det;
        const double step1 = (h00 * g1 - h01 * g0) / det;
        fit.intercept += step0;
        fit.slope += step1;
        fit.iterations = iter;

        const double step_norm = std::max(std::fabs(step0), std::fabs(step1));
        const double grad_norm = std::max(std::fabs(g0), std::fabs(g1));
        if (step_norm < tol && grad_norm < tol) {
            fit.converged = true;
            return fit;
        }
    }
    throw NonConvergence(
        "fit_logistic_1d: no convergence in 100 iterations (perfectly separated data?)");
}

double predict(const LogisticFit& fit, double x) {
    return logistic(fit.intercept + fit.slope * x);
}

double log_likelihood(double intercept, double slope,
                      std::span<const double> xs, std::span<const int> ys) {
    if (xs.size() != ys.size())
        throw std::domain_error("log_likelihood: xs and ys lengths differ");
    double ll = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double eta = intercept + slope * xs[i];
        // log(1 + e^eta) without overflow, then Bernoulli log-density.
        const double log1pe = eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                                        : std::log1p(std::exp(eta));
        ll += (ys[i] != 0 ? eta : 0.0) - log1pe;
    }
    return ll;
}

} // namespace pmatch::stat_core
