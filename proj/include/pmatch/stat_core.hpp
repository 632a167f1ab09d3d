#pragma once

#include <span>

// Scalar statistical kernels: distribution functions and a one-covariate
// logistic regression.  Everything here is deterministic, allocation-free,
// and safe to call concurrently.

namespace pmatch::stat_core {

// Regularized incomplete beta function I_x(a, b), evaluated with Lentz's
// continued fraction.  Requires a > 0, b > 0, x in [0, 1]; accurate to
// ~1e-14 relative over the parameter ranges used by t_cdf.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with df > 0 degrees of freedom.
// Throws std::domain_error for df <= 0 or non-finite arguments.
double t_cdf(double x, double df);

// Standard normal CDF, via erfc in the tail-stable form.
double normal_cdf(double x);

// Standard normal quantile for p in (0, 1).  Rational initial guess
// refined by one Newton step against normal_cdf; absolute error is
// far below 1e-9 across the open interval.
// Throws std::domain_error when p is outside (0, 1).
double normal_quantile(double p);

// Inverse of the logistic link.
double logistic(double eta);

struct LogisticFit {
    double intercept = 0.0;
    double slope = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Maximum-likelihood logistic regression of binary ys on a single
// covariate, fit by Newton / IRLS with a 1e-10 ridge on the Hessian
// diagonal.  Stops when both the gradient and the step are below 1e-8
// in infinity norm; throws pmatch::NonConvergence after 100 iterations
// (perfect separation is the usual culprit) and pmatch::DegenerateData
// when ys are all equal or xs carry fewer than two distinct values.
LogisticFit fit_logistic_1d(std::span<const double> xs, std::span<const int> ys);

// Fitted success probability at covariate value x.
double predict(const LogisticFit& fit, double x);

// Bernoulli log-likelihood of (xs, ys) under the given coefficients.
double log_likelihood(double intercept, double slope,
                      std::span<const double> xs, std::span<const int> ys);

} // namespace pmatch::stat_core
