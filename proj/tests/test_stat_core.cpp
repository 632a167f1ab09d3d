#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "pmatch/errors.hpp"
#include "pmatch/rng.hpp"
#include "pmatch/stat_core.hpp"

using namespace pmatch;

TEST_CASE("t_cdf matches frozen reference values") {
    // Reference values computed with 40-digit arithmetic.
    CHECK(stat_core::t_cdf(2.0, 98.0) == doctest::Approx(0.9758661140253162).epsilon(1e-14));
    CHECK(stat_core::t_cdf(0.0, 5.0) == 0.5);
    // df = 1 is the Cauchy distribution: F(1) = 3/4 exactly.
    CHECK(stat_core::t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(stat_core::t_cdf(-2.0, 98.0)
          == doctest::Approx(1.0 - 0.9758661140253162).epsilon(1e-12));
}

TEST_CASE("t_cdf agrees with the quadrature oracle") {
    simulate::PhiloxStream rng(7, 0);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.next_uniform(-8.0, 8.0);
        const double df = rng.next_uniform(1.0, 998.0);
        CHECK(std::fabs(stat_core::t_cdf(x, df) - oracles::t_cdf(x, df)) <= 1e-10);
    }
}

TEST_CASE("t_cdf symmetry and monotonicity") {
    simulate::PhiloxStream rng(11, 0);
    double prev = stat_core::t_cdf(-6.0, 7.0);
    for (double x = -5.5; x <= 6.0; x += 0.5) {
        const double c = stat_core::t_cdf(x, 7.0);
        CHECK(c > prev);
        CHECK(c + stat_core::t_cdf(-x, 7.0) == doctest::Approx(1.0).epsilon(1e-14));
        prev = c;
    }
    for (int i = 0; i < 50; ++i) {
        const double x = rng.next_uniform(-4.0, 4.0);
        const double df = rng.next_uniform(1.0, 500.0);
        const double c = stat_core::t_cdf(x, df);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
    }
}

TEST_CASE("t_cdf rejects bad arguments") {
    CHECK_THROWS_AS(stat_core::t_cdf(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(stat_core::t_cdf(1.0, -3.0), std::domain_error);
    CHECK_THROWS_AS(stat_core::t_cdf(std::nan(""), 5.0), std::domain_error);
}

TEST_CASE("regularized incomplete beta basics") {
    CHECK(stat_core::regularized_incomplete_beta(0.5, 0.5, 0.5)
          == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(stat_core::regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(stat_core::regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // Complement identity I_x(a,b) = 1 - I_{1-x}(b,a).
    simulate::PhiloxStream rng(13, 0);
    for (int i = 0; i < 100; ++i) {
        const double a = rng.next_uniform(0.1, 50.0);
        const double b = rng.next_uniform(0.1, 50.0);
        const double x = rng.next_double();
        const double lhs = stat_core::regularized_incomplete_beta(a, b, x);
        const double rhs = 1.0 - stat_core::regularized_incomplete_beta(b, a, 1.0 - x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    CHECK_THROWS_AS(stat_core::regularized_incomplete_beta(0.0, 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(stat_core::regularized_incomplete_beta(1.0, 1.0, 1.5), std::domain_error);
}

TEST_CASE("normal_cdf reference points") {
    CHECK(stat_core::normal_cdf(0.0) == 0.5);
    CHECK(stat_core::normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-14));
    CHECK(stat_core::normal_cdf(-1.96) == doctest::Approx(0.0249978951482205).epsilon(1e-12));
}

TEST_CASE("normal_quantile matches frozen reference and bisection oracle") {
    CHECK(stat_core::normal_quantile(0.8) == doctest::Approx(0.8416212335729142).epsilon(1e-12));
    CHECK(std::fabs(stat_core::normal_quantile(0.5)) < 1e-15);
    CHECK(stat_core::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));

    simulate::PhiloxStream rng(17, 0);
    for (int i = 0; i < 200; ++i) {
        const double p = rng.next_uniform(0.001, 0.999);
        CHECK(std::fabs(stat_core::normal_quantile(p) - oracles::normal_quantile(p)) <= 1e-9);
    }
}

TEST_CASE("normal_quantile round-trips through normal_cdf") {
    simulate::PhiloxStream rng(19, 0);
    for (int i = 0; i < 200; ++i) {
        const double p = rng.next_uniform(1e-6, 1.0 - 1e-6);
        CHECK(stat_core::normal_cdf(stat_core::normal_quantile(p))
              == doctest::Approx(p).epsilon(1e-12));
    }
    // Antisymmetry about 1/2.
    for (double p : {0.01, 0.1, 0.3, 0.45}) {
        CHECK(stat_core::normal_quantile(p)
              == doctest::Approx(-stat_core::normal_quantile(1.0 - p)).epsilon(1e-10));
    }
}

TEST_CASE("normal_quantile rejects the closed boundary") {
    CHECK_THROWS_AS(stat_core::normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(stat_core::normal_quantile(1.0), std::domain_error);
    CHECK_THROWS_AS(stat_core::normal_quantile(-0.2), std::domain_error);
}

namespace {

// The dataset used to freeze the logistic fit below.
const std::vector<double> kXs = {0.1, 0.3, 0.5, 0.7, 0.9, 0.2, 0.4, 0.6, 0.8, 1.0};
const std::vector<int> kYs = {0, 0, 1, 0, 1, 0, 0, 1, 1, 1};

} // namespace

TEST_CASE("fit_logistic_1d matches the frozen MLE") {
    const auto fit = stat_core::fit_logistic_1d(kXs, kYs);
    CHECK(fit.converged);
    CHECK(fit.iterations <= 100);
    CHECK(fit.intercept == doctest::Approx(-4.8383717818558365).epsilon(1e-7));
    CHECK(fit.slope == doctest::Approx(8.797039603374248).epsilon(1e-7));
    CHECK(stat_core::log_likelihood(fit.intercept, fit.slope, kXs, kYs)
          == doctest::Approx(-3.565628951195371).epsilon(1e-10));
}

TEST_CASE("fit_logistic_1d attains the hill-climb oracle's likelihood") {
    double b0 = 0.0, b1 = 0.0;
    oracles::logistic_climb(kXs, kYs, b0, b1);
    const auto fit = stat_core::fit_logistic_1d(kXs, kYs);
    const double ours = stat_core::log_likelihood(fit.intercept, fit.slope, kXs, kYs);
    const double climbed = oracles::logistic_ll(b0, b1, kXs, kYs);
    CHECK(ours >= climbed - 1e-9);
}

TEST_CASE("fit_logistic_1d sits at a local maximum") {
    const auto fit = stat_core::fit_logistic_1d(kXs, kYs);
    const double at_fit = stat_core::log_likelihood(fit.intercept, fit.slope, kXs, kYs);
    for (double d0 : {-0.01, 0.0, 0.01}) {
        for (double d1 : {-0.01, 0.0, 0.01}) {
            if (d0 == 0.0 && d1 == 0.0) continue;
            CHECK(at_fit >= stat_core::log_likelihood(fit.intercept + d0, fit.slope + d1, kXs,
                                                      kYs));
        }
    }
}

TEST_CASE("fit_logistic_1d recovers a flat null within 3 SE") {
    // ys ~ Bernoulli(1/2) independent of xs; slope and intercept should
    // land within three standard errors of zero.
    simulate::PhiloxStream rng(23, 0);
    std::vector<double> xs;
    std::vector<int> ys;
    for (int i = 0; i < 4000; ++i) {
        xs.push_back(rng.next_uniform(0.1, 0.9));
        ys.push_back(rng.next_double() < 0.5 ? 1 : 0);
    }
    const auto fit = stat_core::fit_logistic_1d(xs, ys);
    CHECK(fit.converged);

    // Standard errors from the observed information at the fit.
    double sw = 0.0, swx = 0.0, swxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double mu = stat_core::predict(fit, xs[i]);
        const double w = mu * (1.0 - mu);
        sw += w;
        swx += w * xs[i];
        swxx += w * xs[i] * xs[i];
    }
    const double det = sw * swxx - swx * swx;
    const double se_b0 = std::sqrt(swxx / det);
    const double se_b1 = std::sqrt(sw / det);
    CHECK(std::fabs(fit.intercept) < 3.0 * se_b0);
    CHECK(std::fabs(fit.slope) < 3.0 * se_b1);
}

TEST_CASE("fit_logistic_1d error paths") {
    const std::vector<double> xs = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK_THROWS_AS(stat_core::fit_logistic_1d(xs, std::vector<int>{0, 0, 0, 0, 0, 0}),
                    DegenerateData);
    CHECK_THROWS_AS(stat_core::fit_logistic_1d(xs, std::vector<int>{1, 1, 1, 1, 1, 1}),
                    DegenerateData);
    // Perfect separation never converges.
    CHECK_THROWS_AS(stat_core::fit_logistic_1d(xs, std::vector<int>{0, 0, 0, 1, 1, 1}),
                    NonConvergence);
    // Constant covariate.
    CHECK_THROWS_AS(stat_core::fit_logistic_1d(std::vector<double>(6, 2.0),
                                               std::vector<int>{0, 1, 0, 1, 0, 1}),
                    DegenerateData);
    // Shape and domain problems are caller bugs, not data conditions.
    CHECK_THROWS_AS(stat_core::fit_logistic_1d(xs, std::vector<int>{0, 1}), std::domain_error);
    CHECK_THROWS_AS(stat_core::fit_logistic_1d(xs, std::vector<int>{0, 1, 2, 0, 1, 0}),
                    std::domain_error);
}

TEST_CASE("logistic link and predict") {
    CHECK(stat_core::logistic(0.0) == 0.5);
    CHECK(stat_core::logistic(40.0) == doctest::Approx(1.0));
    CHECK(stat_core::logistic(-40.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(stat_core::logistic(2.0) + stat_core::logistic(-2.0)
          == doctest::Approx(1.0).epsilon(1e-14));
    const stat_core::LogisticFit fit{-1.0, 2.0, true, 1};
    CHECK(stat_core::predict(fit, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
}
