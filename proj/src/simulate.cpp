#include "pmatch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "pmatch/errors.hpp"
#include "pmatch/stat_core.hpp"

namespace pmatch::simulate {

namespace {

constexpr double kEps = 1e-9; // tolerance for matching grid axis values

bool close(double a, double b) { return std::fabs(a - b) <= kEps; }

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("alpha must lie in (0, 1)");
}

void check_runs(std::int64_t n_runs) {
    if (n_runs < 1) throw std::domain_error("n_runs must be at least 1");
}

void check_design(int n, double prop) {
    if (n < 2) throw std::domain_error("n must be at least 2");
    if (!(prop >= 0.0 && prop <= 1.0))
        throw std::domain_error("prop_matched must lie in [0, 1]");
}

// Dispatches one simulated dataset to the requested test.  true_rho
// feeds the known-correlation oracle; q feeds the quantile test.
tests::TestResult apply_method(tests::Method method, const tests::PartiallyMatchedDataset& ds,
                               const std::optional<double>& q, double true_rho) {
    switch (method) {
        case tests::Method::TwoSample: return tests::two_sample_t(ds);
        case tests::Method::MatchedPaired: return tests::paired_t(ds.matched);
        case tests::Method::QuantileT: return tests::quantile_t(ds, *q);
        case tests::Method::PearsonT: return tests::pearson_t(ds);
        case tests::Method::CorrelatedKnownRho: return tests::correlated_t(ds, true_rho);
    }
    throw std::domain_error("apply_method: bad method");
}

SimulationSummary summarize_tally(std::int64_t rejected, std::int64_t estimable,
                                  tests::Method method, const char* what) {
    if (estimable == 0)
        throw EmptyResult(std::string(what) + ": no run produced an estimate");
    SimulationSummary s;
    s.method = method;
    s.n_effective = estimable;
    s.rejection_rate = static_cast<double>(rejected) / static_cast<double>(estimable);
    s.mc_se = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate)
                        / static_cast<double>(estimable));
    return s;
}

} // namespace

void BivariateParams::validate() const {
    if (!std::isfinite(mu_pre) || !std::isfinite(mu_post))
        throw std::domain_error("BivariateParams: means must be finite");
    if (!(sigma_pre > 0.0) || !(sigma_post > 0.0))
        throw std::domain_error("BivariateParams: sigmas must be positive");
    if (!(rho > -1.0 && rho < 1.0))
        throw std::domain_error("BivariateParams: rho must lie in (-1, 1)");
}

void RhoSpec::validate() const {
    if (!(lo > -1.0 && hi < 1.0) || !(lo <= hi))
        throw std::domain_error("RhoSpec: need -1 < lo <= hi < 1");
}

double RhoSpec::draw(PhiloxStream& rng) const {
    if (is_fixed()) return lo;
    return rng.next_uniform(lo, hi);
}

void SimulationConfig::validate() const {
    check_design(n, prop_matched);
    rho.validate();
    if (!std::isfinite(delta)) throw std::domain_error("SimulationConfig: delta must be finite");
    check_runs(n_runs);
    check_alpha(alpha);
}

int matched_count(int n, double prop) {
    check_design(n, prop);
    return static_cast<int>(std::floor(prop * static_cast<double>(n) + kEps));
}

std::vector<std::pair<double, double>> sample_pairs(const BivariateParams& params, int n,
                                                    PhiloxStream& rng) {
    params.validate();
    if (n < 1) throw std::domain_error("sample_pairs: n must be positive");

    const double mix = std::sqrt(1.0 - params.rho * params.rho);
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double z1 = rng.next_normal();
        const double z2 = rng.next_normal();
        pairs.emplace_back(params.mu_pre + params.sigma_pre * z1,
                           params.mu_post + params.sigma_post * (params.rho * z1 + mix * z2));
    }
    return pairs;
}

tests::PartiallyMatchedDataset split_dataset(std::span<const std::pair<double, double>> pairs,
                                             double prop_matched) {
    const int n = static_cast<int>(pairs.size());
    const int m = matched_count(n, prop_matched);

    tests::PartiallyMatchedDataset ds;
    ds.matched.assign(pairs.begin(), pairs.begin() + m);
    ds.unmatched_pre.reserve(pairs.size() - m);
    ds.unmatched_post.reserve(pairs.size() - m);
    for (std::size_t i = static_cast<std::size_t>(m); i < pairs.size(); ++i) {
        ds.unmatched_pre.push_back(pairs[i].first);
        ds.unmatched_post.push_back(pairs[i].second);
    }
    return ds;
}

tests::PartiallyMatchedDataset sample_dataset(const BivariateParams& params, int n,
                                              double prop_matched, PhiloxStream& rng) {
    return split_dataset(sample_pairs(params, n, rng), prop_matched);
}

SimulationSummary run_simulation(const SimulationConfig& cfg, tests::Method method,
                                 std::optional<double> q, int threads) {
    cfg.validate();
    if (method == tests::Method::QuantileT) {
        if (!q) throw std::domain_error("run_simulation: quantile method needs q");
        if (!(*q > 0.0 && *q < 1.0))
            throw std::domain_error("run_simulation: q must lie in (0, 1)");
    } else if (q) {
        throw std::domain_error("run_simulation: q is only meaningful for the quantile method");
    }

    struct alignas(64) Tally {
        std::int64_t rejected = 0;
        std::int64_t estimable = 0;
    };
    const int workers = detail::resolve_threads(threads);
    std::vector<Tally> tallies(workers);

    detail::for_each_run(cfg.n_runs, workers, [&](std::int64_t run, int w) {
        PhiloxStream rng(cfg.seed, static_cast<std::uint64_t>(run));
        const double rho = cfg.rho.draw(rng);
        const BivariateParams params{cfg.delta, 0.0, 1.0, 1.0, rho};
        const auto ds = split_dataset(sample_pairs(params, cfg.n, rng), cfg.prop_matched);
        try {
            const auto res = apply_method(method, ds, q, rho);
            ++tallies[w].estimable;
            if (res.p_value < cfg.alpha) ++tallies[w].rejected;
        } catch (const Error&) {
            // not estimable on this run; excluded from the denominator
        }
    });

    std::int64_t rejected = 0, estimable = 0;
    for (const auto& t : tallies) {
        rejected += t.rejected;
        estimable += t.estimable;
    }
    return summarize_tally(rejected, estimable, method, "run_simulation");
}

std::optional<double> alpha_target_search(int n, double prop_matched, double rho, double alpha,
                                          std::int64_t n_runs, std::uint64_t seed, int threads) {
    check_design(n, prop_matched);
    if (!(rho > -1.0 && rho < 1.0))
        throw std::domain_error("alpha_target_search: rho must lie in (-1, 1)");
    check_alpha(alpha);
    check_runs(n_runs);
    if (matched_count(n, prop_matched) < 4) return std::nullopt;

    constexpr std::size_t Q = kQuantileGrid.size();
    struct alignas(64) Tally {
        std::array<std::int64_t, Q> rejected{};
        std::int64_t estimable = 0;
    };
    const int workers = detail::resolve_threads(threads);
    std::vector<Tally> tallies(workers);
    const BivariateParams params{0.0, 0.0, 1.0, 1.0, rho};

    detail::for_each_run(n_runs, workers, [&](std::int64_t run, int w) {
        PhiloxStream rng(seed, static_cast<std::uint64_t>(run));
        const auto ds = split_dataset(sample_pairs(params, n, rng), prop_matched);
        try {
            std::array<bool, Q> reject;
            for (std::size_t i = 0; i < Q; ++i)
                reject[i] = tests::quantile_t(ds, kQuantileGrid[i]).p_value < alpha;
            // All grid points share the dataset, so failure is all-or-nothing:
            // tally only once the whole sweep has succeeded.
            ++tallies[w].estimable;
            for (std::size_t i = 0; i < Q; ++i)
                if (reject[i]) ++tallies[w].rejected[i];
        } catch (const Error&) {
        }
    });

    std::int64_t estimable = 0;
    std::array<std::int64_t, Q> rejected{};
    for (const auto& t : tallies) {
        estimable += t.estimable;
        for (std::size_t i = 0; i < Q; ++i) rejected[i] += t.rejected[i];
    }
    if (estimable == 0)
        throw EmptyResult("alpha_target_search: no run produced an estimate");

    // Closest rate to alpha wins; scanning upward with strict improvement
    // breaks ties toward the smaller (more conservative) quantile.
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < Q; ++i) {
        const double rate = static_cast<double>(rejected[i]) / static_cast<double>(estimable);
        const double gap = std::fabs(rate - alpha);
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return kQuantileGrid[best];
}

bool QuantileGrid::has_design(int n, double prop) const {
    for (const auto& e : entries)
        if (e.n == n && close(e.prop, prop)) return true;
    return false;
}

std::optional<std::optional<double>> QuantileGrid::q_at(int n, double prop, double rho) const {
    for (const auto& e : entries)
        if (e.n == n && close(e.prop, prop) && e.rho && close(*e.rho, rho)) return e.q;
    return std::nullopt;
}

std::optional<std::optional<double>> QuantileGrid::conservative_at(int n, double prop) const {
    for (const auto& e : entries)
        if (e.n == n && close(e.prop, prop) && !e.rho) return e.q;
    // No explicit conservative row (e.g. a hand-trimmed file): fall back
    // to the minimum over this design's per-rho rows.
    std::optional<double> acc;
    bool seen = false;
    for (const auto& e : entries) {
        if (e.n != n || !close(e.prop, prop) || !e.rho) continue;
        seen = true;
        if (e.q) acc = acc ? std::min(*acc, *e.q) : *e.q;
    }
    if (seen) return std::optional<std::optional<double>>(acc);
    return std::nullopt;
}

double QuantileGrid::conservative_for(int n, double prop) const {
    // Bracketing axis values actually present in the grid.
    std::optional<int> n_lo, n_hi;
    std::optional<double> p_lo, p_hi;
    for (const auto& e : entries) {
        if (e.n <= n && (!n_lo || e.n > *n_lo)) n_lo = e.n;
        if (e.n >= n && (!n_hi || e.n < *n_hi)) n_hi = e.n;
        if (e.prop <= prop + kEps && (!p_lo || e.prop > *p_lo)) p_lo = e.prop;
        if (e.prop >= prop - kEps && (!p_hi || e.prop < *p_hi)) p_hi = e.prop;
    }

    std::optional<double> best;
    for (const auto& gn : {n_lo, n_hi}) {
        if (!gn) continue;
        for (const auto& gp : {p_lo, p_hi}) {
            if (!gp) continue;
            const auto cell = conservative_at(*gn, *gp);
            if (cell && *cell) best = best ? std::min(*best, **cell) : **cell;
        }
    }
    if (!best)
        throw MissingGridEntry("grid: no calculable conservative quantile near n="
                               + std::to_string(n) + ", prop=" + std::to_string(prop));
    return *best;
}

QuantileGrid calibrate_grid(std::span<const int> ns, std::span<const double> props,
                            std::span<const double> rhos, double alpha, std::int64_t n_runs,
                            std::uint64_t seed, int threads) {
    if (ns.empty() || props.empty() || rhos.empty())
        throw std::domain_error("calibrate_grid: empty design axis");

    QuantileGrid grid;
    for (int n : ns) {
        for (double prop : props) {
            std::optional<double> conservative;
            for (double rho : rhos) {
                const auto q = alpha_target_search(n, prop, rho, alpha, n_runs, seed, threads);
                grid.entries.push_back({n, prop, rho, q});
                if (q) conservative = conservative ? std::min(*conservative, *q) : *q;
            }
            grid.entries.push_back({n, prop, std::nullopt, conservative});
        }
    }
    return grid;
}

void ComparisonConfig::validate() const {
    if (ns.empty() || props.empty() || deltas.empty())
        throw std::domain_error("ComparisonConfig: empty design axis");
    for (int n : ns) check_design(n, props.front());
    for (double p : props) check_design(ns.front(), p);
    for (double d : deltas)
        if (!std::isfinite(d)) throw std::domain_error("ComparisonConfig: delta must be finite");
    RhoSpec{rho_lo, rho_hi}.validate();
    check_alpha(alpha);
    check_runs(n_runs);
}

std::vector<ComparisonCell> run_comparison(const ComparisonConfig& cfg, const QuantileGrid& grid,
                                           int threads) {
    cfg.validate();

    constexpr tests::Method kMethods[] = {tests::Method::TwoSample, tests::Method::MatchedPaired,
                                          tests::Method::QuantileT, tests::Method::PearsonT};
    constexpr std::size_t M = 4;

    // Minimum matched pairs a method needs before it is worth simulating.
    auto min_pairs = [](tests::Method m) -> std::size_t {
        switch (m) {
            case tests::Method::MatchedPaired: return 2;
            case tests::Method::QuantileT: return 4;
            case tests::Method::PearsonT: return 3;
            default: return 0;
        }
    };

    // Resolve the quantile per design up front so grid problems surface
    // before any simulation time is spent.
    const std::size_t P = cfg.props.size();
    std::vector<std::optional<double>> q_for_prop(P);

    std::vector<ComparisonCell> cells;
    for (int n : cfg.ns) {
        for (std::size_t pi = 0; pi < P; ++pi) {
            q_for_prop[pi].reset();
            if (matched_count(n, cfg.props[pi]) >= 4) {
                const auto cell = grid.conservative_at(n, cfg.props[pi]);
                if (!cell || !*cell)
                    throw MissingGridEntry("run_comparison: grid has no conservative quantile "
                                           "for n=" + std::to_string(n) + ", prop="
                                           + std::to_string(cfg.props[pi]));
                q_for_prop[pi] = **cell;
            }
        }

        for (double delta : cfg.deltas) {
            struct alignas(64) Tally {
                std::vector<std::int64_t> rejected, estimable;
            };
            const int workers = detail::resolve_threads(threads);
            std::vector<Tally> tallies(workers);
            for (auto& t : tallies) {
                t.rejected.assign(P * M, 0);
                t.estimable.assign(P * M, 0);
            }

            detail::for_each_run(cfg.n_runs, workers, [&](std::int64_t run, int w) {
                PhiloxStream rng(cfg.seed, static_cast<std::uint64_t>(run));
                const double rho = rng.next_uniform(cfg.rho_lo, cfg.rho_hi);
                const auto pairs =
                    sample_pairs(BivariateParams{delta, 0.0, 1.0, 1.0, rho}, n, rng);

                for (std::size_t pi = 0; pi < P; ++pi) {
                    const auto ds = split_dataset(pairs, cfg.props[pi]);
                    for (std::size_t mi = 0; mi < M; ++mi) {
                        if (ds.matched.size() < min_pairs(kMethods[mi])) continue;
                        try {
                            const auto res =
                                apply_method(kMethods[mi], ds, q_for_prop[pi], rho);
                            ++tallies[w].estimable[pi * M + mi];
                            if (res.p_value < cfg.alpha) ++tallies[w].rejected[pi * M + mi];
                        } catch (const Error&) {
                        }
                    }
                }
            });

            for (std::size_t mi = 0; mi < M; ++mi) {
                for (std::size_t pi = 0; pi < P; ++pi) {
                    ComparisonCell cell;
                    cell.n = n;
                    cell.prop = cfg.props[pi];
                    cell.delta = delta;
                    cell.method = kMethods[mi];
                    const std::size_t m = matched_count(n, cfg.props[pi]);
                    if (m < min_pairs(kMethods[mi])) {
                        cells.push_back(cell); // marker: not calculable at this design
                        continue;
                    }
                    if (kMethods[mi] == tests::Method::QuantileT) cell.q_used = q_for_prop[pi];
                    std::int64_t rejected = 0, estimable = 0;
                    for (const auto& t : tallies) {
                        rejected += t.rejected[pi * M + mi];
                        estimable += t.estimable[pi * M + mi];
                    }
                    cell.summary =
                        summarize_tally(rejected, estimable, kMethods[mi], "run_comparison");
                    cells.push_back(cell);
                }
            }
        }
    }
    return cells;
}

std::vector<CurvePoint> error_curve(int n, double prop, tests::Method method,
                                    const QuantileGrid& grid, double alpha, std::int64_t n_runs,
                                    std::uint64_t seed, int threads) {
    check_design(n, prop);
    check_alpha(alpha);
    check_runs(n_runs);

    std::optional<double> q;
    if (method == tests::Method::QuantileT) q = grid.conservative_for(n, prop);

    // Per-run result slots keep the logistic fit's input order fixed no
    // matter how runs were scheduled: -1 not estimable, 0 keep, 1 reject.
    std::vector<double> rho_of(static_cast<std::size_t>(n_runs));
    std::vector<signed char> outcome(static_cast<std::size_t>(n_runs), -1);

    detail::for_each_run(n_runs, detail::resolve_threads(threads), [&](std::int64_t run, int) {
        PhiloxStream rng(seed, static_cast<std::uint64_t>(run));
        const double rho = rng.next_uniform(0.1, 0.9);
        rho_of[run] = rho;
        const auto ds =
            split_dataset(sample_pairs(BivariateParams{0.0, 0.0, 1.0, 1.0, rho}, n, rng), prop);
        try {
            const auto res = apply_method(method, ds, q, rho);
            outcome[run] = res.p_value < alpha ? 1 : 0;
        } catch (const Error&) {
        }
    });

    std::vector<double> xs;
    std::vector<int> ys;
    xs.reserve(outcome.size());
    ys.reserve(outcome.size());
    for (std::size_t i = 0; i < outcome.size(); ++i) {
        if (outcome[i] < 0) continue;
        xs.push_back(rho_of[i]);
        ys.push_back(outcome[i]);
    }
    if (xs.empty()) throw EmptyResult("error_curve: no run produced an estimate");

    const auto fit = stat_core::fit_logistic_1d(xs, ys);
    std::vector<CurvePoint> curve;
    curve.reserve(81);
    for (int i = 0; i <= 80; ++i) {
        const double rho = static_cast<double>(10 + i) / 100.0;
        curve.push_back({rho, stat_core::predict(fit, rho)});
    }
    return curve;
}

std::string_view to_string(GapArm arm) {
    switch (arm) {
        case GapArm::Oracle: return "oracle";
        case GapArm::Paired: return "paired";
        case GapArm::TwoSample: return "two_sample";
    }
    return "unknown";
}

void PowerGapConfig::validate() const {
    check_design(n, 0.5);
    if (!(rho > -1.0 && rho < 1.0))
        throw std::domain_error("PowerGapConfig: rho must lie in (-1, 1)");
    if (!std::isfinite(delta)) throw std::domain_error("PowerGapConfig: delta must be finite");
    if (props.empty()) throw std::domain_error("PowerGapConfig: empty proportion axis");
    for (double p : props) check_design(n, p);
    check_alpha(alpha);
    check_runs(n_runs);
}

std::vector<PowerGapRow> power_gap_curve(const PowerGapConfig& cfg, int threads) {
    cfg.validate();

    const std::size_t P = cfg.props.size();
    std::vector<int> m_of(P);
    for (std::size_t pi = 0; pi < P; ++pi) m_of[pi] = matched_count(cfg.n, cfg.props[pi]);

    std::vector<PowerGapRow> rows;
    for (double delta : {0.0, cfg.delta}) {
        struct alignas(64) Tally {
            std::int64_t oracle_rej = 0, oracle_est = 0;
            std::int64_t two_rej = 0, two_est = 0;
            std::vector<std::int64_t> paired_rej, paired_est;
        };
        const int workers = detail::resolve_threads(threads);
        std::vector<Tally> tallies(workers);
        for (auto& t : tallies) {
            t.paired_rej.assign(P, 0);
            t.paired_est.assign(P, 0);
        }
        const BivariateParams params{delta, 0.0, 1.0, 1.0, cfg.rho};

        detail::for_each_run(cfg.n_runs, workers, [&](std::int64_t run, int w) {
            PhiloxStream rng(cfg.seed, static_cast<std::uint64_t>(run));
            const auto pairs = sample_pairs(params, cfg.n, rng);

            try {
                ++tallies[w].oracle_est;
                if (tests::paired_t(pairs).p_value < cfg.alpha) ++tallies[w].oracle_rej;
            } catch (const Error&) {
                --tallies[w].oracle_est;
            }

            const auto pooled = split_dataset(pairs, 0.0);
            try {
                ++tallies[w].two_est;
                if (tests::two_sample_t(pooled).p_value < cfg.alpha) ++tallies[w].two_rej;
            } catch (const Error&) {
                --tallies[w].two_est;
            }

            for (std::size_t pi = 0; pi < P; ++pi) {
                if (m_of[pi] < 2) continue;
                const std::span<const std::pair<double, double>> subset(
                    pairs.data(), static_cast<std::size_t>(m_of[pi]));
                try {
                    ++tallies[w].paired_est[pi];
                    if (tests::paired_t(subset).p_value < cfg.alpha) ++tallies[w].paired_rej[pi];
                } catch (const Error&) {
                    --tallies[w].paired_est[pi];
                }
            }
        });

        std::int64_t oracle_rej = 0, oracle_est = 0, two_rej = 0, two_est = 0;
        std::vector<std::int64_t> paired_rej(P, 0), paired_est(P, 0);
        for (const auto& t : tallies) {
            oracle_rej += t.oracle_rej;
            oracle_est += t.oracle_est;
            two_rej += t.two_rej;
            two_est += t.two_est;
            for (std::size_t pi = 0; pi < P; ++pi) {
                paired_rej[pi] += t.paired_rej[pi];
                paired_est[pi] += t.paired_est[pi];
            }
        }

        const auto oracle =
            summarize_tally(oracle_rej, oracle_est, tests::Method::MatchedPaired, "power_gap");
        const auto two =
            summarize_tally(two_rej, two_est, tests::Method::TwoSample, "power_gap");
        for (std::size_t pi = 0; pi < P; ++pi) {
            rows.push_back({cfg.props[pi], GapArm::Oracle, delta, oracle});
            if (m_of[pi] >= 2) {
                rows.push_back({cfg.props[pi], GapArm::Paired, delta,
                                summarize_tally(paired_rej[pi], paired_est[pi],
                                                tests::Method::MatchedPaired, "power_gap")});
            } else {
                rows.push_back({cfg.props[pi], GapArm::Paired, delta, std::nullopt});
            }
            rows.push_back({cfg.props[pi], GapArm::TwoSample, delta, two});
        }
    }
    return rows;
}

} // namespace pmatch::simulate
