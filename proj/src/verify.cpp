#include "portopt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "portopt/kernels.hpp"
#include "portopt/linalg.hpp"
#include "portopt/parallel.hpp"
#include "portopt/report.hpp"
#include "portopt/rng.hpp"

namespace portopt {

Fingerprint Fingerprint::from(const EstimatorConfig& config, double horizon, std::string extra) {
    Fingerprint fp;
    fp.seed = config.seed;
    fp.steps = config.steps;
    fp.n_outer = config.n_outer;
    fp.m_inner = config.m_inner;
    fp.bump_h = config.bump(horizon);
    fp.backend = kernels::backend_name(kernels::active_backend());
    fp.extra = std::move(extra);
    return fp;
}

namespace {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(std::span<const double> xs) {
    double sum = 0.0, sumsq = 0.0;
    kernels::active().reduce_stats(xs.data(), xs.size(), &sum, &sumsq);
    const double n = static_cast<double>(xs.size());
    MeanSe out;
    out.mean = sum / n;
    const double var = std::max(0.0, (sumsq - sum * out.mean) / std::max(1.0, n - 1.0));
    out.se = std::sqrt(var / n);
    return out;
}

JsonValue fingerprint_json(const Fingerprint& fp) {
    JsonValue j = JsonValue::object();
    j.set("seed", JsonValue::integer(static_cast<long long>(fp.seed)))
        .set("steps", JsonValue::integer(fp.steps))
        .set("n_outer", JsonValue::integer(fp.n_outer))
        .set("m_inner", JsonValue::integer(fp.m_inner))
        .set("bump_h", JsonValue::num(fp.bump_h))
        .set("backend", JsonValue::str(fp.backend));
    if (!fp.extra.empty()) j.set("extra", JsonValue::str(fp.extra));
    return j;
}

}  // namespace

void write_reports_json(std::ostream& os, const std::vector<TestReport>& reports) {
    JsonValue arr = JsonValue::array();
    for (const TestReport& r : reports) {
        JsonValue j = JsonValue::object();
        j.set("name", JsonValue::str(r.name))
            .set("statistic", JsonValue::num(r.statistic))
            .set("target", JsonValue::num(r.target))
            .set("tolerance", JsonValue::num(r.tolerance))
            .set("pass", JsonValue::boolean(r.pass))
            .set("detail", JsonValue::str(r.detail))
            .set("fingerprint", fingerprint_json(r.fingerprint));
        arr.push(std::move(j));
    }
    os << arr.dump() << "\n";
}

void print_reports_table(std::ostream& os, const std::vector<TestReport>& reports) {
    for (const TestReport& r : reports) {
        os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": stat=" << format_number(r.statistic)
           << " target=" << format_number(r.target) << " tol=" << format_number(r.tolerance);
        if (!r.detail.empty()) os << "  (" << r.detail << ")";
        os << "\n";
    }
}

TestReport martingale_flatness(const std::string& name,
                               const std::vector<std::vector<double>>& samples_per_node,
                               double target, double target_slack, Fingerprint fp) {
    if (samples_per_node.empty())
        throw InvalidArgument("martingale_flatness: no nodes");
    TestReport report;
    report.name = name;
    report.target = target;
    report.fingerprint = std::move(fp);

    int passing = 0;
    double worst_gap = -1.0;
    int worst_node = 0;
    MeanSe worst{};
    for (std::size_t k = 0; k < samples_per_node.size(); ++k) {
        if (samples_per_node[k].size() < 2)
            throw InvalidArgument("martingale_flatness: need >= 2 samples per node");
        const MeanSe ms = mean_se(samples_per_node[k]);
        const double band = 3.0 * ms.se + target_slack;
        const double gap = std::fabs(ms.mean - target) - band;
        if (gap <= 0.0) ++passing;
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_node = static_cast<int>(k);
            worst = ms;
        }
    }
    const double fraction =
        static_cast<double>(passing) / static_cast<double>(samples_per_node.size());
    report.statistic = worst.mean;
    report.tolerance = 3.0 * worst.se + target_slack;
    report.pass = fraction >= 0.95;
    report.detail = format_number(100.0 * fraction) + "% of " +
                    std::to_string(samples_per_node.size()) + " nodes in band; worst node " +
                    std::to_string(worst_node);
    return report;
}

std::vector<std::vector<double>> deflated_wealth_samples(const DeflatedWealthFunctional& f,
                                                         int n_outer) {
    const TimeGrid grid = f.grid();
    const int nodes = grid.nodes();
    std::vector<std::vector<double>> samples(nodes, std::vector<double>(n_outer));
    parallel_for(n_outer, [&](int64_t begin, int64_t end) {
        for (int64_t j = begin; j < end; ++j) {
            const Path path = simulate_brownian_member(grid, f.market().n, f.config().seed,
                                                       static_cast<uint64_t>(j));
            for (int k = 0; k < nodes; ++k) samples[k][j] = f.evaluate(k, path);
        }
    });
    return samples;
}

ReplicationResult replication_test(const std::string& name, const MarketModel& market,
                                   const PortfolioPolicy& policy, double x0, double multiplier,
                                   const UtilitySpec& utility, const PathEnsemble& ensemble,
                                   double rel_rmse_bound, double admissibility_tol,
                                   Fingerprint fp) {
    const int N = ensemble.size();
    std::vector<double> sq_errors(N);
    std::vector<int> admissible(N);
    parallel_for(N, [&](int64_t begin, int64_t end) {
        double incr[linalg::kMaxDim];
        for (int64_t j = begin; j < end; ++j) {
            const Path& path = ensemble.member(j);
            const std::vector<double> wealth = wealth_under_policy(market, policy, x0, path);
            DeflatorState state;
            for (int k = 0; k < path.grid().steps; ++k) {
                for (int i = 0; i < market.n; ++i) incr[i] = path.increment(k, i);
                deflator_step(market, k, path, {incr, static_cast<std::size_t>(market.n)},
                              state, nullptr);
            }
            const double h_t = std::exp(state.log_state_price());
            const double claim = utility.inverse_marginal(multiplier * h_t);
            const double err = wealth.back() - claim;
            sq_errors[j] = err * err;
            admissible[j] = check_admissible(wealth, admissibility_tol).admissible ? 1 : 0;
        }
    });

    double mse = 0.0;
    int n_admissible = 0;
    for (int j = 0; j < N; ++j) {
        mse += sq_errors[j];
        n_admissible += admissible[j];
    }
    mse /= N;

    ReplicationResult out;
    out.rel_rmse = std::sqrt(mse) / x0;
    out.admissible_rate = static_cast<double>(n_admissible) / N;
    out.report.name = name;
    out.report.statistic = out.rel_rmse;
    out.report.target = 0.0;
    out.report.tolerance = rel_rmse_bound;
    out.report.pass = out.rel_rmse <= rel_rmse_bound;
    out.report.detail = "admissible " + format_number(100.0 * out.admissible_rate) + "% of " +
                        std::to_string(N) + " paths";
    out.report.fingerprint = std::move(fp);
    return out;
}

namespace {

// below this, a residual is rounding noise and the refinement check is moot
constexpr double kResidualFloor = 1e-12;

TestReport ratio_band_report(const std::string& name, const std::vector<double>& sizes,
                             const std::vector<double>& values, double theoretical_ratio,
                             Fingerprint fp, const std::string& unit) {
    TestReport report;
    report.name = name;
    report.fingerprint = std::move(fp);
    report.target = theoretical_ratio;

    std::string detail = unit + ":";
    for (std::size_t i = 0; i < values.size(); ++i) {
        detail += " " + format_number(sizes[i]) + "->" + format_number(values[i]);
    }

    bool all_floor = true;
    for (double v : values) all_floor &= std::fabs(v) <= kResidualFloor;
    if (all_floor) {
        report.statistic = 0.0;
        report.tolerance = kResidualFloor;
        report.pass = true;
        report.detail = detail + " (exact at rounding level)";
        return report;
    }

    bool pass = true;
    double worst_ratio = theoretical_ratio;
    double worst_dev = -1.0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double ratio = values[i] / values[i + 1];
        const double dev = std::fabs(ratio - theoretical_ratio);
        if (dev > worst_dev) {
            worst_dev = dev;
            worst_ratio = ratio;
        }
        if (!(ratio >= 0.6 * theoretical_ratio && ratio <= 1.6 * theoretical_ratio)) pass = false;
        detail += " r" + std::to_string(i) + "=" + format_number(ratio);
    }
    report.statistic = worst_ratio;
    report.tolerance = 0.6 * theoretical_ratio;  // band is [0.6, 1.6]·target
    report.pass = pass;
    report.detail = detail;
    return report;
}

}  // namespace

std::vector<TestReport> representation_suite(const std::vector<RepresentationCase>& cases,
                                             const std::vector<int>& step_counts, int dim,
                                             int n_paths, const EstimatorConfig& config,
                                             double horizon) {
    if (step_counts.empty()) throw InvalidArgument("representation_suite: empty sweep");
    std::vector<TestReport> reports;
    for (const RepresentationCase& c : cases) {
        std::vector<double> sizes, rms;
        for (int K : step_counts) {
            const TimeGrid grid(horizon, K);
            const NonAnticipativeFunctional f = c.make(grid);
            if (!check_non_anticipative(f, grid, dim, std::min(100, n_paths), config.seed + 1))
                throw InvalidArgument("representation_suite: functional '" + c.label +
                                      "' is anticipative");
            const PathEnsemble ensemble = simulate_brownian(grid, dim, n_paths, config.seed);
            const ResidualReport res =
                representation_residual(f, ensemble, config.bump(horizon));
            sizes.push_back(K);
            rms.push_back(res.rms);
        }
        reports.push_back(ratio_band_report("representation_residual[" + c.label + "]", sizes,
                                            rms, std::sqrt(2.0),
                                            Fingerprint::from(config, horizon, c.label),
                                            "K->rms"));
    }
    return reports;
}

std::vector<TestReport> convergence_study(const MarketModel& market, const UtilitySpec& utility,
                                          double x0, const EstimatorConfig& config,
                                          const SweepLists& sweeps) {
    std::vector<TestReport> reports;
    const MultiplierSolve solve = solve_multiplier(utility, market, x0, config);
    const TimeGrid grid = config.grid(market.horizon);

    // one representative interior evaluation point on a fresh outer path
    const Path probe_path =
        simulate_brownian_member(grid, market.n, config.seed, /*member=*/7);
    const int probe_node = grid.steps / 2;

    if (!sweeps.bump_sizes.empty()) {
        if (utility.family() != UtilityFamily::power_utility)
            throw InvalidArgument("convergence_study: bump sweep needs the power oracle");
        std::vector<double> sizes, errors;
        const OraclePoint oracle =
            closed_form_power(market, utility.gamma(), x0, probe_node, probe_path);
        const double oracle_ratio = oracle.pi[0] / oracle.x_star;
        DeflatedWealthFunctional f(market, utility, solve.y, config);
        for (double h : sweeps.bump_sizes) {
            const PortfolioResult res = optimal_portfolio(f, probe_node, probe_path, h);
            sizes.push_back(h);
            errors.push_back(std::fabs(res.pi[0] / res.x_star - oracle_ratio));
        }
        reports.push_back(ratio_band_report("bump_sweep[pi_ratio_error]", sizes, errors, 4.0,
                                            Fingerprint::from(config, market.horizon, "h sweep"),
                                            "h->err"));
    }

    if (!sweeps.inner_counts.empty()) {
        std::vector<double> sizes, ses;
        std::vector<double> ratios;
        for (std::size_t i = 0; i < sweeps.inner_counts.size(); ++i) {
            EstimatorConfig c = config;
            c.m_inner = sweeps.inner_counts[i];
            DeflatedWealthFunctional f(market, utility, solve.y, c);
            std::vector<double> grad(market.n);
            std::vector<EvalStats> stats(market.n);
            f.gradient(probe_node, probe_path, config.bump(market.horizon), grad.data(),
                       stats.data());
            sizes.push_back(sweeps.inner_counts[i]);
            ses.push_back(stats[0].std_error);
        }
        // expected ratio varies per step; normalize each to its own target
        std::vector<double> normalized(ses.size());
        for (std::size_t i = 0; i < ses.size(); ++i)
            normalized[i] = ses[i] * std::sqrt(static_cast<double>(sweeps.inner_counts[i]));
        reports.push_back(ratio_band_report("inner_sweep[grad_stderr_normalized]", sizes,
                                            normalized, 1.0,
                                            Fingerprint::from(config, market.horizon, "m sweep"),
                                            "m->se*sqrt(m)"));
        (void)ratios;
    }

    if (!sweeps.step_counts.empty()) {
        std::vector<double> sizes, rmses;
        for (int K : sweeps.step_counts) {
            EstimatorConfig c = config;
            c.steps = K;
            const MultiplierSolve s_k = solve_multiplier(utility, market, x0, c);
            auto f = std::make_shared<DeflatedWealthFunctional>(market, utility, s_k.y, c);
            const PathEnsemble ensemble = simulate_brownian(c.grid(market.horizon), market.n,
                                                            config.n_outer, c.seed);
            const PortfolioPolicy policy = optimal_policy(f, c.bump(market.horizon));
            const ReplicationResult rep = replication_test(
                "replication[K=" + std::to_string(K) + "]", market, policy, x0, s_k.y, utility,
                ensemble, 1.0, config.admissibility_rel_tol * x0,
                Fingerprint::from(c, market.horizon));
            sizes.push_back(K);
            rmses.push_back(rep.rel_rmse);
        }
        reports.push_back(ratio_band_report("step_sweep[replication_rmse]", sizes, rmses,
                                            std::sqrt(2.0),
                                            Fingerprint::from(config, market.horizon, "K sweep"),
                                            "K->rmse"));
    }
    return reports;
}

std::vector<TestReport> assumption_checks(const MarketModel& market, const UtilitySpec& utility,
                                          double y, const EstimatorConfig& config) {
    std::vector<TestReport> reports;
    const TimeGrid grid = config.grid(market.horizon);

    // E[Z(T)] within 3 standard errors of 1 (likelihood stays a martingale)
    {
        const int N = config.n_outer;
        std::vector<double> z_t(N);
        parallel_for(N, [&](int64_t begin, int64_t end) {
            double incr[linalg::kMaxDim];
            for (int64_t j = begin; j < end; ++j) {
                const Path path =
                    simulate_brownian_member(grid, market.n, config.seed, static_cast<uint64_t>(j));
                DeflatorState state;
                for (int k = 0; k < grid.steps; ++k) {
                    for (int i = 0; i < market.n; ++i) incr[i] = path.increment(k, i);
                    deflator_step(market, k, path, {incr, static_cast<std::size_t>(market.n)},
                                  state, nullptr);
                }
                z_t[j] = std::exp(-state.int_theta_dw - 0.5 * state.int_theta_sq);
            }
        });
        const MeanSe ms = mean_se(z_t);
        TestReport r;
        r.name = "likelihood_martingale[E[Z(T)]=1]";
        r.statistic = ms.mean;
        r.target = 1.0;
        r.tolerance = 3.0 * ms.se;
        r.pass = std::fabs(ms.mean - 1.0) <= r.tolerance;
        r.detail = "N=" + std::to_string(N);
        r.fingerprint = Fingerprint::from(config, market.horizon);
        reports.push_back(std::move(r));
    }

    // sampled second moment of H(T)I(yH(T)) stable under doubling N
    {
        const BudgetCurve curve_full(utility, market, config);
        auto second_moment = [&](std::span<const double> log_h, std::size_t count) {
            std::vector<double> sq(count);
            for (std::size_t j = 0; j < count; ++j) {
                const double v = utility.deflated_payoff(y, log_h.empty() ? 0.0 : log_h[j]);
                sq[j] = v * v;
            }
            return mean_se(sq);
        };
        MeanSe full, halfed;
        if (utility.path_independent_payoff()) {
            const double v = utility.deflated_payoff(y, 0.0);
            full = halfed = MeanSe{v * v, 0.0};
        } else {
            const std::span<const double> log_h = curve_full.log_h_samples();
            full = second_moment(log_h, log_h.size());
            halfed = second_moment(log_h, log_h.size() / 2);
        }
        TestReport r;
        r.name = "square_integrability_proxy[second_moment_stable]";
        r.statistic = full.mean;
        r.target = halfed.mean;
        r.tolerance = 3.0 * std::sqrt(full.se * full.se + halfed.se * halfed.se);
        r.pass = std::isfinite(full.mean) &&
                 std::fabs(full.mean - halfed.mean) <= std::max(r.tolerance, 1e-12);
        r.detail = "E[(H I(yH))^2] at N and N/2, y=" + format_number(y);
        r.fingerprint = Fingerprint::from(config, market.horizon);
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace portopt
