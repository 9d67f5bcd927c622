// Command-line driver: solve-multiplier | portfolio | verify | converge.
// Exit status 0 iff every executed check passed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "portopt/config.hpp"
#include "portopt/kernels.hpp"
#include "portopt/linalg.hpp"
#include "portopt/optimizer.hpp"
#include "portopt/report.hpp"
#include "portopt/rng.hpp"
#include "portopt/verify.hpp"

namespace fs = std::filesystem;
using namespace portopt;

namespace {

ExperimentConfig load_config(const std::string& path, long long seed_override,
                             const std::string& out_override, const std::string& fmt_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = parse_config(ss.str());
    if (seed_override >= 0) cfg.estimator.seed = static_cast<uint64_t>(seed_override);
    if (!out_override.empty()) cfg.run.out_dir = out_override;
    if (!fmt_override.empty())
        cfg.run.format = fmt_override == "json" ? OutputFormat::json : OutputFormat::csv;
    return cfg;
}

void apply_backend(const ExperimentConfig& cfg) {
    if (cfg.run.backend == "scalar") kernels::select(kernels::Backend::scalar);
    if (cfg.run.backend == "avx2") kernels::select(kernels::Backend::avx2);
}

void write_file(const fs::path& path, const std::string& contents) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("", "cannot write '" + path.string() + "'");
    out << contents;
}

void echo_effective_config(const ExperimentConfig& cfg) {
    write_file(fs::path(cfg.run.out_dir) / "config.effective.json", echo_config(cfg));
}

std::string reports_to_csv(const std::vector<TestReport>& reports) {
    std::string out = "name,statistic,target,tolerance,pass,detail\n";
    for (const TestReport& r : reports) {
        std::string detail = r.detail;
        for (char& c : detail)
            if (c == ',') c = ';';
        out += r.name + "," + format_number(r.statistic) + "," + format_number(r.target) + "," +
               format_number(r.tolerance) + "," + (r.pass ? "true" : "false") + ",\"" + detail +
               "\"\n";
    }
    return out;
}

void emit_reports(const ExperimentConfig& cfg, const std::vector<TestReport>& reports,
                  const std::string& stem) {
    const fs::path dir(cfg.run.out_dir);
    if (cfg.run.format == OutputFormat::json) {
        std::ostringstream os;
        write_reports_json(os, reports);
        write_file(dir / (stem + ".json"), os.str());
    } else {
        write_file(dir / (stem + ".csv"), reports_to_csv(reports));
    }
    print_reports_table(std::cout, reports);
}

int run_solve_multiplier(const ExperimentConfig& cfg) {
    const MarketModel market = build_market(cfg.market);
    const UtilitySpec utility = build_utility(cfg.utility);
    const MultiplierSolve solve = solve_multiplier(utility, market, cfg.utility.x0, cfg.estimator);

    JsonValue j = JsonValue::object();
    j.set("y", JsonValue::num(solve.y))
        .set("budget", JsonValue::num(solve.budget))
        .set("budget_std_error", JsonValue::num(solve.budget_std_error))
        .set("iterations", JsonValue::integer(solve.iterations))
        .set("bracket_lo", JsonValue::num(solve.bracket_lo))
        .set("bracket_hi", JsonValue::num(solve.bracket_hi));
    JsonValue hist = JsonValue::array();
    for (const auto& [y, budget] : solve.history) {
        JsonValue row = JsonValue::object();
        row.set("y", JsonValue::num(y)).set("budget", JsonValue::num(budget));
        hist.push(std::move(row));
    }
    j.set("history", std::move(hist));

    write_file(fs::path(cfg.run.out_dir) / "multiplier.json", j.dump() + "\n");
    echo_effective_config(cfg);
    std::cout << "y = " << format_number(solve.y) << " (budget " << format_number(solve.budget)
              << " +/- " << format_number(solve.budget_std_error) << ", " << solve.iterations
              << " evaluations)\n";
    return 0;
}

int run_portfolio(const ExperimentConfig& cfg) {
    const MarketModel market = build_market(cfg.market);
    const UtilitySpec utility = build_utility(cfg.utility);
    const double x0 = cfg.utility.x0;
    const MultiplierSolve solve = solve_multiplier(utility, market, x0, cfg.estimator);
    const DeflatedWealthFunctional f(market, utility, solve.y, cfg.estimator);
    const double h = cfg.estimator.bump(market.horizon);

    const Path path = simulate_brownian_member(f.grid(), market.n, cfg.estimator.seed,
                                               static_cast<uint64_t>(cfg.run.path_index));

    const bool log_oracle = utility.family() == UtilityFamily::log_utility;
    const bool power_oracle =
        utility.family() == UtilityFamily::power_utility && market.coeffs.deterministic;
    const bool with_oracle = log_oracle || power_oracle;

    std::string csv = "node,time,X_star,M";
    for (int i = 1; i <= market.n; ++i) csv += ",pi_" + std::to_string(i);
    for (int i = 1; i <= market.n; ++i) csv += ",grad_" + std::to_string(i);
    for (int i = 1; i <= market.n; ++i) csv += ",theta_" + std::to_string(i);
    csv += ",H,inner_stderr";
    if (with_oracle) {
        for (int i = 1; i <= market.n; ++i) csv += ",pi_oracle_" + std::to_string(i);
        csv += ",x_star_oracle";
    }
    csv += "\n";

    for (int k = 0; k <= f.grid().steps; ++k) {
        const PortfolioResult res = optimal_portfolio(f, k, path, h);
        csv += std::to_string(k) + "," + format_number(res.time) + "," +
               format_number(res.x_star) + "," + format_number(res.m_value);
        for (double v : res.pi) csv += "," + format_number(v);
        for (double v : res.grad_m) csv += "," + format_number(v);
        for (double v : res.theta) csv += "," + format_number(v);
        csv += "," + format_number(res.state_price) + "," + format_number(res.inner_std_error);
        if (with_oracle) {
            const OraclePoint oracle =
                log_oracle ? closed_form_log(market, x0, k, path)
                           : closed_form_power(market, utility.gamma(), x0, k, path);
            for (double v : oracle.pi) csv += "," + format_number(v);
            csv += "," + format_number(oracle.x_star);
        }
        csv += "\n";
    }
    write_file(fs::path(cfg.run.out_dir) / "portfolio.csv", csv);
    echo_effective_config(cfg);
    std::cout << "portfolio table for member " << cfg.run.path_index << " written to "
              << (fs::path(cfg.run.out_dir) / "portfolio.csv").string() << "\n";
    return 0;
}

int run_verify(const ExperimentConfig& cfg) {
    const MarketModel market = build_market(cfg.market);
    const UtilitySpec utility = build_utility(cfg.utility);
    const double x0 = cfg.utility.x0;
    const EstimatorConfig& est = cfg.estimator;
    std::vector<TestReport> reports;

    const MultiplierSolve solve = solve_multiplier(utility, market, x0, est);
    const double slack = (utility.path_independent_payoff() ? est.multiplier_tol_closed
                                                            : est.multiplier_tol_mc) *
                         x0;

    // martingale flatness of M(t) = H X*
    {
        const DeflatedWealthFunctional f(market, utility, solve.y, est);
        auto samples = deflated_wealth_samples(f, est.n_outer);
        reports.push_back(martingale_flatness("flatness[deflated_wealth]", samples, x0, slack,
                                              Fingerprint::from(est, market.horizon)));
    }

    // synthetic calibration case (the drift sabotage corrupts this one)
    {
        const int N = 4000;
        const int nodes = est.steps + 1;
        std::vector<std::vector<double>> samples(nodes, std::vector<double>(N));
        const rng::Key key = rng::key_from_seed(est.seed);
        for (int k = 0; k < nodes; ++k) {
            rng::fill_normals(key, rng::test_stream(1000 + k), 0, samples[k]);
            const double drift = cfg.run.sabotage == Sabotage::drift_martingale
                                     ? 10.0 / std::sqrt(static_cast<double>(N)) * k /
                                           std::max(1, est.steps)
                                     : 0.0;
            for (double& v : samples[k]) v += drift;
        }
        reports.push_back(martingale_flatness("flatness[synthetic_iid]", samples, 0.0, 0.0,
                                              Fingerprint::from(est, market.horizon,
                                                                to_string(cfg.run.sabotage))));
    }

    // representation residuals for the closed-form functionals
    {
        std::vector<RepresentationCase> cases;
        cases.push_back({"W", [](TimeGrid) {
                             return NonAnticipativeFunctional{
                                 "W", [](int k, const Path& p) { return p.value(k, 0); }};
                         }});
        cases.push_back({"W^2-t", [](TimeGrid) {
                             return NonAnticipativeFunctional{
                                 "W^2-t", [](int k, const Path& p) {
                                     const double w = p.value(k, 0);
                                     return w * w - p.grid().time(k);
                                 }};
                         }});
        cases.push_back({"Z", [&market](TimeGrid) {
                             return NonAnticipativeFunctional{
                                 "Z", [&market](int k, const Path& p) {
                                     DeflatorState state;
                                     double incr[linalg::kMaxDim];
                                     for (int l = 0; l < k; ++l) {
                                         for (int i = 0; i < market.n; ++i)
                                             incr[i] = p.increment(l, i);
                                         deflator_step(market, l, p,
                                                       {incr, static_cast<std::size_t>(market.n)},
                                                       state, nullptr);
                                     }
                                     return std::exp(-state.int_theta_dw -
                                                     0.5 * state.int_theta_sq);
                                 }};
                         }});
        auto rep = representation_suite(cases, {32, 64, 128}, market.n, 256, est, market.horizon);
        reports.insert(reports.end(), rep.begin(), rep.end());
    }

    // replication under the oracle (or numerical) policy
    {
        EstimatorConfig rep_cfg = est;
        rep_cfg.n_outer = std::min(est.n_outer, 512);
        const PathEnsemble ensemble =
            simulate_brownian(rep_cfg.grid(market.horizon), market.n, rep_cfg.n_outer, est.seed);
        PortfolioPolicy policy;
        const bool log_oracle = utility.family() == UtilityFamily::log_utility;
        const bool power_oracle =
            utility.family() == UtilityFamily::power_utility && market.coeffs.deterministic;
        std::shared_ptr<DeflatedWealthFunctional> f;
        if (log_oracle) {
            policy = PortfolioPolicy{"closed_form_log",
                                     [&market, x0](int k, const Path& p, double, double* out) {
                                         const OraclePoint pt = closed_form_log(market, x0, k, p);
                                         std::copy(pt.pi.begin(), pt.pi.end(), out);
                                     }};
        } else if (power_oracle) {
            const double gamma = utility.gamma();
            policy = PortfolioPolicy{"closed_form_power",
                                     [&market, x0, gamma](int k, const Path& p, double,
                                                          double* out) {
                                         const OraclePoint pt =
                                             closed_form_power(market, gamma, x0, k, p);
                                         std::copy(pt.pi.begin(), pt.pi.end(), out);
                                     }};
        } else {
            EstimatorConfig pol_cfg = est;
            pol_cfg.m_inner = std::min(est.m_inner, 256);
            f = std::make_shared<DeflatedWealthFunctional>(market, utility, solve.y, pol_cfg);
            policy = optimal_policy(f, est.bump(market.horizon));
        }
        if (cfg.run.sabotage == Sabotage::double_policy) {
            PortfolioPolicy doubled;
            doubled.label = policy.label + " x2";
            doubled.amounts = [inner = policy.amounts, n = market.n](int k, const Path& p,
                                                                     double w, double* out) {
                inner(k, p, w, out);
                for (int i = 0; i < n; ++i) out[i] *= 2.0;
            };
            policy = std::move(doubled);
        }
        ReplicationResult rep = replication_test(
            "replication[" + policy.label + "]", market, policy, x0, solve.y, utility, ensemble,
            0.05, est.admissibility_rel_tol * x0, Fingerprint::from(rep_cfg, market.horizon));
        reports.push_back(rep.report);
    }

    // probabilistic sanity
    {
        EstimatorConfig sanity = est;
        sanity.n_outer = std::max(est.n_outer, 20000);
        auto checks = assumption_checks(market, utility, solve.y, sanity);
        reports.insert(reports.end(), checks.begin(), checks.end());
    }

    emit_reports(cfg, reports, "verify_report");
    echo_effective_config(cfg);
    const bool all_pass =
        std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.pass; });
    std::cout << (all_pass ? "VERIFY PASS" : "VERIFY FAIL") << "\n";
    return all_pass ? 0 : 1;
}

int run_converge(const ExperimentConfig& cfg) {
    const MarketModel market = build_market(cfg.market);
    const UtilitySpec utility = build_utility(cfg.utility);
    SweepLists sweeps;
    sweeps.bump_sizes = cfg.sweeps.bump_sizes;
    sweeps.inner_counts = cfg.sweeps.inner_counts;
    sweeps.step_counts = cfg.sweeps.step_counts;
    if (utility.family() != UtilityFamily::power_utility) sweeps.bump_sizes.clear();

    EstimatorConfig est = cfg.estimator;
    est.n_outer = std::min(est.n_outer, 256);  // replication sweep budget
    const auto reports = convergence_study(market, utility, cfg.utility.x0, est, sweeps);
    emit_reports(cfg, reports, "converge_report");
    echo_effective_config(cfg);
    const bool all_pass =
        std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.pass; });
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal portfolios in complete Wiener-driven markets"};
    app.require_subcommand(1);

    std::string config_path;
    long long seed_override = -1;
    std::string out_override, format_override;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--seed", seed_override, "override estimator.seed");
    app.add_option("--out", out_override, "override run.out_dir");
    app.add_option("--format", format_override, "override run.format (csv|json)")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* solve_cmd = app.add_subcommand("solve-multiplier", "solve the budget multiplier");
    auto* portfolio_cmd = app.add_subcommand("portfolio", "per-node optimal portfolio table");
    auto* verify_cmd = app.add_subcommand("verify", "statistical verification suite");
    auto* converge_cmd = app.add_subcommand("converge", "bias/variance sweeps");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg =
            load_config(config_path, seed_override, out_override, format_override);
        apply_backend(cfg);
        if (solve_cmd->parsed()) return run_solve_multiplier(cfg);
        if (portfolio_cmd->parsed()) return run_portfolio(cfg);
        if (verify_cmd->parsed()) return run_verify(cfg);
        if (converge_cmd->parsed()) return run_converge(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
