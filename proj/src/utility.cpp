#include "portopt/utility.hpp"

#include <cmath>

#include "portopt/ensemble.hpp"
#include "portopt/kernels.hpp"
#include "portopt/linalg.hpp"
#include "portopt/parallel.hpp"
#include "portopt/rng.hpp"

namespace portopt {

UtilitySpec UtilitySpec::log_utility() {
    UtilitySpec s;
    s.family_ = UtilityFamily::log_utility;
    s.label_ = "log";
    s.path_independent_ = true;
    s.u_ = [](double x) { return std::log(x); };
    s.u_prime_ = [](double x) { return 1.0 / x; };
    s.inverse_marginal_ = [](double y) { return 1.0 / y; };
    // H·I(yH) = H/(yH) = 1/y identically.
    s.payoff_ = [](double y, double) { return 1.0 / y; };
    return s;
}

UtilitySpec UtilitySpec::power_utility(double gamma) {
    if (!(gamma < 1.0) || gamma == 0.0)
        throw InvalidArgument("power utility requires gamma < 1 and gamma != 0");
    UtilitySpec s;
    s.family_ = UtilityFamily::power_utility;
    s.gamma_ = gamma;
    s.label_ = "power";
    const double inv_gm1 = 1.0 / (gamma - 1.0);
    const double exponent = gamma * inv_gm1;  // γ/(γ-1)
    s.u_ = [gamma](double x) { return std::pow(x, gamma) / gamma; };
    s.u_prime_ = [gamma](double x) { return std::pow(x, gamma - 1.0); };
    s.inverse_marginal_ = [inv_gm1](double y) { return std::pow(y, inv_gm1); };
    // H·I(yH) = y^{1/(γ-1)} H^{γ/(γ-1)}, evaluated in log space.
    s.payoff_ = [inv_gm1, exponent](double y, double log_h) {
        return std::exp(inv_gm1 * std::log(y) + exponent * log_h);
    };
    return s;
}

UtilitySpec UtilitySpec::custom(std::string label, std::function<double(double)> u,
                                std::function<double(double)> u_prime,
                                std::function<double(double)> inverse_marginal,
                                double marginal_at_zero) {
    UtilitySpec s;
    s.family_ = UtilityFamily::custom;
    s.label_ = std::move(label);
    s.u_ = std::move(u);
    s.u_prime_ = std::move(u_prime);
    s.inverse_marginal_ = std::move(inverse_marginal);
    s.marginal_at_zero_ = marginal_at_zero;
    s.payoff_ = [inv = s.inverse_marginal_, cap = marginal_at_zero](double y, double log_h) {
        const double h = std::exp(log_h);
        const double z = y * h;
        if (cap > 0.0 && z >= cap) return 0.0;  // generalized inverse: I = 0 past U'(0+)
        return h * inv(z);
    };
    return s;
}

double UtilitySpec::inverse_marginal(double y) const {
    if (!(y > 0.0)) throw InvalidArgument("inverse_marginal: y must be > 0");
    if (marginal_at_zero_ > 0.0 && y >= marginal_at_zero_) return 0.0;
    return inverse_marginal_(y);
}

namespace {

std::vector<double> budget_log_h_samples(const MarketModel& market,
                                         const EstimatorConfig& config) {
    const TimeGrid grid = config.grid(market.horizon);
    const rng::Key key = rng::key_from_seed(config.seed);
    const int n = market.n;
    const int K = grid.steps;
    const double sqrt_dt = std::sqrt(grid.dt());

    std::vector<double> log_h(config.n_budget);
    parallel_for(config.n_budget, [&](int64_t begin, int64_t end) {
        std::vector<double> normals(static_cast<std::size_t>(K) * n);
        std::vector<double> levels(static_cast<std::size_t>(K + 1) * n);
        for (int64_t j = begin; j < end; ++j) {
            rng::fill_normals(key, rng::budget_stream(static_cast<uint64_t>(j)), 0, normals);
            for (int i = 0; i < n; ++i) levels[i] = 0.0;
            for (int k = 0; k < K; ++k) {
                const std::size_t row = static_cast<std::size_t>(k) * n;
                for (int i = 0; i < n; ++i)
                    levels[row + n + i] = levels[row + i] + sqrt_dt * normals[row + i];
            }
            Path path(grid, n, levels);
            DeflatorState state;
            double incr[linalg::kMaxDim];
            for (int k = 0; k < K; ++k) {
                for (int i = 0; i < n; ++i) incr[i] = path.increment(k, i);
                deflator_step(market, k, path, {incr, static_cast<std::size_t>(n)}, state,
                              nullptr);
            }
            log_h[j] = state.log_state_price();
            if (!std::isfinite(log_h[j]))
                throw NumericFailure(K, j, "budget: non-finite log state price");
        }
    });
    return log_h;
}

BudgetEstimate payoff_stats(const UtilitySpec& spec, std::span<const double> log_h, double y) {
    const std::size_t n = log_h.size();
    std::vector<double> values(n);
    for (std::size_t j = 0; j < n; ++j) {
        values[j] = spec.deflated_payoff(y, log_h[j]);
        if (!std::isfinite(values[j]))
            throw NumericFailure(-1, static_cast<long long>(j), "budget: non-finite summand");
    }
    double sum = 0.0, sumsq = 0.0;
    kernels::active().reduce_stats(values.data(), n, &sum, &sumsq);
    BudgetEstimate est;
    est.value = sum / static_cast<double>(n);
    const double var = std::max(0.0, (sumsq - sum * est.value) / (static_cast<double>(n) - 1.0));
    est.std_error = std::sqrt(var / static_cast<double>(n));
    return est;
}

}  // namespace

BudgetCurve::BudgetCurve(const UtilitySpec& spec, const MarketModel& market,
                         const EstimatorConfig& config)
    : spec_(spec) {
    if (config.n_budget < 2) throw InvalidArgument("BudgetCurve: n_budget must be >= 2");
    if (!spec.path_independent_payoff()) log_h_ = budget_log_h_samples(market, config);
}

BudgetEstimate BudgetCurve::eval(double y) const {
    if (!(y > 0.0)) throw InvalidArgument("budget: y must be > 0");
    if (spec_.path_independent_payoff()) {
        // H cancels pathwise; the Monte Carlo mean is the constant itself.
        return {spec_.deflated_payoff(y, 0.0), 0.0};
    }
    return payoff_stats(spec_, log_h_, y);
}

BudgetEstimate budget_expectation(const UtilitySpec& spec, const MarketModel& market, double y,
                                  const EstimatorConfig& config) {
    return BudgetCurve(spec, market, config).eval(y);
}

MultiplierSolve solve_multiplier(const UtilitySpec& spec, const MarketModel& market, double x0,
                                 const EstimatorConfig& config) {
    if (!(x0 > 0.0)) throw InvalidArgument("solve_multiplier: x0 must be > 0");
    const BudgetCurve curve(spec, market, config);
    const double tol =
        spec.path_independent_payoff() ? config.multiplier_tol_closed : config.multiplier_tol_mc;

    MultiplierSolve out;
    auto probe = [&](double y) {
        const BudgetEstimate est = curve.eval(y);
        out.history.emplace_back(y, est.value);
        ++out.iterations;
        return est;
    };

    // Bracket: budget is strictly decreasing in y.
    double lo = 1.0, hi = 1.0;
    BudgetEstimate at_lo = probe(lo);
    BudgetEstimate at_hi = at_lo;
    int expansions = 0;
    while (at_lo.value < x0) {
        lo *= 0.5;
        at_lo = probe(lo);
        if (++expansions > 120)
            throw UnattainableBudget("solve_multiplier: bracket expansion failed (x0 too large)");
    }
    expansions = 0;
    while (at_hi.value > x0) {
        hi *= 2.0;
        at_hi = probe(hi);
        if (++expansions > 120)
            throw UnattainableBudget("solve_multiplier: bracket expansion failed (x0 too small)");
    }
    out.bracket_lo = lo;
    out.bracket_hi = hi;

    double y = std::sqrt(lo * hi);
    BudgetEstimate at_y = probe(y);
    for (int it = 0; it < 400; ++it) {
        if (std::fabs(at_y.value - x0) <= tol * x0) break;
        if (hi / lo - 1.0 < 1e-15) break;  // bracket exhausted at machine precision
        if (at_y.value > x0)
            lo = y;
        else
            hi = y;
        y = std::sqrt(lo * hi);
        at_y = probe(y);
    }
    if (std::fabs(at_y.value - x0) > tol * x0)
        throw UnattainableBudget("solve_multiplier: bisection failed to meet tolerance");

    out.y = y;
    out.budget = at_y.value;
    out.budget_std_error = at_y.std_error;
    return out;
}

ObjectiveEstimate realized_objective(const UtilitySpec& spec, std::span<const double> samples,
                                     double floor) {
    if (samples.empty()) throw InvalidArgument("realized_objective: no samples");
    ObjectiveEstimate est;
    double sum = 0.0, sumsq = 0.0;
    std::size_t clipped = 0;
    for (double x : samples) {
        const double xc = std::max(x, floor);
        if (xc == floor) ++clipped;
        const double u = spec.value(xc);
        sum += u;
        sumsq += u * u;
    }
    const double n = static_cast<double>(samples.size());
    est.mean = sum / n;
    const double var = std::max(0.0, (sumsq - sum * est.mean) / std::max(1.0, n - 1.0));
    est.std_error = std::sqrt(var / n);
    est.degenerate = clipped == samples.size();
    return est;
}

}  // namespace portopt
