#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "portopt/market.hpp"
#include "portopt/settings.hpp"

namespace portopt {

enum class UtilityFamily { log_utility, power_utility, custom };

/// U, its marginal U', the generalized inverse I of U', and the deflated
/// terminal payoff H·I(yH) evaluated from log H.  The payoff hook exists so
/// each family can use its numerically natural form: for log utility H
/// cancels and the payoff is the constant 1/y; for power it is a single exp
/// of an affine function of log H.
class UtilitySpec {
public:
    static UtilitySpec log_utility();
    static UtilitySpec power_utility(double gamma);  // requires gamma < 1, gamma != 0
    static UtilitySpec custom(std::string label, std::function<double(double)> u,
                              std::function<double(double)> u_prime,
                              std::function<double(double)> inverse_marginal,
                              double marginal_at_zero = 0.0);  // 0 means U'(0+) = ∞

    UtilityFamily family() const { return family_; }
    double gamma() const { return gamma_; }
    const std::string& label() const { return label_; }

    double value(double x) const { return u_(x); }
    double marginal(double x) const { return u_prime_(x); }

    /// I(y); throws for y <= 0.  Returns 0 above a finite U'(0+).
    double inverse_marginal(double y) const;

    /// H(T)·I(y·H(T)) given log H(T).
    double deflated_payoff(double y, double log_h) const { return payoff_(y, log_h); }

    /// True when the deflated payoff does not depend on the path (log family):
    /// the conditional expectation is the constant itself and estimates carry
    /// zero inner variance.
    bool path_independent_payoff() const { return path_independent_; }

private:
    UtilitySpec() = default;
    UtilityFamily family_ = UtilityFamily::custom;
    double gamma_ = 0.0;
    std::string label_;
    bool path_independent_ = false;
    std::function<double(double)> u_, u_prime_, inverse_marginal_;
    double marginal_at_zero_ = 0.0;
    std::function<double(double, double)> payoff_;
};

struct BudgetEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct MultiplierSolve {
    double y = 0.0;            // 𝒴(x0)
    double budget = 0.0;       // achieved E[H I(yH)]
    double budget_std_error = 0.0;
    int iterations = 0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    std::vector<std::pair<double, double>> history;  // (y, budget) per step
};

/// Shared-path budget curve: one fixed ensemble of terminal log-H samples,
/// reused for every trial y.  This makes y ↦ budget(y) exactly monotone
/// (I is decreasing pathwise), so bisection cannot be defeated by noise.
class BudgetCurve {
public:
    BudgetCurve(const UtilitySpec& spec, const MarketModel& market,
                const EstimatorConfig& config);

    BudgetEstimate eval(double y) const;
    std::span<const double> log_h_samples() const { return log_h_; }

private:
    const UtilitySpec spec_;
    std::vector<double> log_h_;  // empty for path-independent payoffs
};

/// Monte Carlo E[H(T)·I(y·H(T))] on the fixed budget ensemble derived from
/// (config.seed, budget stream tag).
BudgetEstimate budget_expectation(const UtilitySpec& spec, const MarketModel& market, double y,
                                  const EstimatorConfig& config);

/// Bisection on log y for E[H(T)I(𝒴H(T))] = x0 over the shared path set.
MultiplierSolve solve_multiplier(const UtilitySpec& spec, const MarketModel& market, double x0,
                                 const EstimatorConfig& config);

struct ObjectiveEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    bool degenerate = false;  // every sample hit the domain floor
};

/// Sample mean of U over terminal wealth samples (clipped at `floor`).
ObjectiveEstimate realized_objective(const UtilitySpec& spec, std::span<const double> samples,
                                     double floor);

}  // namespace portopt
