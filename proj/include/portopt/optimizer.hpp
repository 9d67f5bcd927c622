#pragma once

#include <memory>
#include <vector>

#include "portopt/funcalc.hpp"
#include "portopt/market.hpp"
#include "portopt/settings.hpp"
#include "portopt/utility.hpp"

namespace portopt {

struct EvalStats {
    double mean = 0.0;
    double std_error = 0.0;  // inner Monte Carlo standard error
};

/// M(t,ω) = Ê[H(T)·I(𝒴·H(T)) | ω up to t]: the deflated optimal-wealth
/// process, estimated by averaging the deflated payoff over m Gaussian
/// extensions of the stopped history.
///
/// Inner extension j at (outer member p, node k) draws from the counter
/// stream (seed, p, k, j) regardless of the path's values, so re-evaluating
/// on a bumped path reuses identical inner randomness (common random
/// numbers).  Evaluations are pure and thread-safe.
///
/// Markets with deterministic coefficients use a batched estimator (node
/// θ-grid + lane-major increment batches through the kernels module); the
/// general walk handles path-dependent coefficients.
class DeflatedWealthFunctional {
public:
    DeflatedWealthFunctional(MarketModel market, UtilitySpec utility, double multiplier,
                             const EstimatorConfig& config);

    double evaluate(int node, const Path& path) const;
    EvalStats evaluate_stats(int node, const Path& path) const;

    /// ∇_W M by CRN central differences.  At interior nodes this is the
    /// funcalc vertical derivative (path bump at the node).  At node 0 a
    /// path bump cannot reach any increment, so the same central difference
    /// is applied to the first inner increment instead; that estimates the
    /// time-0 integrand the representation needs.
    void gradient(int node, const Path& path, double h, double* out,
                  EvalStats* per_coord_stats = nullptr) const;

    double multiplier() const { return multiplier_; }
    int inner_count() const { return config_.m_inner; }
    const MarketModel& market() const { return market_; }
    const UtilitySpec& utility() const { return utility_; }
    const EstimatorConfig& config() const { return config_; }
    const TimeGrid& grid() const { return grid_; }

    NonAnticipativeFunctional as_functional() const;

private:
    struct Workspace;
    Workspace& workspace() const;

    EvalStats eval_impl(int node, const Path& path, int bump_incr_coord,
                        double bump_incr_h) const;
    EvalStats eval_deterministic(int node, const Path& path, int bump_incr_coord,
                                 double bump_incr_h) const;
    EvalStats eval_generic(int node, const Path& path, int bump_incr_coord,
                           double bump_incr_h) const;

    MarketModel market_;
    UtilitySpec utility_;
    double multiplier_;
    EstimatorConfig config_;
    TimeGrid grid_;
    uint64_t instance_tag_;

    // node grids for deterministic coefficient families
    bool deterministic_ = false;
    std::vector<double> theta_grid_;    // (K+1) × n
    std::vector<double> int_r_grid_;    // Σ r Δt prefix, K+1 entries
    std::vector<double> int_q_grid_;    // Σ |θ|²Δt prefix, K+1 entries
};

struct PortfolioResult {
    int node = 0;
    double time = 0.0;
    std::vector<double> pi;      // currency amounts per stock
    double x_star = 0.0;         // M / H
    double m_value = 0.0;        // deflated wealth M(t,ω)
    std::vector<double> grad_m;  // ∇_W M estimate
    std::vector<double> theta;
    double state_price = 0.0;    // H(t,ω)
    double bump_h = 0.0;
    double inner_std_error = 0.0;
    double sigma_cond = 0.0;
};

/// Optimal wealth X*(t,ω) = M(t,ω) / H(t,ω).
double optimal_wealth(const DeflatedWealthFunctional& f, int node, const Path& path);

/// π*(t) from σ(t)'π = (∇_W M + θ M)/H, solved (never inverted).
PortfolioResult optimal_portfolio(const DeflatedWealthFunctional& f, int node, const Path& path,
                                  double h);

/// π*(t,ω) packaged as a policy for wealth simulation / replication.
PortfolioPolicy optimal_policy(std::shared_ptr<const DeflatedWealthFunctional> f, double h);

struct OraclePoint {
    double x_star = 0.0;
    std::vector<double> pi;
};

/// Log-utility closed form: X* = x0/H, π* = (σσ')⁻¹(α - r1)·x0/H.
OraclePoint closed_form_log(const MarketModel& market, double x0, int node, const Path& path);

/// Power-utility closed form for deterministic coefficients, evaluated with
/// the same left-point grid sums as the simulator:
///   X*(t) = (x0/H)·exp(-c·∫θ'dW - c²/2·∫|θ|²),  c = γ/(γ-1),
///   π*(t) = (σσ')⁻¹(α - r1)·X*(t)/(1-γ).
OraclePoint closed_form_power(const MarketModel& market, double gamma, double x0, int node,
                              const Path& path);

/// Closed-form integrand of the power case: M(t)·(-γ/(γ-1))·θ(t).
std::vector<double> power_integrand(const MarketModel& market, double gamma, int node,
                                    const Path& path, double m_value);

}  // namespace portopt
