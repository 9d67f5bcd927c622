#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "portopt/path.hpp"

namespace portopt {

/// Coefficient rules evaluated at grid node k along a path.  Rules must be
/// non-anticipative (read ω only up to node k).  `deterministic` marks
/// families whose values do not depend on ω at all; those get precomputed
/// node grids and closed-form oracles.
struct Coefficients {
    std::function<double(int, const Path&)> rate;                  // r(t,ω), per year
    std::function<void(int, const Path&, double*)> drift;          // α(t,ω), n-vector
    std::function<void(int, const Path&, double*)> vol;            // σ(t,ω), n×n row-major
    bool deterministic = false;
    std::string label;
};

struct MarketModel {
    int n = 1;
    double horizon = 1.0;
    Coefficients coeffs;
    std::vector<double> s0;      // initial prices, componentwise > 0
    double cond_cap = 1e8;       // σ conditioning limit; worse is an error

    static MarketModel constant(double horizon, double r, std::vector<double> alpha,
                                std::vector<double> sigma, std::vector<double> s0,
                                double cond_cap = 1e8);

    // r(t) = r0 + r1 t, α_i(t) = α0_i + α1_i t, σ(t) = σ0 · (1 + vol_slope·t).
    static MarketModel linear_in_time(double horizon, double r0, double r1,
                                      std::vector<double> alpha0, std::vector<double> alpha1,
                                      std::vector<double> sigma0, double vol_slope,
                                      std::vector<double> s0, double cond_cap = 1e8);

    // Path-dependent demo: σ(t,ω) = σ0 · (1 + κ·tanh(max_{s≤t} ω_1(s))), r and α
    // constant.  Bounded, non-anticipative, and genuinely path-dependent.
    static MarketModel running_max_vol(double horizon, double r, std::vector<double> alpha,
                                       std::vector<double> sigma0, double kappa,
                                       std::vector<double> s0, double cond_cap = 1e8);
};

/// Per-node deflator trajectories along one path (Itô sums are left-point
/// and recomputed from the path's increments, so vertical bumps propagate).
struct DeflatorBundle {
    std::vector<double> money_market;  // B
    std::vector<double> likelihood;    // Z
    std::vector<double> state_price;   // H = Z/B
    std::vector<double> log_state_price;
    std::vector<double> theta;  // (K+1) × n, node-major
};

/// θ(t) = σ(t,ω)^{-1}(α(t,ω) - r(t,ω)·1), by linear solve.
std::vector<double> market_price_of_risk(const MarketModel& model, int node, const Path& path);

DeflatorBundle deflators(const MarketModel& model, const Path& path);

void write_deflators_csv(std::ostream& os, const MarketModel& model,
                         const std::vector<const Path*>& paths);

/// Log-Euler stock prices along the path; strictly positive by construction.
/// Returns (K+1) × n node-major prices.
std::vector<double> simulate_stocks(const MarketModel& model, const Path& path);

/// π(t_k, ω, X_k): currency amounts in each stock; the money-market amount
/// is implied by self-financing (π⁰ = X - π'1).
struct PortfolioPolicy {
    std::string label;
    std::function<void(int, const Path&, double wealth, double*)> amounts;
};

/// Euler wealth under self-financing dynamics:
/// X_{k+1} = X_k + X_k r Δt + π'(α - r1) Δt + π'σ ΔW_k.
std::vector<double> wealth_under_policy(const MarketModel& model, const PortfolioPolicy& policy,
                                        double x0, const Path& path);

struct AdmissibilityReport {
    bool admissible = true;
    int first_violation = -1;
};

/// X(t) ≥ -tolerance at every node.
AdmissibilityReport check_admissible(std::span<const double> wealth, double tolerance);

// --- internal walking primitives shared with the optimizer ------------------

/// Left-point accumulators for ∫r ds, ∫θ'dW and ∫|θ|² ds along a path.
struct DeflatorState {
    double int_r = 0.0;        // Σ r_k Δt
    double int_theta_dw = 0.0; // Σ θ_k'ΔW_k
    double int_theta_sq = 0.0; // Σ |θ_k|²Δt

    double log_state_price() const { return -int_r - int_theta_dw - 0.5 * int_theta_sq; }
};

/// Evaluates θ at (node, path) into `theta_out` and advances the accumulators
/// with the increment arriving at node+1.  Throws SingularVolatility when σ
/// breaches the conditioning cap.
void deflator_step(const MarketModel& model, int node, const Path& path,
                   std::span<const double> increment, DeflatorState& state, double* theta_out);

/// θ and conditioning check only (no accumulation).
void eval_theta(const MarketModel& model, int node, const Path& path, double* theta_out,
                double* cond_out = nullptr);

}  // namespace portopt
