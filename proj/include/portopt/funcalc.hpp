#pragma once

#include <functional>
#include <string>
#include <vector>

#include "portopt/ensemble.hpp"
#include "portopt/path.hpp"

namespace portopt {

/// F(t_k, ω): depends on ω only through its values up to node k.  Evaluation
/// rules must be pure; stochastic functionals (inner Monte Carlo estimators)
/// must derive their randomness from (seed, ω.provenance, node, extension)
/// so that re-evaluation on a bumped path reuses identical draws.
struct NonAnticipativeFunctional {
    std::string label;
    std::function<double(int node, const Path&)> eval;

    double operator()(int node, const Path& path) const { return eval(node, path); }
};

/// Integrand on nodes t_0..t_{K-1} (left-point convention), one n-vector per
/// node, for a single path.
struct IntegrandProcess {
    TimeGrid grid;
    int dim = 1;
    std::vector<double> values;  // K * dim, node-major

    double at(int node, int coord) const {
        return values[static_cast<std::size_t>(node) * dim + coord];
    }
};

/// Central difference [F(t, ω+he_i 1_[t,T]) - F(t, ω-he_i 1_[t,T])] / 2h per
/// coordinate.  Common random numbers are the functional's responsibility
/// (see NonAnticipativeFunctional).
std::vector<double> vertical_derivative(const NonAnticipativeFunctional& f, int node,
                                        const Path& path, double h);

/// Forward difference on the stopped path, stepping exactly one grid node:
/// [F(t_{k+1}, ω_t) - F(t_k, ω_t)] / Δt.
double horizontal_derivative(const NonAnticipativeFunctional& f, int node, const Path& path);

/// Left-point Itô sum  Σ_k φ(t_k)' (ω(t_{k+1}) - ω(t_k)).
double discrete_stochastic_integral(const IntegrandProcess& phi, const Path& path);

struct ResidualReport {
    std::vector<double> residuals;  // per ensemble member
    double rms = 0.0;
};

/// Martingale-representation residual Y(T) - Y(0) - Σ ∇_W Y(t_k)'ΔW_k per
/// path, with the integrand computed node-by-node via vertical_derivative.
ResidualReport representation_residual(const NonAnticipativeFunctional& y,
                                       const PathEnsemble& ensemble, double h);

/// Spot-check F(t,ω) == F(t, ω stopped at t) on random paths (exact equality;
/// a correct implementation never reads past the stopping node).
bool check_non_anticipative(const NonAnticipativeFunctional& f, TimeGrid grid, int dim,
                            int n_paths, uint64_t seed);

}  // namespace portopt
