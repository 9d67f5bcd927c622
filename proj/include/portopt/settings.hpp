#pragma once

#include <cmath>
#include <cstdint>

#include "portopt/grid.hpp"

namespace portopt {

/// Numeric budgets and tolerance knobs shared by the estimators.
struct EstimatorConfig {
    int steps = 64;           // K
    int n_outer = 10000;      // outer Monte Carlo paths
    int m_inner = 10000;      // inner extensions per (t, ω)
    int n_budget = 200000;    // paths behind the budget constraint
    double bump_h = 0.0;      // vertical bump; <= 0 means 0.05·√T
    uint64_t seed = 12345;

    double multiplier_tol_closed = 1e-6;  // |budget - x0| / x0, zero-variance budgets
    double multiplier_tol_mc = 1e-3;      // same, Monte Carlo budgets
    double domain_floor = 1e-12;          // clip for U evaluation
    double admissibility_rel_tol = 1e-12; // × x0

    double bump(double horizon) const {
        return bump_h > 0.0 ? bump_h : 0.05 * std::sqrt(horizon);
    }
    TimeGrid grid(double horizon) const { return TimeGrid(horizon, steps); }
};

}  // namespace portopt
