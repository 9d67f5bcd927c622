#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "portopt/funcalc.hpp"
#include "portopt/optimizer.hpp"

namespace portopt {

/// Everything needed to re-run a statistic bit-exactly: seeds, budgets and
/// the kernel backend the numbers were produced with.
struct Fingerprint {
    uint64_t seed = 0;
    int steps = 0;
    int n_outer = 0;
    int m_inner = 0;
    double bump_h = 0.0;
    std::string backend;
    std::string extra;

    static Fingerprint from(const EstimatorConfig& config, double horizon,
                            std::string extra = {});
};

struct TestReport {
    std::string name;
    double statistic = 0.0;
    double target = 0.0;
    double tolerance = 0.0;  // the band actually applied (3·se + slack, bound, ...)
    bool pass = false;
    std::string detail;
    Fingerprint fingerprint;
};

void write_reports_json(std::ostream& os, const std::vector<TestReport>& reports);
void print_reports_table(std::ostream& os, const std::vector<TestReport>& reports);

/// Per-node mean within 3 standard errors (+ `target_slack` for targets that
/// are themselves known only up to a solver tolerance).  The test passes when
/// at least 95% of nodes are inside their bands — the multiple-testing slack
/// for one band per node.  Reported statistic is the worst node's mean.
TestReport martingale_flatness(const std::string& name,
                               const std::vector<std::vector<double>>& samples_per_node,
                               double target, double target_slack, Fingerprint fp);

/// M(t_k, ω_j) samples for every node over a fresh outer ensemble (member j
/// uses outer stream j, which also keys its inner extensions).
std::vector<std::vector<double>> deflated_wealth_samples(const DeflatedWealthFunctional& f,
                                                         int n_outer);

struct ReplicationResult {
    TestReport report;
    double rel_rmse = 0.0;
    double admissible_rate = 0.0;
};

/// Simulates wealth under `policy` over the ensemble and compares X(T)
/// against the optimal claim I(𝒴·H(T)) pathwise.
ReplicationResult replication_test(const std::string& name, const MarketModel& market,
                                   const PortfolioPolicy& policy, double x0, double multiplier,
                                   const UtilitySpec& utility, const PathEnsemble& ensemble,
                                   double rel_rmse_bound, double admissibility_tol,
                                   Fingerprint fp);

struct RepresentationCase {
    std::string label;
    std::function<NonAnticipativeFunctional(TimeGrid)> make;
};

/// Residual RMS of the constructive representation across a K-refinement,
/// requiring decrease with consecutive ratios inside `band`×√2.  Functionals
/// that represent exactly (residual at rounding level) pass outright.
std::vector<TestReport> representation_suite(const std::vector<RepresentationCase>& cases,
                                             const std::vector<int>& step_counts, int dim,
                                             int n_paths, const EstimatorConfig& config,
                                             double horizon);

struct SweepLists {
    std::vector<double> bump_sizes;
    std::vector<int> inner_counts;
    std::vector<int> step_counts;
};

/// Bias/variance structure sweeps:
///  - bump h: central-difference error on the power π*/X* ratio, ratio ≈ (h_i/h_{i+1})²
///  - inner m: reported ∇_W M standard error, ratio ≈ √(m_{i+1}/m_i)
///  - steps K: replication RMSE, ratio ≈ √(K_{i+1}/K_i)
/// Ratio bands are [0.6, 1.6] × theoretical.
std::vector<TestReport> convergence_study(const MarketModel& market, const UtilitySpec& utility,
                                          double x0, const EstimatorConfig& config,
                                          const SweepLists& sweeps);

/// E[Z(T)] ≈ 1 (the likelihood is a true martingale for the built-in bounded
/// models) and stability of the sampled second moment of H(T)I(yH(T)) under
/// doubling of the sample count.
std::vector<TestReport> assumption_checks(const MarketModel& market, const UtilitySpec& utility,
                                          double y, const EstimatorConfig& config);

}  // namespace portopt
