#pragma once

#include <string>
#include <vector>

#include "portopt/market.hpp"
#include "portopt/settings.hpp"
#include "portopt/utility.hpp"

namespace portopt {

enum class MarketFamily { constant, time_varying_deterministic, path_dependent_demo };
enum class OutputFormat { csv, json };
enum class Sabotage { none, double_policy, drift_martingale };

struct MarketBlock {
    MarketFamily family = MarketFamily::constant;
    int n = 1;
    double horizon = 1.0;
    double rate = 0.01;
    double rate_slope = 0.0;           // time-varying family
    std::vector<double> alpha{0.05};
    std::vector<double> alpha_slope;   // time-varying family; defaults to zeros
    std::vector<double> sigma{0.2};    // n×n row-major
    double vol_slope = 0.0;            // time-varying family
    double kappa = 0.5;                // path-dependent demo
    std::vector<double> s0{1.0};
    double cond_cap = 1e8;
};

struct UtilityBlock {
    UtilityFamily family = UtilityFamily::log_utility;
    double gamma = 0.5;  // power only
    double x0 = 1.0;
};

struct RunBlock {
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::csv;
    Sabotage sabotage = Sabotage::none;
    std::string backend = "auto";  // auto | scalar | avx2
    int path_index = 0;            // outer member shown by `portfolio`
};

struct SweepBlock {
    std::vector<double> bump_sizes{0.2, 0.1, 0.05};
    std::vector<int> inner_counts{100, 1000, 10000};
    std::vector<int> step_counts{32, 64, 128};
};

struct ExperimentConfig {
    MarketBlock market;
    UtilityBlock utility;
    EstimatorConfig estimator;
    RunBlock run;
    SweepBlock sweeps;
};

/// Strict parse: unknown keys are rejected (with a nearest-key suggestion),
/// constraint violations carry the dotted field path.
ExperimentConfig parse_config(const std::string& json_text);

/// The effective config with every default materialized; parsing the echo
/// reproduces the config exactly.
std::string echo_config(const ExperimentConfig& config);

MarketModel build_market(const MarketBlock& block);
UtilitySpec build_utility(const UtilityBlock& block);

std::string to_string(MarketFamily f);
std::string to_string(OutputFormat f);
std::string to_string(Sabotage s);

}  // namespace portopt
