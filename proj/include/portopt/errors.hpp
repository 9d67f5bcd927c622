#pragma once

#include <stdexcept>
#include <string>

namespace portopt {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Volatility matrix failed the invertibility / conditioning requirement.
struct SingularVolatility : std::runtime_error {
    double condition_estimate;
    int node;
    SingularVolatility(double cond, int node_, const std::string& what)
        : std::runtime_error(what), condition_estimate(cond), node(node_) {}
};

// A floating-point evaluation produced NaN/Inf somewhere in the pipeline.
struct NumericFailure : std::runtime_error {
    int node;
    long long extension_id;  // -1 when not an inner-simulation failure
    NumericFailure(int node_, long long ext, const std::string& what)
        : std::runtime_error(what), node(node_), extension_id(ext) {}
};

struct PolicyEvaluationError : std::runtime_error {
    int node;
    long long path_id;
    PolicyEvaluationError(int node_, long long path, const std::string& what)
        : std::runtime_error(what), node(node_), path_id(path) {}
};

struct UnattainableBudget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config validation failure; `field` is the dotted path of the offending key.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string field_, const std::string& what)
        : std::runtime_error(field_.empty() ? what : field_ + ": " + what),
          field(std::move(field_)) {}
};

}  // namespace portopt
