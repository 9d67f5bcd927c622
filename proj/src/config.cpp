#include "portopt/config.hpp"

#include <algorithm>
#include <cstdint>

#include <json.hpp>

#include "portopt/report.hpp"

namespace portopt {

namespace {

using nlohmann::json;

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

void reject_unknown_keys(const json& obj, const std::string& prefix,
                         const std::vector<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) != allowed.end()) continue;
        std::string best;
        int best_dist = 4;
        for (const std::string& k : allowed) {
            const int d = edit_distance(it.key(), k);
            if (d < best_dist) {
                best_dist = d;
                best = k;
            }
        }
        std::string msg = "unknown key '" + it.key() + "'";
        if (!best.empty()) msg += ", did you mean '" + best + "'?";
        throw ConfigError(prefix.empty() ? it.key() : prefix, msg);
    }
}

double get_number(const json& obj, const std::string& prefix, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(prefix + "." + key, "must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& prefix, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError(prefix + "." + key, "must be an integer");
    return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& prefix, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw ConfigError(prefix + "." + key, "must be a string");
    return obj[key].get<std::string>();
}

std::vector<double> get_vector(const json& obj, const std::string& prefix, const std::string& key,
                               std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_array()) throw ConfigError(prefix + "." + key, "must be an array of numbers");
    std::vector<double> out;
    for (const json& v : obj[key]) {
        if (!v.is_number()) throw ConfigError(prefix + "." + key, "must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

// σ accepts [[...],[...]] (rows) or a flat array.
std::vector<double> get_matrix(const json& obj, const std::string& prefix, const std::string& key,
                               std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& m = obj[key];
    if (!m.is_array()) throw ConfigError(prefix + "." + key, "must be a matrix");
    std::vector<double> out;
    if (!m.empty() && m[0].is_array()) {
        for (const json& row : m) {
            if (!row.is_array()) throw ConfigError(prefix + "." + key, "ragged matrix");
            for (const json& v : row) {
                if (!v.is_number()) throw ConfigError(prefix + "." + key, "non-numeric entry");
                out.push_back(v.get<double>());
            }
        }
    } else {
        for (const json& v : m) {
            if (!v.is_number()) throw ConfigError(prefix + "." + key, "non-numeric entry");
            out.push_back(v.get<double>());
        }
    }
    return out;
}

MarketFamily parse_market_family(const std::string& s) {
    if (s == "constant") return MarketFamily::constant;
    if (s == "time-varying-deterministic") return MarketFamily::time_varying_deterministic;
    if (s == "path-dependent-demo") return MarketFamily::path_dependent_demo;
    throw ConfigError("market.family",
                      "must be one of constant | time-varying-deterministic | "
                      "path-dependent-demo (got '" +
                          s + "')");
}

}  // namespace

std::string to_string(MarketFamily f) {
    switch (f) {
        case MarketFamily::constant: return "constant";
        case MarketFamily::time_varying_deterministic: return "time-varying-deterministic";
        case MarketFamily::path_dependent_demo: return "path-dependent-demo";
    }
    return "?";
}

std::string to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

std::string to_string(Sabotage s) {
    switch (s) {
        case Sabotage::none: return "none";
        case Sabotage::double_policy: return "double-policy";
        case Sabotage::drift_martingale: return "drift-martingale";
    }
    return "?";
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("", "config must be a JSON object");
    reject_unknown_keys(root, "", {"market", "utility", "estimator", "run", "sweeps"});

    ExperimentConfig cfg;

    if (root.contains("market")) {
        const json& m = root["market"];
        if (!m.is_object()) throw ConfigError("market", "must be an object");
        reject_unknown_keys(m, "market",
                            {"family", "n", "T", "r", "r_slope", "alpha", "alpha_slope", "sigma",
                             "vol_slope", "kappa", "s0", "cond_cap"});
        MarketBlock& b = cfg.market;
        b.family = parse_market_family(get_string(m, "market", "family", "constant"));
        b.n = get_int(m, "market", "n", 1);
        if (b.n < 1) throw ConfigError("market.n", "must be >= 1");
        b.horizon = get_number(m, "market", "T", 1.0);
        if (!(b.horizon > 0.0)) throw ConfigError("market.T", "must be > 0");
        b.rate = get_number(m, "market", "r", 0.01);
        b.rate_slope = get_number(m, "market", "r_slope", 0.0);
        b.alpha = get_vector(m, "market", "alpha", std::vector<double>(b.n, 0.05));
        if (static_cast<int>(b.alpha.size()) != b.n)
            throw ConfigError("market.alpha", "must have n entries");
        b.alpha_slope = get_vector(m, "market", "alpha_slope", std::vector<double>(b.n, 0.0));
        if (static_cast<int>(b.alpha_slope.size()) != b.n)
            throw ConfigError("market.alpha_slope", "must have n entries");
        std::vector<double> default_sigma(static_cast<std::size_t>(b.n) * b.n, 0.0);
        for (int i = 0; i < b.n; ++i) default_sigma[static_cast<std::size_t>(i) * b.n + i] = 0.2;
        b.sigma = get_matrix(m, "market", "sigma", default_sigma);
        if (b.sigma.size() != static_cast<std::size_t>(b.n) * b.n)
            throw ConfigError("market.sigma", "must be an n×n matrix");
        b.vol_slope = get_number(m, "market", "vol_slope", 0.0);
        b.kappa = get_number(m, "market", "kappa", 0.5);
        b.s0 = get_vector(m, "market", "s0", std::vector<double>(b.n, 1.0));
        if (static_cast<int>(b.s0.size()) != b.n)
            throw ConfigError("market.s0", "must have n entries");
        for (double v : b.s0)
            if (!(v > 0.0)) throw ConfigError("market.s0", "entries must be > 0");
        b.cond_cap = get_number(m, "market", "cond_cap", 1e8);
        if (!(b.cond_cap > 1.0)) throw ConfigError("market.cond_cap", "must be > 1");
    }

    if (root.contains("utility")) {
        const json& u = root["utility"];
        if (!u.is_object()) throw ConfigError("utility", "must be an object");
        reject_unknown_keys(u, "utility", {"family", "gamma", "x0"});
        UtilityBlock& b = cfg.utility;
        const std::string fam = get_string(u, "utility", "family", "log");
        if (fam == "log")
            b.family = UtilityFamily::log_utility;
        else if (fam == "power")
            b.family = UtilityFamily::power_utility;
        else
            throw ConfigError("utility.family", "must be log or power (got '" + fam + "')");
        b.gamma = get_number(u, "utility", "gamma", 0.5);
        if (b.family == UtilityFamily::power_utility && (!(b.gamma < 1.0) || b.gamma == 0.0))
            throw ConfigError("utility.gamma", "must satisfy gamma < 1 and gamma != 0");
        b.x0 = get_number(u, "utility", "x0", 1.0);
        if (!(b.x0 > 0.0)) throw ConfigError("utility.x0", "must be > 0");
    }

    if (root.contains("estimator")) {
        const json& e = root["estimator"];
        if (!e.is_object()) throw ConfigError("estimator", "must be an object");
        reject_unknown_keys(e, "estimator",
                            {"K", "n_outer", "m_inner", "n_budget", "bump_h", "seed",
                             "multiplier_tol_closed", "multiplier_tol_mc", "domain_floor",
                             "admissibility_rel_tol"});
        EstimatorConfig& b = cfg.estimator;
        b.steps = get_int(e, "estimator", "K", 64);
        if (b.steps < 1) throw ConfigError("estimator.K", "must be >= 1");
        b.n_outer = get_int(e, "estimator", "n_outer", 10000);
        if (b.n_outer < 1) throw ConfigError("estimator.n_outer", "must be >= 1");
        b.m_inner = get_int(e, "estimator", "m_inner", 10000);
        if (b.m_inner < 1) throw ConfigError("estimator.m_inner", "must be >= 1");
        b.n_budget = get_int(e, "estimator", "n_budget", 200000);
        if (b.n_budget < 2) throw ConfigError("estimator.n_budget", "must be >= 2");
        b.bump_h = get_number(e, "estimator", "bump_h", 0.0);
        if (b.bump_h < 0.0) throw ConfigError("estimator.bump_h", "must be >= 0 (0 = default)");
        if (e.contains("seed")) {
            if (!e["seed"].is_number_integer())
                throw ConfigError("estimator.seed", "must be an integer");
            b.seed = e["seed"].get<uint64_t>();
        }
        b.multiplier_tol_closed =
            get_number(e, "estimator", "multiplier_tol_closed", b.multiplier_tol_closed);
        b.multiplier_tol_mc = get_number(e, "estimator", "multiplier_tol_mc", b.multiplier_tol_mc);
        b.domain_floor = get_number(e, "estimator", "domain_floor", b.domain_floor);
        b.admissibility_rel_tol =
            get_number(e, "estimator", "admissibility_rel_tol", b.admissibility_rel_tol);
        for (const char* key :
             {"multiplier_tol_closed", "multiplier_tol_mc", "domain_floor",
              "admissibility_rel_tol"}) {
            if (e.contains(key) && !(e[key].get<double>() > 0.0))
                throw ConfigError(std::string("estimator.") + key, "must be > 0");
        }
    }

    if (root.contains("run")) {
        const json& r = root["run"];
        if (!r.is_object()) throw ConfigError("run", "must be an object");
        reject_unknown_keys(r, "run", {"out_dir", "format", "sabotage", "backend", "path_index"});
        RunBlock& b = cfg.run;
        b.out_dir = get_string(r, "run", "out_dir", "out");
        const std::string fmt = get_string(r, "run", "format", "csv");
        if (fmt == "csv")
            b.format = OutputFormat::csv;
        else if (fmt == "json")
            b.format = OutputFormat::json;
        else
            throw ConfigError("run.format", "must be csv or json");
        const std::string sab = get_string(r, "run", "sabotage", "none");
        if (sab == "none")
            b.sabotage = Sabotage::none;
        else if (sab == "double-policy")
            b.sabotage = Sabotage::double_policy;
        else if (sab == "drift-martingale")
            b.sabotage = Sabotage::drift_martingale;
        else
            throw ConfigError("run.sabotage",
                              "must be none | double-policy | drift-martingale");
        b.backend = get_string(r, "run", "backend", "auto");
        if (b.backend != "auto" && b.backend != "scalar" && b.backend != "avx2")
            throw ConfigError("run.backend", "must be auto | scalar | avx2");
        b.path_index = get_int(r, "run", "path_index", 0);
        if (b.path_index < 0) throw ConfigError("run.path_index", "must be >= 0");
    }

    if (root.contains("sweeps")) {
        const json& s = root["sweeps"];
        if (!s.is_object()) throw ConfigError("sweeps", "must be an object");
        reject_unknown_keys(s, "sweeps", {"bump_sizes", "inner_counts", "step_counts"});
        SweepBlock& b = cfg.sweeps;
        b.bump_sizes = get_vector(s, "sweeps", "bump_sizes", b.bump_sizes);
        for (double h : b.bump_sizes)
            if (!(h > 0.0)) throw ConfigError("sweeps.bump_sizes", "entries must be > 0");
        if (s.contains("inner_counts")) {
            b.inner_counts.clear();
            for (const json& v : s["inner_counts"]) {
                if (!v.is_number_integer() || v.get<int>() < 1)
                    throw ConfigError("sweeps.inner_counts", "entries must be positive integers");
                b.inner_counts.push_back(v.get<int>());
            }
        }
        if (s.contains("step_counts")) {
            b.step_counts.clear();
            for (const json& v : s["step_counts"]) {
                if (!v.is_number_integer() || v.get<int>() < 1)
                    throw ConfigError("sweeps.step_counts", "entries must be positive integers");
                b.step_counts.push_back(v.get<int>());
            }
        }
    }

    return cfg;
}

std::string echo_config(const ExperimentConfig& c) {
    JsonValue root = JsonValue::object();

    JsonValue market = JsonValue::object();
    market.set("family", JsonValue::str(to_string(c.market.family)))
        .set("n", JsonValue::integer(c.market.n))
        .set("T", JsonValue::num(c.market.horizon))
        .set("r", JsonValue::num(c.market.rate))
        .set("r_slope", JsonValue::num(c.market.rate_slope));
    JsonValue alpha = JsonValue::array();
    for (double v : c.market.alpha) alpha.push(JsonValue::num(v));
    market.set("alpha", std::move(alpha));
    JsonValue alpha_slope = JsonValue::array();
    for (double v : c.market.alpha_slope) alpha_slope.push(JsonValue::num(v));
    market.set("alpha_slope", std::move(alpha_slope));
    JsonValue sigma = JsonValue::array();
    for (int i = 0; i < c.market.n; ++i) {
        JsonValue row = JsonValue::array();
        for (int j = 0; j < c.market.n; ++j)
            row.push(JsonValue::num(c.market.sigma[static_cast<std::size_t>(i) * c.market.n + j]));
        sigma.push(std::move(row));
    }
    market.set("sigma", std::move(sigma))
        .set("vol_slope", JsonValue::num(c.market.vol_slope))
        .set("kappa", JsonValue::num(c.market.kappa));
    JsonValue s0 = JsonValue::array();
    for (double v : c.market.s0) s0.push(JsonValue::num(v));
    market.set("s0", std::move(s0)).set("cond_cap", JsonValue::num(c.market.cond_cap));
    root.set("market", std::move(market));

    JsonValue utility = JsonValue::object();
    utility
        .set("family", JsonValue::str(c.utility.family == UtilityFamily::log_utility ? "log"
                                                                                     : "power"))
        .set("gamma", JsonValue::num(c.utility.gamma))
        .set("x0", JsonValue::num(c.utility.x0));
    root.set("utility", std::move(utility));

    JsonValue estimator = JsonValue::object();
    estimator.set("K", JsonValue::integer(c.estimator.steps))
        .set("n_outer", JsonValue::integer(c.estimator.n_outer))
        .set("m_inner", JsonValue::integer(c.estimator.m_inner))
        .set("n_budget", JsonValue::integer(c.estimator.n_budget))
        .set("bump_h", JsonValue::num(c.estimator.bump_h))
        .set("seed", JsonValue::integer(static_cast<long long>(c.estimator.seed)))
        .set("multiplier_tol_closed", JsonValue::num(c.estimator.multiplier_tol_closed))
        .set("multiplier_tol_mc", JsonValue::num(c.estimator.multiplier_tol_mc))
        .set("domain_floor", JsonValue::num(c.estimator.domain_floor))
        .set("admissibility_rel_tol", JsonValue::num(c.estimator.admissibility_rel_tol));
    root.set("estimator", std::move(estimator));

    JsonValue run = JsonValue::object();
    run.set("out_dir", JsonValue::str(c.run.out_dir))
        .set("format", JsonValue::str(to_string(c.run.format)))
        .set("sabotage", JsonValue::str(to_string(c.run.sabotage)))
        .set("backend", JsonValue::str(c.run.backend))
        .set("path_index", JsonValue::integer(c.run.path_index));
    root.set("run", std::move(run));

    JsonValue sweeps = JsonValue::object();
    JsonValue hs = JsonValue::array();
    for (double v : c.sweeps.bump_sizes) hs.push(JsonValue::num(v));
    sweeps.set("bump_sizes", std::move(hs));
    JsonValue ms = JsonValue::array();
    for (int v : c.sweeps.inner_counts) ms.push(JsonValue::integer(v));
    sweeps.set("inner_counts", std::move(ms));
    JsonValue ks = JsonValue::array();
    for (int v : c.sweeps.step_counts) ks.push(JsonValue::integer(v));
    sweeps.set("step_counts", std::move(ks));
    root.set("sweeps", std::move(sweeps));

    return root.dump() + "\n";
}

MarketModel build_market(const MarketBlock& b) {
    switch (b.family) {
        case MarketFamily::constant:
            return MarketModel::constant(b.horizon, b.rate, b.alpha, b.sigma, b.s0, b.cond_cap);
        case MarketFamily::time_varying_deterministic:
            return MarketModel::linear_in_time(b.horizon, b.rate, b.rate_slope, b.alpha,
                                               b.alpha_slope, b.sigma, b.vol_slope, b.s0,
                                               b.cond_cap);
        case MarketFamily::path_dependent_demo:
            return MarketModel::running_max_vol(b.horizon, b.rate, b.alpha, b.sigma, b.kappa,
                                                b.s0, b.cond_cap);
    }
    throw InvalidArgument("build_market: unknown family");
}

UtilitySpec build_utility(const UtilityBlock& b) {
    if (b.family == UtilityFamily::log_utility) return UtilitySpec::log_utility();
    if (b.family == UtilityFamily::power_utility) return UtilitySpec::power_utility(b.gamma);
    throw InvalidArgument("build_utility: unknown family");
}

}  // namespace portopt
