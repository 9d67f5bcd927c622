#include "portopt/market.hpp"

#include <cmath>
#include <ostream>

#include "portopt/linalg.hpp"
#include "portopt/report.hpp"

namespace portopt {

namespace {

void validate_s0(int n, const std::vector<double>& s0) {
    if (static_cast<int>(s0.size()) != n)
        throw InvalidArgument("MarketModel: s0 must have one entry per stock");
    for (double v : s0)
        if (!(v > 0.0)) throw InvalidArgument("MarketModel: s0 must be strictly positive");
}

}  // namespace

MarketModel MarketModel::constant(double horizon, double r, std::vector<double> alpha,
                                  std::vector<double> sigma, std::vector<double> s0,
                                  double cond_cap) {
    const int n = static_cast<int>(alpha.size());
    if (n < 1) throw InvalidArgument("MarketModel: need at least one stock");
    if (sigma.size() != static_cast<std::size_t>(n) * n)
        throw InvalidArgument("MarketModel: sigma must be n×n");
    validate_s0(n, s0);
    MarketModel m;
    m.n = n;
    m.horizon = horizon;
    m.s0 = std::move(s0);
    m.cond_cap = cond_cap;
    m.coeffs.deterministic = true;
    m.coeffs.label = "constant";
    m.coeffs.rate = [r](int, const Path&) { return r; };
    m.coeffs.drift = [alpha = std::move(alpha), n](int, const Path&, double* out) {
        for (int i = 0; i < n; ++i) out[i] = alpha[i];
    };
    m.coeffs.vol = [sigma = std::move(sigma), n](int, const Path&, double* out) {
        for (int i = 0; i < n * n; ++i) out[i] = sigma[i];
    };
    return m;
}

MarketModel MarketModel::linear_in_time(double horizon, double r0, double r1,
                                        std::vector<double> alpha0, std::vector<double> alpha1,
                                        std::vector<double> sigma0, double vol_slope,
                                        std::vector<double> s0, double cond_cap) {
    const int n = static_cast<int>(alpha0.size());
    if (n < 1) throw InvalidArgument("MarketModel: need at least one stock");
    if (alpha1.size() != alpha0.size())
        throw InvalidArgument("MarketModel: alpha ramp size mismatch");
    if (sigma0.size() != static_cast<std::size_t>(n) * n)
        throw InvalidArgument("MarketModel: sigma must be n×n");
    validate_s0(n, s0);
    MarketModel m;
    m.n = n;
    m.horizon = horizon;
    m.s0 = std::move(s0);
    m.cond_cap = cond_cap;
    m.coeffs.deterministic = true;
    m.coeffs.label = "linear-in-time";
    m.coeffs.rate = [r0, r1](int k, const Path& p) { return r0 + r1 * p.grid().time(k); };
    m.coeffs.drift = [a0 = std::move(alpha0), a1 = std::move(alpha1), n](int k, const Path& p,
                                                                         double* out) {
        const double t = p.grid().time(k);
        for (int i = 0; i < n; ++i) out[i] = a0[i] + a1[i] * t;
    };
    m.coeffs.vol = [s = std::move(sigma0), vol_slope, n](int k, const Path& p, double* out) {
        const double f = 1.0 + vol_slope * p.grid().time(k);
        for (int i = 0; i < n * n; ++i) out[i] = s[i] * f;
    };
    return m;
}

MarketModel MarketModel::running_max_vol(double horizon, double r, std::vector<double> alpha,
                                         std::vector<double> sigma0, double kappa,
                                         std::vector<double> s0, double cond_cap) {
    const int n = static_cast<int>(alpha.size());
    if (n < 1) throw InvalidArgument("MarketModel: need at least one stock");
    if (sigma0.size() != static_cast<std::size_t>(n) * n)
        throw InvalidArgument("MarketModel: sigma must be n×n");
    validate_s0(n, s0);
    MarketModel m;
    m.n = n;
    m.horizon = horizon;
    m.s0 = std::move(s0);
    m.cond_cap = cond_cap;
    m.coeffs.deterministic = false;
    m.coeffs.label = "running-max-vol";
    m.coeffs.rate = [r](int, const Path&) { return r; };
    m.coeffs.drift = [alpha = std::move(alpha), n](int, const Path&, double* out) {
        for (int i = 0; i < n; ++i) out[i] = alpha[i];
    };
    m.coeffs.vol = [s = std::move(sigma0), kappa, n](int k, const Path& p, double* out) {
        double running_max = 0.0;
        for (int l = 0; l <= k; ++l) running_max = std::max(running_max, p.value(l, 0));
        const double f = 1.0 + kappa * std::tanh(running_max);
        for (int i = 0; i < n * n; ++i) out[i] = s[i] * f;
    };
    return m;
}

void eval_theta(const MarketModel& model, int node, const Path& path, double* theta_out,
                double* cond_out) {
    const int n = model.n;
    double sigma[linalg::kMaxDim * linalg::kMaxDim];
    double rhs[linalg::kMaxDim];
    model.coeffs.vol(node, path, sigma);
    model.coeffs.drift(node, path, rhs);
    const double r = model.coeffs.rate(node, path);
    for (int i = 0; i < n; ++i) rhs[i] -= r;
    const linalg::SolveInfo info = linalg::solve(n, sigma, rhs, theta_out);
    if (!info.ok || info.cond1 > model.cond_cap)
        throw SingularVolatility(info.cond1, node,
                                 "volatility matrix singular or ill-conditioned (cond1 ~ " +
                                     format_number(info.cond1) + ")");
    if (cond_out) *cond_out = info.cond1;
}

std::vector<double> market_price_of_risk(const MarketModel& model, int node, const Path& path) {
    std::vector<double> theta(model.n);
    eval_theta(model, node, path, theta.data());
    return theta;
}

void deflator_step(const MarketModel& model, int node, const Path& path,
                   std::span<const double> increment, DeflatorState& state, double* theta_out) {
    const int n = model.n;
    double theta_local[linalg::kMaxDim];
    double* theta = theta_out ? theta_out : theta_local;
    eval_theta(model, node, path, theta);
    const double r = model.coeffs.rate(node, path);
    const double dt = path.grid().dt();
    double tdw = 0.0, tsq = 0.0;
    for (int i = 0; i < n; ++i) {
        tdw += theta[i] * increment[i];
        tsq += theta[i] * theta[i];
    }
    state.int_r += r * dt;
    state.int_theta_dw += tdw;
    state.int_theta_sq += tsq * dt;
}

DeflatorBundle deflators(const MarketModel& model, const Path& path) {
    const int K = path.grid().steps;
    const int n = path.dim();
    if (n != model.n) throw InvalidArgument("deflators: path dimension != market dimension");

    DeflatorBundle bundle;
    bundle.money_market.resize(K + 1);
    bundle.likelihood.resize(K + 1);
    bundle.state_price.resize(K + 1);
    bundle.log_state_price.resize(K + 1);
    bundle.theta.resize(static_cast<std::size_t>(K + 1) * n);

    DeflatorState state;
    for (int k = 0; k <= K; ++k) {
        const double b = std::exp(state.int_r);
        const double z = std::exp(-state.int_theta_dw - 0.5 * state.int_theta_sq);
        if (!std::isfinite(b) || !std::isfinite(z))
            throw NumericFailure(k, -1, "deflators: exponential overflow");
        bundle.money_market[k] = b;
        bundle.likelihood[k] = z;
        bundle.state_price[k] = z / b;
        bundle.log_state_price[k] = state.log_state_price();
        double* theta_k = bundle.theta.data() + static_cast<std::size_t>(k) * n;
        if (k < K) {
            double incr[linalg::kMaxDim];
            for (int i = 0; i < n; ++i) incr[i] = path.increment(k, i);
            deflator_step(model, k, path, {incr, static_cast<std::size_t>(n)}, state, theta_k);
        } else {
            eval_theta(model, k, path, theta_k);
        }
    }
    return bundle;
}

void write_deflators_csv(std::ostream& os, const MarketModel& model,
                         const std::vector<const Path*>& paths) {
    os << "path_id,node,time,B";
    for (int i = 1; i <= model.n; ++i) os << ",theta_" << i;
    os << ",Z,H\n";
    for (std::size_t j = 0; j < paths.size(); ++j) {
        const Path& p = *paths[j];
        const DeflatorBundle d = deflators(model, p);
        for (int k = 0; k < p.nodes(); ++k) {
            os << j << "," << k << "," << format_number(p.grid().time(k)) << ","
               << format_number(d.money_market[k]);
            for (int i = 0; i < model.n; ++i)
                os << "," << format_number(d.theta[static_cast<std::size_t>(k) * model.n + i]);
            os << "," << format_number(d.likelihood[k]) << ","
               << format_number(d.state_price[k]) << "\n";
        }
    }
}

std::vector<double> simulate_stocks(const MarketModel& model, const Path& path) {
    const int K = path.grid().steps;
    const int n = model.n;
    if (path.dim() != n) throw InvalidArgument("simulate_stocks: dimension mismatch");
    const double dt = path.grid().dt();

    std::vector<double> log_prices(static_cast<std::size_t>(K + 1) * n);
    for (int i = 0; i < n; ++i) log_prices[i] = std::log(model.s0[i]);

    double alpha[linalg::kMaxDim];
    double sigma[linalg::kMaxDim * linalg::kMaxDim];
    for (int k = 0; k < K; ++k) {
        model.coeffs.drift(k, path, alpha);
        model.coeffs.vol(k, path, sigma);
        const std::size_t row = static_cast<std::size_t>(k) * n;
        for (int i = 0; i < n; ++i) {
            double qvar = 0.0, diffusion = 0.0;
            for (int d = 0; d < n; ++d) {
                const double s = sigma[i * n + d];
                qvar += s * s;
                diffusion += s * path.increment(k, d);
            }
            log_prices[row + n + i] =
                log_prices[row + i] + (alpha[i] - 0.5 * qvar) * dt + diffusion;
        }
    }
    for (double& v : log_prices) v = std::exp(v);
    return log_prices;
}

std::vector<double> wealth_under_policy(const MarketModel& model, const PortfolioPolicy& policy,
                                        double x0, const Path& path) {
    if (x0 < 0.0) throw InvalidArgument("wealth_under_policy: x0 must be >= 0");
    const int K = path.grid().steps;
    const int n = model.n;
    const double dt = path.grid().dt();

    std::vector<double> wealth(K + 1);
    wealth[0] = x0;
    double pi[linalg::kMaxDim];
    double alpha[linalg::kMaxDim];
    double sigma[linalg::kMaxDim * linalg::kMaxDim];
    for (int k = 0; k < K; ++k) {
        policy.amounts(k, path, wealth[k], pi);
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(pi[i]))
                throw PolicyEvaluationError(k, static_cast<long long>(path.provenance()),
                                            "policy '" + policy.label +
                                                "' produced a non-finite amount");
        model.coeffs.drift(k, path, alpha);
        model.coeffs.vol(k, path, sigma);
        const double r = model.coeffs.rate(k, path);
        double excess = 0.0, diffusion = 0.0;
        for (int i = 0; i < n; ++i) {
            excess += pi[i] * (alpha[i] - r);
            double row = 0.0;
            for (int d = 0; d < n; ++d) row += sigma[i * n + d] * path.increment(k, d);
            diffusion += pi[i] * row;
        }
        wealth[k + 1] = wealth[k] + wealth[k] * r * dt + excess * dt + diffusion;
    }
    return wealth;
}

AdmissibilityReport check_admissible(std::span<const double> wealth, double tolerance) {
    for (std::size_t k = 0; k < wealth.size(); ++k) {
        if (wealth[k] < -tolerance)
            return {false, static_cast<int>(k)};
    }
    return {true, -1};
}

}  // namespace portopt
