#include "portopt/optimizer.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

#include "portopt/kernels.hpp"
#include "portopt/linalg.hpp"
#include "portopt/report.hpp"
#include "portopt/rng.hpp"

namespace portopt {

namespace {

std::atomic<uint64_t> g_instance_counter{1};

// γ/(γ-1) and log(y)/(γ-1) for the exp-affine payoff of the power family.
bool exp_affine_payoff(const UtilitySpec& u, double y, double* coeff, double* offset) {
    if (u.family() == UtilityFamily::power_utility) {
        const double inv_gm1 = 1.0 / (u.gamma() - 1.0);
        *coeff = u.gamma() * inv_gm1;
        *offset = inv_gm1 * std::log(y);
        return true;
    }
    return false;
}

}  // namespace

struct DeflatedWealthFunctional::Workspace {
    // D-cache: inner-extension Itô sums Σ_l θ_l'ΔW_l per extension, keyed by
    // (functional instance, outer member, node).  The base and the ±h bump
    // evaluations of one derivative all hit the same key, which is both the
    // CRN contract and a 3× saving on inner generation.
    uint64_t tag = 0;
    uint64_t prov = 0;
    int node = -1;
    std::vector<double> d;

    std::vector<double> normals;
    std::vector<uint64_t> streams;
    std::vector<double> ext_levels;
    std::vector<double> values;
};

DeflatedWealthFunctional::Workspace& DeflatedWealthFunctional::workspace() const {
    thread_local Workspace ws;
    return ws;
}

DeflatedWealthFunctional::DeflatedWealthFunctional(MarketModel market, UtilitySpec utility,
                                                   double multiplier,
                                                   const EstimatorConfig& config)
    : market_(std::move(market)),
      utility_(std::move(utility)),
      multiplier_(multiplier),
      config_(config),
      grid_(config.grid(market_.horizon)),
      instance_tag_(g_instance_counter.fetch_add(1)) {
    if (!(multiplier_ > 0.0))
        throw InvalidArgument("DeflatedWealthFunctional: multiplier must be > 0");
    if (config_.m_inner < 1)
        throw InvalidArgument("DeflatedWealthFunctional: m_inner must be >= 1");

    deterministic_ = market_.coeffs.deterministic;
    if (deterministic_) {
        const int K = grid_.steps;
        const int n = market_.n;
        const Path zero(grid_, n);
        theta_grid_.resize(static_cast<std::size_t>(K + 1) * n);
        int_r_grid_.assign(K + 1, 0.0);
        int_q_grid_.assign(K + 1, 0.0);
        const double dt = grid_.dt();
        for (int k = 0; k <= K; ++k) {
            double* theta_k = theta_grid_.data() + static_cast<std::size_t>(k) * n;
            eval_theta(market_, k, zero, theta_k);
            if (k < K) {
                double tsq = 0.0;
                for (int i = 0; i < n; ++i) tsq += theta_k[i] * theta_k[i];
                int_r_grid_[k + 1] = int_r_grid_[k] + market_.coeffs.rate(k, zero) * dt;
                int_q_grid_[k + 1] = int_q_grid_[k] + tsq * dt;
            }
        }
    }
}

double DeflatedWealthFunctional::evaluate(int node, const Path& path) const {
    return eval_impl(node, path, -1, 0.0).mean;
}

EvalStats DeflatedWealthFunctional::evaluate_stats(int node, const Path& path) const {
    return eval_impl(node, path, -1, 0.0);
}

EvalStats DeflatedWealthFunctional::eval_impl(int node, const Path& path, int bump_incr_coord,
                                              double bump_incr_h) const {
    if (path.grid() != grid_) throw InvalidArgument("deflated_wealth: path grid mismatch");
    if (path.dim() != market_.n)
        throw InvalidArgument("deflated_wealth: path dimension mismatch");
    if (node < 0 || node > grid_.steps)
        throw InvalidArgument("deflated_wealth: t must be a grid node");

    if (utility_.path_independent_payoff() && bump_incr_coord < 0)
        return {utility_.deflated_payoff(multiplier_, 0.0), 0.0};

    return deterministic_ ? eval_deterministic(node, path, bump_incr_coord, bump_incr_h)
                          : eval_generic(node, path, bump_incr_coord, bump_incr_h);
}

EvalStats DeflatedWealthFunctional::eval_deterministic(int node, const Path& path,
                                                       int bump_incr_coord,
                                                       double bump_incr_h) const {
    const int K = grid_.steps;
    const int n = market_.n;

    // prefix Itô sum along the supplied path (recomputed every call, so
    // vertical bumps flow through; this is the mechanism of the formula)
    double s_prefix = 0.0;
    for (int l = 0; l < node; ++l) {
        const double* theta_l = theta_grid_.data() + static_cast<std::size_t>(l) * n;
        for (int i = 0; i < n; ++i) s_prefix += theta_l[i] * path.increment(l, i);
    }
    const double log_h_node = -int_r_grid_[node] - s_prefix - 0.5 * int_q_grid_[node];

    if (node == K) {
        const double v = utility_.deflated_payoff(multiplier_, log_h_node);
        if (!std::isfinite(v)) throw NumericFailure(node, -1, "deflated_wealth: non-finite payoff");
        return {v, 0.0};
    }
    if (utility_.path_independent_payoff())
        return {utility_.deflated_payoff(multiplier_, 0.0), 0.0};

    const std::size_t m = static_cast<std::size_t>(config_.m_inner);
    const std::size_t tail = static_cast<std::size_t>(K - node) * n;
    Workspace& ws = workspace();

    if (ws.tag != instance_tag_ || ws.prov != path.provenance() || ws.node != node ||
        ws.d.size() != m) {
        ws.streams.resize(m);
        for (std::size_t j = 0; j < m; ++j)
            ws.streams[j] = rng::inner_stream(path.provenance(), node, j);
        ws.normals.resize(tail * m);
        const rng::Key key = rng::key_from_seed(config_.seed);
        const kernels::Ops& ops = kernels::active();
        ops.normals_lanes(key.k0, key.k1, ws.streams.data(), m, tail, ws.normals.data());
        ws.d.assign(m, 0.0);
        const double sqrt_dt = std::sqrt(grid_.dt());
        for (std::size_t pos = 0; pos < tail; ++pos) {
            const int l = node + static_cast<int>(pos) / n;
            const int i = static_cast<int>(pos) % n;
            const double theta_li = theta_grid_[static_cast<std::size_t>(l) * n + i];
            ops.axpy_batch(theta_li * sqrt_dt, ws.normals.data() + pos * m, ws.d.data(), m);
        }
        ws.tag = instance_tag_;
        ws.prov = path.provenance();
        ws.node = node;
    }

    // deterministic tail pieces; an inner-increment bump shifts every D_j by
    // the same θ(t_node)'e_i h, which folds into the affine offset
    const double r_tail = int_r_grid_[K] - int_r_grid_[node];
    const double q_tail = int_q_grid_[K] - int_q_grid_[node];
    double base = log_h_node - r_tail - 0.5 * q_tail;
    if (bump_incr_coord >= 0)
        base -= theta_grid_[static_cast<std::size_t>(node) * n + bump_incr_coord] * bump_incr_h;

    double sum = 0.0, sumsq = 0.0;
    double coeff = 0.0, offset = 0.0;
    if (exp_affine_payoff(utility_, multiplier_, &coeff, &offset)) {
        // payoff_j = exp(coeff·(base - D_j) + offset)
        kernels::active().exp_affine_stats(-coeff, coeff * base + offset, ws.d.data(), m, &sum,
                                           &sumsq);
    } else {
        ws.values.resize(m);
        for (std::size_t j = 0; j < m; ++j)
            ws.values[j] = utility_.deflated_payoff(multiplier_, base - ws.d[j]);
        kernels::active().reduce_stats(ws.values.data(), m, &sum, &sumsq);
    }
    if (!std::isfinite(sum))
        throw NumericFailure(node, -1, "deflated_wealth: non-finite inner sum");

    EvalStats stats;
    stats.mean = sum / static_cast<double>(m);
    const double var =
        std::max(0.0, (sumsq - sum * stats.mean) / std::max<double>(1.0, m - 1.0));
    stats.std_error = std::sqrt(var / static_cast<double>(m));
    return stats;
}

EvalStats DeflatedWealthFunctional::eval_generic(int node, const Path& path,
                                                 int bump_incr_coord, double bump_incr_h) const {
    const int K = grid_.steps;
    const int n = market_.n;
    const double sqrt_dt = std::sqrt(grid_.dt());

    DeflatorState prefix;
    double incr[linalg::kMaxDim];
    for (int l = 0; l < node; ++l) {
        for (int i = 0; i < n; ++i) incr[i] = path.increment(l, i);
        deflator_step(market_, l, path, {incr, static_cast<std::size_t>(n)}, prefix, nullptr);
    }

    if (node == K) {
        const double v = utility_.deflated_payoff(multiplier_, prefix.log_state_price());
        if (!std::isfinite(v)) throw NumericFailure(node, -1, "deflated_wealth: non-finite payoff");
        return {v, 0.0};
    }

    const std::size_t m = static_cast<std::size_t>(config_.m_inner);
    const std::size_t tail = static_cast<std::size_t>(K - node) * n;
    const rng::Key key = rng::key_from_seed(config_.seed);
    Workspace& ws = workspace();
    ws.normals.resize(tail);
    ws.ext_levels.assign(path.levels().begin(), path.levels().end());

    double sum = 0.0, sumsq = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        rng::fill_normals(key, rng::inner_stream(path.provenance(), node, j), 0, ws.normals);
        if (bump_incr_coord >= 0) ws.normals[bump_incr_coord] += bump_incr_h / sqrt_dt;
        for (int l = node; l < K; ++l) {
            const std::size_t row = static_cast<std::size_t>(l) * n;
            const std::size_t pos = static_cast<std::size_t>(l - node) * n;
            for (int i = 0; i < n; ++i)
                ws.ext_levels[row + n + i] =
                    ws.ext_levels[row + i] + sqrt_dt * ws.normals[pos + i];
        }
        Path extended(grid_, n, ws.ext_levels);
        extended.set_provenance(path.provenance());
        DeflatorState state = prefix;
        for (int l = node; l < K; ++l) {
            for (int i = 0; i < n; ++i) incr[i] = extended.increment(l, i);
            deflator_step(market_, l, extended, {incr, static_cast<std::size_t>(n)}, state,
                          nullptr);
        }
        const double v = utility_.deflated_payoff(multiplier_, state.log_state_price());
        if (!std::isfinite(v))
            throw NumericFailure(node, static_cast<long long>(j),
                                 "deflated_wealth: non-finite extension payoff");
        sum += v;
        sumsq += v * v;
    }

    EvalStats stats;
    stats.mean = sum / static_cast<double>(m);
    const double var =
        std::max(0.0, (sumsq - sum * stats.mean) / std::max<double>(1.0, m - 1.0));
    stats.std_error = std::sqrt(var / static_cast<double>(m));
    return stats;
}

void DeflatedWealthFunctional::gradient(int node, const Path& path, double h, double* out,
                                        EvalStats* per_coord_stats) const {
    if (!(h > 0.0)) throw InvalidArgument("gradient: bump size must be > 0");
    const int n = market_.n;
    for (int i = 0; i < n; ++i) {
        EvalStats up, down;
        if (node == 0) {
            // A path bump at node 0 reaches no increment; difference the
            // first inner increment instead (time-0 integrand).
            up = eval_impl(0, path, i, +h);
            down = eval_impl(0, path, i, -h);
        } else {
            up = eval_impl(node, bump_path(path, node, i, +h), -1, 0.0);
            down = eval_impl(node, bump_path(path, node, i, -h), -1, 0.0);
        }
        if (!std::isfinite(up.mean))
            throw NumericFailure(node, -1, "gradient: non-finite M at +h bump");
        if (!std::isfinite(down.mean))
            throw NumericFailure(node, -1, "gradient: non-finite M at -h bump");
        out[i] = (up.mean - down.mean) / (2.0 * h);
        if (per_coord_stats) {
            double se;
            if (deterministic_ && up.mean != 0.0) {
                // shared inner draws make the ±h estimates perfectly
                // correlated scale copies; the difference inherits the
                // relative error of one side
                se = std::fabs(out[i]) * (up.std_error / std::fabs(up.mean));
            } else {
                se = std::sqrt(up.std_error * up.std_error +
                               down.std_error * down.std_error) /
                     (2.0 * h);
            }
            per_coord_stats[i] = {out[i], se};
        }
    }
}

NonAnticipativeFunctional DeflatedWealthFunctional::as_functional() const {
    // captures `this`; the functional must not outlive the instance
    return NonAnticipativeFunctional{
        "deflated_wealth[" + utility_.label() + "]",
        [this](int node, const Path& path) { return evaluate(node, path); }};
}

namespace {

double prefix_log_state_price(const MarketModel& market, int node, const Path& path) {
    DeflatorState state;
    double incr[linalg::kMaxDim];
    for (int l = 0; l < node; ++l) {
        for (int i = 0; i < market.n; ++i) incr[i] = path.increment(l, i);
        deflator_step(market, l, path, {incr, static_cast<std::size_t>(market.n)}, state,
                      nullptr);
    }
    return state.log_state_price();
}

}  // namespace

double optimal_wealth(const DeflatedWealthFunctional& f, int node, const Path& path) {
    const double m = f.evaluate(node, path);
    const double h = std::exp(prefix_log_state_price(f.market(), node, path));
    if (!(h > 0.0)) throw NumericFailure(node, -1, "optimal_wealth: state price not positive");
    return m / h;
}

PortfolioResult optimal_portfolio(const DeflatedWealthFunctional& f, int node, const Path& path,
                                  double h) {
    const MarketModel& market = f.market();
    const int n = market.n;

    PortfolioResult res;
    res.node = node;
    res.time = path.grid().time(node);
    res.bump_h = h;

    res.theta.resize(n);
    eval_theta(market, node, path, res.theta.data(), &res.sigma_cond);

    const EvalStats m_stats = f.evaluate_stats(node, path);
    res.m_value = m_stats.mean;
    res.inner_std_error = m_stats.std_error;
    res.state_price = std::exp(prefix_log_state_price(market, node, path));
    res.x_star = res.m_value / res.state_price;

    res.grad_m.resize(n);
    f.gradient(node, path, h, res.grad_m.data());

    // σ(t)'π = (∇_W M + θ M)/H  — solve, never invert
    double rhs[linalg::kMaxDim];
    for (int i = 0; i < n; ++i)
        rhs[i] = (res.grad_m[i] + res.theta[i] * res.m_value) / res.state_price;
    double sigma[linalg::kMaxDim * linalg::kMaxDim];
    market.coeffs.vol(node, path, sigma);
    res.pi.resize(n);
    const linalg::SolveInfo info = linalg::solve_transposed(n, sigma, rhs, res.pi.data());
    if (!info.ok || info.cond1 > market.cond_cap)
        throw SingularVolatility(info.cond1, node, "optimal_portfolio: σ' solve failed");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(res.pi[i]))
            throw NumericFailure(node, -1, "optimal_portfolio: non-finite π*");
    return res;
}

PortfolioPolicy optimal_policy(std::shared_ptr<const DeflatedWealthFunctional> f, double h) {
    return PortfolioPolicy{
        "optimal[" + f->utility().label() + "]",
        [f, h](int node, const Path& path, double, double* out) {
            const PortfolioResult res = optimal_portfolio(*f, node, path, h);
            std::memcpy(out, res.pi.data(), sizeof(double) * res.pi.size());
        }};
}

OraclePoint closed_form_log(const MarketModel& market, double x0, int node, const Path& path) {
    const int n = market.n;
    OraclePoint pt;
    const double state_price = std::exp(prefix_log_state_price(market, node, path));
    if (!(state_price > 0.0))
        throw NumericFailure(node, -1, "closed_form_log: state price not positive");
    pt.x_star = x0 / state_price;

    double theta[linalg::kMaxDim];
    eval_theta(market, node, path, theta);
    double u[linalg::kMaxDim];
    double sigma[linalg::kMaxDim * linalg::kMaxDim];
    market.coeffs.vol(node, path, sigma);
    const linalg::SolveInfo info = linalg::solve_transposed(n, sigma, theta, u);
    if (!info.ok || info.cond1 > market.cond_cap)
        throw SingularVolatility(info.cond1, node, "closed_form_log: σσ' solve failed");
    pt.pi.resize(n);
    for (int i = 0; i < n; ++i) pt.pi[i] = u[i] * pt.x_star;
    return pt;
}

OraclePoint closed_form_power(const MarketModel& market, double gamma, double x0, int node,
                              const Path& path) {
    if (!market.coeffs.deterministic)
        throw InvalidArgument(
            "closed_form_power: oracle is only valid for deterministic coefficients");
    if (!(gamma < 1.0) || gamma == 0.0)
        throw InvalidArgument("closed_form_power: gamma must satisfy gamma < 1, gamma != 0");

    const int n = market.n;
    const int K = path.grid().steps;
    const double dt = path.grid().dt();
    const Path zero(path.grid(), n);

    // left-point grid sums, matching the simulator's discretization exactly
    double s_prefix = 0.0, q_prefix = 0.0, r_prefix = 0.0;
    double theta_l[linalg::kMaxDim];
    for (int l = 0; l < node; ++l) {
        eval_theta(market, l, zero, theta_l);
        double tsq = 0.0, tdw = 0.0;
        for (int i = 0; i < n; ++i) {
            tsq += theta_l[i] * theta_l[i];
            tdw += theta_l[i] * path.increment(l, i);
        }
        s_prefix += tdw;
        q_prefix += tsq * dt;
        r_prefix += market.coeffs.rate(l, zero) * dt;
    }
    (void)K;

    const double log_h = -r_prefix - s_prefix - 0.5 * q_prefix;
    const double state_price = std::exp(log_h);
    const double c = gamma / (gamma - 1.0);

    OraclePoint pt;
    // X*(t) = (x0/H)·E_t[H(T)^c]/E[H(T)^c] = (x0/H)·exp(-c·S_t - c²/2·Q_t)
    pt.x_star = x0 / state_price * std::exp(-c * s_prefix - 0.5 * c * c * q_prefix);

    double theta[linalg::kMaxDim];
    eval_theta(market, node, path, theta);
    double u[linalg::kMaxDim];
    double sigma[linalg::kMaxDim * linalg::kMaxDim];
    market.coeffs.vol(node, path, sigma);
    const linalg::SolveInfo info = linalg::solve_transposed(n, sigma, theta, u);
    if (!info.ok || info.cond1 > market.cond_cap)
        throw SingularVolatility(info.cond1, node, "closed_form_power: σσ' solve failed");
    pt.pi.resize(n);
    for (int i = 0; i < n; ++i) pt.pi[i] = u[i] * pt.x_star / (1.0 - gamma);
    return pt;
}

std::vector<double> power_integrand(const MarketModel& market, double gamma, int node,
                                    const Path& path, double m_value) {
    std::vector<double> theta(market.n);
    eval_theta(market, node, path, theta.data());
    const double factor = m_value * (-gamma / (gamma - 1.0));
    for (double& t : theta) t *= factor;
    return theta;
}

}  // namespace portopt
