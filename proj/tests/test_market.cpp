#include <doctest.h>

#include <cmath>
#include <vector>

#include "portopt/ensemble.hpp"
#include "portopt/market.hpp"
#include "support/oracles.hpp"

using namespace portopt;

namespace {

MarketModel reference_market() {
    return MarketModel::constant(1.0, 0.01, {0.05}, {0.2}, {1.0});
}

}  // namespace

TEST_CASE("market price of risk") {
    const TimeGrid grid(1.0, 4);
    const Path p(grid, 1);

    SUBCASE("no excess return means no risk premium") {
        const MarketModel m = MarketModel::constant(1.0, 0.05, {0.05}, {0.2}, {1.0});
        CHECK(market_price_of_risk(m, 0, p)[0] == doctest::Approx(0.0));
    }
    SUBCASE("hand-computed scalar case") {
        const MarketModel m = reference_market();
        CHECK(market_price_of_risk(m, 2, p)[0] == doctest::Approx(0.2).epsilon(1e-14));
    }
    SUBCASE("identity volatility passes the excess through") {
        const MarketModel m =
            MarketModel::constant(1.0, 0.0, {0.03, -0.01}, {1.0, 0.0, 0.0, 1.0}, {1.0, 1.0});
        const Path p2(grid, 2);
        const auto theta = market_price_of_risk(m, 1, p2);
        CHECK(theta[0] == doctest::Approx(0.03));
        CHECK(theta[1] == doctest::Approx(-0.01));
    }
    SUBCASE("singular volatility is rejected with a condition estimate") {
        const MarketModel m =
            MarketModel::constant(1.0, 0.0, {0.03, 0.01}, {1.0, 1.0, 1.0, 1.0}, {1.0, 1.0});
        const Path p2(grid, 2);
        CHECK_THROWS_AS(market_price_of_risk(m, 0, p2), SingularVolatility);
    }
    SUBCASE("conditioning cap is enforced") {
        MarketModel m =
            MarketModel::constant(1.0, 0.0, {0.03, 0.01}, {1.0, 0.0, 0.0, 1e-12}, {1.0, 1.0});
        const Path p2(grid, 2);
        CHECK_THROWS_AS(market_price_of_risk(m, 0, p2), SingularVolatility);
    }
}

TEST_CASE("deflators") {
    SUBCASE("zero risk premium: Z = 1 and H = exp(-rt)") {
        const MarketModel m = MarketModel::constant(1.0, 0.01, {0.01}, {0.2}, {1.0});
        const Path p = simulate_brownian_member(TimeGrid(1.0, 8), 1, 7, 0);
        const DeflatorBundle d = deflators(m, p);
        for (int k = 0; k <= 8; ++k) {
            CHECK(d.likelihood[k] == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(d.state_price[k] ==
                  doctest::Approx(std::exp(-0.01 * p.grid().time(k))).epsilon(1e-12));
        }
    }
    SUBCASE("H(0) = B(0) = Z(0) = 1") {
        const MarketModel m = reference_market();
        const Path p = simulate_brownian_member(TimeGrid(1.0, 8), 1, 7, 1);
        const DeflatorBundle d = deflators(m, p);
        CHECK(d.money_market[0] == 1.0);
        CHECK(d.likelihood[0] == 1.0);
        CHECK(d.state_price[0] == 1.0);
    }
    SUBCASE("identity H*B = Z holds to a few ulps at every node") {
        const MarketModel m = reference_market();
        const Path p = simulate_brownian_member(TimeGrid(1.0, 64), 1, 7, 2);
        const DeflatorBundle d = deflators(m, p);
        for (int k = 0; k <= 64; ++k) {
            const double lhs = d.state_price[k] * d.money_market[k];
            CHECK(lhs == doctest::Approx(d.likelihood[k]).epsilon(4e-16));
        }
    }
    SUBCASE("E[Z(T)] is 1 within 3 standard errors") {
        const MarketModel m = reference_market();
        const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 64), 1, 100000, 4711);
        std::vector<double> z_t(ens.size());
        for (int j = 0; j < ens.size(); ++j)
            z_t[j] = deflators(m, ens.member(j)).likelihood.back();
        CHECK(std::fabs(oracles::mean(z_t) - 1.0) < 3.0 * oracles::std_error(z_t));
    }
}

TEST_CASE("bump propagation through the likelihood") {
    // deterministic θ: bumping node k multiplies Z(T) by exp(-θ(t_{k-1})·h)
    const MarketModel m = reference_market();
    const Path p = simulate_brownian_member(TimeGrid(1.0, 16), 1, 7, 3);
    const double z_base = deflators(m, p).likelihood.back();
    for (int k : {1, 5, 16}) {
        const double z_bumped = deflators(m, bump_path(p, k, 0, 0.3)).likelihood.back();
        CHECK(z_bumped / z_base == doctest::Approx(std::exp(-0.2 * 0.3)).epsilon(1e-12));
    }
}

TEST_CASE("Girsanov mean shift") {
    // E[Z(T)·W(T)] = -∫θ dt for deterministic θ (exact in the discrete model)
    const MarketModel m = reference_market();
    const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 32), 1, 100000, 555);
    std::vector<double> zw(ens.size());
    for (int j = 0; j < ens.size(); ++j)
        zw[j] = deflators(m, ens.member(j)).likelihood.back() * ens.member(j).value(32, 0);
    CHECK(std::fabs(oracles::mean(zw) - (-0.2)) < 3.0 * oracles::std_error(zw));
}

TEST_CASE("stock simulation") {
    SUBCASE("deterministic path reproduces the scheme arithmetic") {
        const MarketModel m = reference_market();
        const Path zero(TimeGrid(1.0, 16), 1);  // all increments zero
        const auto prices = simulate_stocks(m, zero);
        CHECK(prices.back() == doctest::Approx(std::exp(0.05 - 0.5 * 0.04)).epsilon(1e-12));
    }
    SUBCASE("terminal mean matches the lognormal moment") {
        const MarketModel m = reference_market();
        const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 64), 1, 100000, 4242);
        std::vector<double> s_t(ens.size());
        for (int j = 0; j < ens.size(); ++j) s_t[j] = simulate_stocks(m, ens.member(j)).back();
        CHECK(std::fabs(oracles::mean(s_t) - std::exp(0.05)) < 3.0 * oracles::std_error(s_t));
    }
    SUBCASE("prices stay strictly positive") {
        const MarketModel m = reference_market();
        const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 16), 1, 256, 77);
        for (int j = 0; j < ens.size(); ++j)
            for (double s : simulate_stocks(m, ens.member(j))) CHECK(s > 0.0);
    }
}

TEST_CASE("wealth under a policy") {
    const MarketModel m = MarketModel::constant(1.0, 0.01, {0.01}, {0.2}, {1.0});
    const PortfolioPolicy no_stock{"cash", [](int, const Path&, double, double* out) {
                                       out[0] = 0.0;
                                   }};

    SUBCASE("all-cash compounds at the simple per-step rate") {
        const TimeGrid grid(1.0, 16);
        const Path p = simulate_brownian_member(grid, 1, 7, 4);
        const auto wealth = wealth_under_policy(m, no_stock, 2.0, p);
        double expected = 2.0;
        for (int k = 0; k < 16; ++k) {
            CHECK(wealth[k] == doctest::Approx(expected).epsilon(1e-13));
            expected *= 1.0 + 0.01 * grid.dt();
        }
        // refining the grid converges to continuous compounding
        const Path p256 = simulate_brownian_member(TimeGrid(1.0, 256), 1, 7, 4);
        const auto fine = wealth_under_policy(m, no_stock, 2.0, p256);
        CHECK(fine.back() == doctest::Approx(2.0 * std::exp(0.01)).epsilon(1e-4));
    }
    SUBCASE("zero initial wealth stays zero") {
        const Path p = simulate_brownian_member(TimeGrid(1.0, 8), 1, 7, 5);
        for (double w : wealth_under_policy(m, no_stock, 0.0, p)) CHECK(w == 0.0);
    }
    SUBCASE("self-financing: the money-market leg accrues at r") {
        // re-derive one Euler step: (X - π'1) accrues at r, π earns the
        // full stock return α dt + σ dW
        const MarketModel risky = reference_market();
        const PortfolioPolicy half{"half", [](int, const Path&, double, double* out) {
                                       out[0] = 0.5;
                                   }};
        const TimeGrid grid(1.0, 8);
        const Path p = simulate_brownian_member(grid, 1, 7, 6);
        const auto wealth = wealth_under_policy(risky, half, 1.0, p);
        for (int k = 0; k < 8; ++k) {
            const double money_market = wealth[k] - 0.5;
            const double step = money_market * 0.01 * grid.dt() +
                                0.5 * (0.05 * grid.dt() + 0.2 * p.increment(k, 0));
            CHECK(wealth[k + 1] - wealth[k] == doctest::Approx(step).epsilon(1e-12));
        }
    }
    SUBCASE("non-finite policy output is flagged with the node") {
        const PortfolioPolicy bad{"bad", [](int k, const Path&, double, double* out) {
                                      out[0] = k == 3 ? NAN : 0.0;
                                  }};
        const Path p = simulate_brownian_member(TimeGrid(1.0, 8), 1, 7, 7);
        CHECK_THROWS_AS(wealth_under_policy(m, bad, 1.0, p), PolicyEvaluationError);
    }
}

TEST_CASE("admissibility check") {
    const std::vector<double> positive{1.0, 0.5, 0.1};
    CHECK(check_admissible(positive, 1e-12).admissible);

    const std::vector<double> dips{1.0, -0.5, 0.1};
    const auto rep = check_admissible(dips, 1e-12);
    CHECK_FALSE(rep.admissible);
    CHECK(rep.first_violation == 1);

    const std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK(check_admissible(zeros, 1e-12).admissible);
}

TEST_CASE("deflated wealth of the zero policy is flat in expectation") {
    const MarketModel m = reference_market();
    const PortfolioPolicy cash{"cash", [](int, const Path&, double, double* out) {
                                   out[0] = 0.0;
                               }};
    const TimeGrid grid(1.0, 16);
    const PathEnsemble ens = simulate_brownian(grid, 1, 20000, 909);
    for (int k : {4, 8, 16}) {
        std::vector<double> hx(ens.size());
        for (int j = 0; j < ens.size(); ++j) {
            const Path& p = ens.member(j);
            const auto wealth = wealth_under_policy(m, cash, 1.0, p);
            hx[j] = deflators(m, p).state_price[k] * wealth[k];
        }
        CHECK(std::fabs(oracles::mean(hx) - 1.0) < 3.0 * oracles::std_error(hx) + 1e-6);
    }
}

TEST_CASE("path-dependent demo volatility is non-anticipative and bounded") {
    const MarketModel m = MarketModel::running_max_vol(1.0, 0.01, {0.05}, {0.2}, 0.5, {1.0});
    CHECK_FALSE(m.coeffs.deterministic);
    const Path p = simulate_brownian_member(TimeGrid(1.0, 16), 1, 7, 8);
    double sigma = 0.0;
    for (int k = 0; k <= 16; ++k) {
        m.coeffs.vol(k, p, &sigma);
        CHECK(sigma >= 0.2);
        CHECK(sigma < 0.2 * 1.5);
        // stopping the path at k must not change σ(k)
        double sigma_stopped = 0.0;
        m.coeffs.vol(k, stop_path(p, k), &sigma_stopped);
        CHECK(sigma == sigma_stopped);
    }
}
