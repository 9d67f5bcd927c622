#include <doctest.h>

#include <cmath>
#include <vector>

#include "portopt/funcalc.hpp"
#include "portopt/rng.hpp"
#include "support/oracles.hpp"

using namespace portopt;

namespace {

NonAnticipativeFunctional coordinate(int i) {
    return {"w_" + std::to_string(i),
            [i](int k, const Path& p) { return p.value(k, i); }};
}

// cylindrical F(t,ω) = f(t, ω(t))
NonAnticipativeFunctional cylinder(std::function<double(double, double)> f) {
    return {"cylinder", [f = std::move(f)](int k, const Path& p) {
                return f(p.grid().time(k), p.value(k, 0));
            }};
}

// discrete ∫ φ'dω with a deterministic step integrand φ(t_l)
NonAnticipativeFunctional ito_sum(std::function<double(double)> phi) {
    return {"ito_sum", [phi = std::move(phi)](int k, const Path& p) {
                double acc = 0.0;
                for (int l = 0; l < k; ++l)
                    acc += phi(p.grid().time(l)) * p.increment(l, 0);
                return acc;
            }};
}

}  // namespace

TEST_CASE("vertical derivative of a coordinate projection is a unit vector") {
    const TimeGrid grid(1.0, 8);
    const Path p = simulate_brownian_member(grid, 3, 11, 0);
    for (int k = 0; k <= 8; ++k) {
        const auto g = vertical_derivative(coordinate(1), k, p, 0.05);
        CHECK(g[0] == doctest::Approx(0.0));
        CHECK(g[1] == doctest::Approx(1.0));
        CHECK(g[2] == doctest::Approx(0.0));
    }
}

TEST_CASE("central differences are exact on quadratic cylinder functionals") {
    const TimeGrid grid(1.0, 4);
    Path p(grid, 1, {0.0, 0.5, 1.5, 1.0, 2.0});
    // f(t,x) = x², ∂f/∂x at ω(t)=1.5 is 3
    const auto f = cylinder([](double, double x) { return x * x; });
    const auto g = vertical_derivative(f, 2, p, 0.05);
    CHECK(g[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("step-integrand recovery picks the left-point weight") {
    const TimeGrid grid(1.0, 8);
    const Path p = simulate_brownian_member(grid, 1, 13, 0);

    SUBCASE("constant integrand") {
        const auto f = ito_sum([](double) { return 2.5; });
        for (int k = 1; k <= 8; ++k) {
            const auto g = vertical_derivative(f, k, p, 0.05);
            CHECK(g[0] == doctest::Approx(2.5).epsilon(1e-10));
        }
    }
    SUBCASE("time-dependent step integrand returns phi(t_{k-1})") {
        const auto f = ito_sum([](double t) { return 1.0 + t; });
        for (int k = 1; k <= 8; ++k) {
            const auto g = vertical_derivative(f, k, p, 0.05);
            CHECK(g[0] == doctest::Approx(1.0 + grid.time(k - 1)).epsilon(1e-10));
        }
    }
}

TEST_CASE("h-halving gains two orders on smooth non-quadratic functionals") {
    const TimeGrid grid(1.0, 4);
    Path p(grid, 1, {0.0, 0.2, 0.7, 0.9, 1.1});
    const auto f = cylinder([](double, double x) { return std::sin(x); });
    const double exact = std::cos(0.7);
    const double err_h = std::fabs(vertical_derivative(f, 2, p, 0.2)[0] - exact);
    const double err_h2 = std::fabs(vertical_derivative(f, 2, p, 0.1)[0] - exact);
    CHECK(err_h / err_h2 >= 3.9);
}

TEST_CASE("horizontal derivative") {
    const TimeGrid grid(1.0, 4);
    Path p(grid, 1, {0.0, 0.5, 2.0, 1.0, 0.5});

    SUBCASE("clock functional has unit horizontal derivative") {
        const auto f = NonAnticipativeFunctional{
            "t", [](int k, const Path& q) { return q.grid().time(k); }};
        CHECK(horizontal_derivative(f, 1, p) == doctest::Approx(1.0));
    }
    SUBCASE("coordinate functional is frozen") {
        CHECK(horizontal_derivative(coordinate(0), 1, p) == doctest::Approx(0.0));
    }
    SUBCASE("t·ω(t)² at ω(t)=2 has time slope 4") {
        const auto f = cylinder([](double t, double x) { return t * x * x; });
        CHECK(horizontal_derivative(f, 2, p) == doctest::Approx(4.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(horizontal_derivative(coordinate(0), 4, p), InvalidArgument);
}

TEST_CASE("discrete stochastic integral") {
    const TimeGrid grid(1.0, 4);
    const Path p = simulate_brownian_member(grid, 1, 5, 3);

    SUBCASE("zero integrand integrates to zero") {
        IntegrandProcess phi{grid, 1, std::vector<double>(4, 0.0)};
        CHECK(discrete_stochastic_integral(phi, p) == 0.0);
    }
    SUBCASE("unit integrand telescopes") {
        IntegrandProcess phi{grid, 1, std::vector<double>(4, 1.0)};
        CHECK(discrete_stochastic_integral(phi, p) ==
              doctest::Approx(p.value(4, 0) - p.value(0, 0)).epsilon(1e-14));
    }
    SUBCASE("grid mismatch is rejected") {
        IntegrandProcess phi{TimeGrid(1.0, 8), 1, std::vector<double>(8, 1.0)};
        CHECK_THROWS_AS(discrete_stochastic_integral(phi, p), InvalidArgument);
    }
}

TEST_CASE("Ito isometry for phi(t)=t via Monte Carlo") {
    // E[(∫φ dW)²] equals Σφ(t_l)²Δt exactly in the discrete model, and tends
    // to ∫t²dt = 1/3 as the grid refines.
    const int n_paths = 100000;

    SUBCASE("exact discrete isometry at K=64") {
        const TimeGrid grid(1.0, 64);
        const PathEnsemble ens = simulate_brownian(grid, 1, n_paths, 888);
        IntegrandProcess phi{grid, 1, std::vector<double>(64)};
        double target = 0.0;
        for (int l = 0; l < 64; ++l) {
            phi.values[l] = grid.time(l);
            target += grid.time(l) * grid.time(l) * grid.dt();
        }
        std::vector<double> sq(n_paths);
        for (int j = 0; j < n_paths; ++j) {
            const double v = discrete_stochastic_integral(phi, ens.member(j));
            sq[j] = v * v;
        }
        CHECK(std::fabs(oracles::mean(sq) - target) < 3.0 * oracles::std_error(sq));
    }
    SUBCASE("continuum limit 1/3 at K=512") {
        const TimeGrid grid(1.0, 512);
        const PathEnsemble ens = simulate_brownian(grid, 1, n_paths, 889);
        IntegrandProcess phi{grid, 1, std::vector<double>(512)};
        for (int l = 0; l < 512; ++l) phi.values[l] = grid.time(l);
        std::vector<double> sq(n_paths);
        for (int j = 0; j < n_paths; ++j) {
            const double v = discrete_stochastic_integral(phi, ens.member(j));
            sq[j] = v * v;
        }
        CHECK(std::fabs(oracles::mean(sq) - 1.0 / 3.0) < 3.0 * oracles::std_error(sq));
    }
}

TEST_CASE("representation residual") {
    SUBCASE("Y = W is represented exactly") {
        const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 16), 1, 32, 5150);
        const ResidualReport rep = representation_residual(coordinate(0), ens, 0.05);
        for (double r : rep.residuals) CHECK(std::fabs(r) < 1e-12);
        CHECK(rep.rms < 1e-12);
    }
    SUBCASE("constant Y has zero residual") {
        const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 16), 1, 8, 5151);
        const NonAnticipativeFunctional c{"const", [](int, const Path&) { return 3.25; }};
        const ResidualReport rep = representation_residual(c, ens, 0.05);
        CHECK(rep.rms == 0.0);
    }
    SUBCASE("Y = W² - t residual shrinks like sqrt(dt)") {
        const auto f = cylinder([](double t, double x) { return x * x - t; });
        std::vector<double> rms;
        for (int K : {32, 64, 128}) {
            const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, K), 1, 256, 5152);
            rms.push_back(representation_residual(f, ens, 0.05).rms);
        }
        CHECK(rms[0] > rms[1]);
        CHECK(rms[1] > rms[2]);
        const double expected = std::sqrt(2.0);
        for (int i = 0; i < 2; ++i) {
            const double ratio = rms[i] / rms[i + 1];
            CHECK(ratio > 0.6 * expected);
            CHECK(ratio < 1.6 * expected);
        }
    }
}

TEST_CASE("non-anticipativity checker") {
    const TimeGrid grid(1.0, 8);
    CHECK(check_non_anticipative(coordinate(0), grid, 1, 100, 314));
    // a deliberately anticipative functional is caught
    const NonAnticipativeFunctional peek{
        "peek", [](int k, const Path& p) {
            return p.value(std::min(k + 1, p.grid().steps), 0);
        }};
    CHECK_FALSE(check_non_anticipative(peek, grid, 1, 100, 314));
}

TEST_CASE("CRN zero variance for path-independent stochastic functionals") {
    // A functional whose value is built from seeded draws keyed by
    // (provenance, node) but not by path values: the CRN difference must be
    // exactly zero, not merely small.
    const TimeGrid grid(1.0, 8);
    const NonAnticipativeFunctional noisy{
        "seeded-constant", [](int k, const Path& p) {
            const rng::Key key = rng::key_from_seed(99);
            double acc = 0.0;
            for (int j = 0; j < 100; ++j)
                acc += rng::normal_at(key, rng::inner_stream(p.provenance(), k, j), 0);
            return 1.5 + acc / 100.0;
        }};
    const Path p = simulate_brownian_member(grid, 1, 2024, 3);
    for (int k = 0; k <= 8; ++k) {
        const auto g = vertical_derivative(noisy, k, p, 0.05);
        CHECK(g[0] == 0.0);
    }
}
