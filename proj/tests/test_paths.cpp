#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "portopt/ensemble.hpp"
#include "portopt/path.hpp"
#include "portopt/rng.hpp"
#include "support/oracles.hpp"

using namespace portopt;

namespace {

Path path_from_values(TimeGrid grid, std::vector<double> values) {
    return Path(grid, 1, std::move(values));
}

}  // namespace

TEST_CASE("time grid basics") {
    const TimeGrid grid(1.0, 4);
    CHECK(grid.dt() == 0.25);
    CHECK(grid.time(0) == 0.0);
    CHECK(grid.time(4) == 1.0);
    CHECK(grid.nodes() == 5);
    CHECK_THROWS_AS(TimeGrid(0.0, 4), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), InvalidArgument);
}

TEST_CASE("brownian members start at zero") {
    const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 4), 2, 8, 99);
    for (int j = 0; j < ens.size(); ++j) {
        CHECK(ens.member(j).value(0, 0) == 0.0);
        CHECK(ens.member(j).value(0, 1) == 0.0);
    }
    CHECK_THROWS_AS(simulate_brownian(TimeGrid(1.0, 4), 0, 1, 1), InvalidArgument);
    CHECK_THROWS_AS(simulate_brownian(TimeGrid(1.0, 4), 1, 0, 1), InvalidArgument);
}

TEST_CASE("terminal variance sits in the 99% chi-square band") {
    const int n_paths = 100000;
    const PathEnsemble ens = simulate_brownian(TimeGrid(1.0, 64), 1, n_paths, 20240601);
    std::vector<double> w_t(n_paths);
    for (int j = 0; j < n_paths; ++j) w_t[j] = ens.member(j).value(64, 0);
    const auto band = oracles::variance_band_99(n_paths, 1.0);
    const double var = oracles::sample_variance(w_t);
    // band endpoints from the chi-square oracle: ~[0.9885, 1.0116] at N=1e5
    CHECK(band.lo == doctest::Approx(0.9885).epsilon(5e-4));
    CHECK(band.hi == doctest::Approx(1.0116).epsilon(5e-4));
    CHECK(var > band.lo);
    CHECK(var < band.hi);
}

TEST_CASE("increments over disjoint windows are uncorrelated") {
    const int n_paths = 100000;
    const TimeGrid grid(1.0, 64);
    const PathEnsemble ens = simulate_brownian(grid, 1, n_paths, 777);
    std::vector<double> first(n_paths), second(n_paths);
    for (int j = 0; j < n_paths; ++j) {
        first[j] = ens.member(j).value(32, 0);
        second[j] = ens.member(j).value(64, 0) - ens.member(j).value(32, 0);
    }
    const double cov = oracles::sample_covariance(first, second);
    // Var(cov-hat) ≈ Var(X)Var(Y)/N for independent X,Y
    const double se = std::sqrt(0.5 * 0.5 / n_paths);
    CHECK(std::fabs(cov) < 3.0 * se);
}

TEST_CASE("stop_path") {
    const TimeGrid grid(1.0, 3);
    const Path p = path_from_values(grid, {0.0, 0.3, -0.1, 0.2});

    SUBCASE("stop at T is the identity") {
        const Path s = stop_path(p, 3);
        for (int k = 0; k <= 3; ++k) CHECK(s.value(k, 0) == p.value(k, 0));
    }
    SUBCASE("stop at 0 freezes at the origin") {
        const Path s = stop_path(p, 0);
        for (int k = 0; k <= 3; ++k) CHECK(s.value(k, 0) == 0.0);
    }
    SUBCASE("hand-computed stop at one third") {
        const Path s = stop_path(p, 1);
        CHECK(s.value(0, 0) == 0.0);
        CHECK(s.value(1, 0) == 0.3);
        CHECK(s.value(2, 0) == 0.3);
        CHECK(s.value(3, 0) == 0.3);
    }
    SUBCASE("idempotent at every node") {
        for (int k = 0; k <= 3; ++k) {
            const Path once = stop_path(p, k);
            const Path twice = stop_path(once, k);
            for (int l = 0; l <= 3; ++l) CHECK(once.value(l, 0) == twice.value(l, 0));
        }
    }
    CHECK_THROWS_AS(stop_path(p, 4), InvalidArgument);
    CHECK_THROWS_AS(stop_path(p, -1), InvalidArgument);
}

TEST_CASE("bump_path") {
    const TimeGrid grid(1.0, 3);
    const Path p = path_from_values(grid, {0.0, 0.3, -0.1, 0.2});

    SUBCASE("zero bump is the identity") {
        const Path b = bump_path(p, 2, 0, 0.0);
        for (int k = 0; k <= 3; ++k) CHECK(b.value(k, 0) == p.value(k, 0));
    }
    SUBCASE("hand-computed bump at node 2") {
        const Path b = bump_path(p, 2, 0, 0.5);
        CHECK(b.value(0, 0) == 0.0);
        CHECK(b.value(1, 0) == 0.3);
        CHECK(b.value(2, 0) == doctest::Approx(0.4));
        CHECK(b.value(3, 0) == doctest::Approx(0.7));
    }
    SUBCASE("values strictly before the bump are bit-identical") {
        const Path b = bump_path(p, 2, 0, 123.456);
        CHECK(b.value(0, 0) == p.value(0, 0));
        CHECK(b.value(1, 0) == p.value(1, 0));
    }
    SUBCASE("bump only touches its coordinate") {
        const Path q(grid, 2, {0, 0, 1, 1, 2, 2, 3, 3});
        const Path b = bump_path(q, 1, 1, 0.5);
        for (int k = 0; k <= 3; ++k) CHECK(b.value(k, 0) == q.value(k, 0));
        CHECK(b.value(1, 1) == 1.5);
    }
    SUBCASE("linearity: two bumps collapse to their sum") {
        const Path twice = bump_path(bump_path(p, 1, 0, 0.25), 1, 0, 0.5);
        const Path once = bump_path(p, 1, 0, 0.75);
        for (int k = 0; k <= 3; ++k)
            CHECK(twice.value(k, 0) == doctest::Approx(once.value(k, 0)).epsilon(1e-15));
    }
    SUBCASE("bump and stop commute at the same node") {
        for (int k = 0; k <= 3; ++k) {
            const Path a = bump_path(stop_path(p, k), k, 0, 0.4);
            const Path b = stop_path(bump_path(p, k, 0, 0.4), k);
            for (int l = 0; l <= 3; ++l) CHECK(a.value(l, 0) == b.value(l, 0));
        }
    }
    CHECK_THROWS_AS(bump_path(p, 1, 1, 0.5), InvalidArgument);
    CHECK_THROWS_AS(bump_path(p, 5, 0, 0.5), InvalidArgument);
}

TEST_CASE("extend_path") {
    const TimeGrid grid(1.0, 4);
    const Path p = stop_path(path_from_values(grid, {0.0, 0.4, 0.1, -0.2, 0.5}), 2);

    SUBCASE("zero block continues flat") {
        const std::vector<double> zeros(2, 0.0);
        const Path e = extend_path(p, 2, zeros);
        CHECK(e.value(3, 0) == p.value(2, 0));
        CHECK(e.value(4, 0) == p.value(2, 0));
    }
    SUBCASE("history is preserved") {
        const std::vector<double> block{0.3, -0.8};
        const Path e = extend_path(p, 2, block);
        for (int k = 0; k <= 2; ++k) CHECK(e.value(k, 0) == p.value(k, 0));
        CHECK(e.value(3, 0) == doctest::Approx(0.1 + 0.3));
        CHECK(e.value(4, 0) == doctest::Approx(0.1 + 0.3 - 0.8));
    }
    SUBCASE("wrong block length is rejected") {
        const std::vector<double> bad(3, 0.0);
        CHECK_THROWS_AS(extend_path(p, 2, bad), InvalidArgument);
    }
    SUBCASE("unstopped history is rejected") {
        const Path raw = path_from_values(grid, {0.0, 0.4, 0.1, -0.2, 0.5});
        const std::vector<double> block(2, 0.0);
        CHECK_THROWS_AS(extend_path(raw, 2, block), InvalidArgument);
    }
}

TEST_CASE("extension increments have the right conditional variance") {
    // variance of W(T)-W(t) over many extension blocks, chi-square band
    const TimeGrid grid(1.0, 32);
    const int node = 8;  // t = 0.25
    const int n_blocks = 100000;
    const rng::Key key = rng::key_from_seed(4242);
    const double sqrt_dt = std::sqrt(grid.dt());

    std::vector<double> w_t(n_blocks);
    std::vector<double> normals((32 - node));
    const Path history = stop_path(simulate_brownian_member(grid, 1, 5, 0), node);
    for (int b = 0; b < n_blocks; ++b) {
        rng::fill_normals(key, rng::test_stream(b), 0, normals);
        std::vector<double> block(normals.size());
        for (std::size_t i = 0; i < block.size(); ++i) block[i] = sqrt_dt * normals[i];
        const Path e = extend_path(history, node, block);
        w_t[b] = e.value(32, 0) - e.value(node, 0);
    }
    const auto band = oracles::variance_band_99(n_blocks, 1.0 - grid.time(node));
    const double var = oracles::sample_variance(w_t);
    CHECK(var > band.lo);
    CHECK(var < band.hi);
}

TEST_CASE("ensembles are reproducible bit-exactly across thread counts") {
    const TimeGrid grid(1.0, 16);
    const PathEnsemble a = simulate_brownian(grid, 2, 64, 31415);

    // force single-threaded regeneration
    setenv("PORTOPT_THREADS", "1", 1);
    const PathEnsemble b = simulate_brownian(grid, 2, 64, 31415);
    unsetenv("PORTOPT_THREADS");
    setenv("PORTOPT_THREADS", "7", 1);
    const PathEnsemble c = simulate_brownian(grid, 2, 64, 31415);
    unsetenv("PORTOPT_THREADS");

    for (int j = 0; j < a.size(); ++j) {
        for (int k = 0; k <= 16; ++k)
            for (int i = 0; i < 2; ++i) {
                CHECK(a.member(j).value(k, i) == b.member(j).value(k, i));
                CHECK(a.member(j).value(k, i) == c.member(j).value(k, i));
            }
        CHECK(a.member(j).provenance() == static_cast<uint64_t>(j));
    }
}
