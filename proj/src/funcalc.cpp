#include "portopt/funcalc.hpp"

#include <cmath>

#include "portopt/kernels.hpp"
#include "portopt/parallel.hpp"

namespace portopt {

std::vector<double> vertical_derivative(const NonAnticipativeFunctional& f, int node,
                                        const Path& path, double h) {
    if (!(h > 0.0)) throw InvalidArgument("vertical_derivative: bump size must be > 0");
    const int n = path.dim();
    std::vector<double> grad(n);
    for (int i = 0; i < n; ++i) {
        const double up = f(node, bump_path(path, node, i, +h));
        if (!std::isfinite(up))
            throw NumericFailure(node, -1, "vertical_derivative: non-finite F at +h bump of " +
                                               f.label);
        const double down = f(node, bump_path(path, node, i, -h));
        if (!std::isfinite(down))
            throw NumericFailure(node, -1, "vertical_derivative: non-finite F at -h bump of " +
                                               f.label);
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double horizontal_derivative(const NonAnticipativeFunctional& f, int node, const Path& path) {
    const int K = path.grid().steps;
    if (node < 0 || node >= K)
        throw InvalidArgument("horizontal_derivative: need a grid node strictly before T");
    const Path frozen = stop_path(path, node);
    return (f(node + 1, frozen) - f(node, frozen)) / path.grid().dt();
}

double discrete_stochastic_integral(const IntegrandProcess& phi, const Path& path) {
    if (phi.grid != path.grid() || phi.dim != path.dim())
        throw InvalidArgument("discrete_stochastic_integral: integrand and path grids differ");
    const int K = path.grid().steps;
    const int n = path.dim();
    // Σ_k φ(t_k)'Δω_k as one flat dot product against the increment array.
    std::vector<double> incr(static_cast<std::size_t>(K) * n);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < n; ++i)
            incr[static_cast<std::size_t>(k) * n + i] = path.increment(k, i);
    return kernels::active().dot(phi.values.data(), incr.data(), incr.size());
}

ResidualReport representation_residual(const NonAnticipativeFunctional& y,
                                       const PathEnsemble& ensemble, double h) {
    const int K = ensemble.grid().steps;
    const int n = ensemble.dim();
    ResidualReport report;
    report.residuals.assign(ensemble.size(), 0.0);

    parallel_for(ensemble.size(), [&](int64_t begin, int64_t end) {
        for (int64_t j = begin; j < end; ++j) {
            const Path& path = ensemble.member(j);
            IntegrandProcess phi{ensemble.grid(), n,
                                 std::vector<double>(static_cast<std::size_t>(K) * n)};
            for (int k = 0; k < K; ++k) {
                const std::vector<double> g = vertical_derivative(y, k, path, h);
                for (int i = 0; i < n; ++i)
                    phi.values[static_cast<std::size_t>(k) * n + i] = g[i];
            }
            const double integral = discrete_stochastic_integral(phi, path);
            report.residuals[j] = y(K, path) - y(0, path) - integral;
        }
    });

    double sumsq = 0.0;
    for (double r : report.residuals) sumsq += r * r;
    report.rms = std::sqrt(sumsq / ensemble.size());
    return report;
}

bool check_non_anticipative(const NonAnticipativeFunctional& f, TimeGrid grid, int dim,
                            int n_paths, uint64_t seed) {
    const PathEnsemble paths = simulate_brownian(grid, dim, n_paths, seed);
    for (int j = 0; j < paths.size(); ++j) {
        const Path& path = paths.member(j);
        for (int k = 0; k <= grid.steps; ++k) {
            if (f(k, path) != f(k, stop_path(path, k))) return false;
        }
    }
    return true;
}

}  // namespace portopt
