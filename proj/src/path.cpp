#include "portopt/path.hpp"

#include <algorithm>
#include <vector>

#include "portopt/kernels.hpp"

namespace portopt {

Path stop_path(const Path& path, int node) {
    if (node < 0 || node > path.grid().steps)
        throw InvalidArgument("stop_path: t must be a grid node");
    const int n = path.dim();
    std::vector<double> levels(path.levels().begin(), path.levels().end());
    const double* frozen = levels.data() + static_cast<std::size_t>(node) * n;
    for (int k = node + 1; k <= path.grid().steps; ++k)
        std::copy(frozen, frozen + n, levels.data() + static_cast<std::size_t>(k) * n);
    Path out(path.grid(), n, std::move(levels));
    out.set_provenance(path.provenance());
    return out;
}

Path bump_path(const Path& path, int node, int coord, double h) {
    if (node < 0 || node > path.grid().steps)
        throw InvalidArgument("bump_path: t must be a grid node");
    if (coord < 0 || coord >= path.dim())
        throw InvalidArgument("bump_path: coordinate out of range");
    std::vector<double> levels(path.levels().begin(), path.levels().end());
    const int n = path.dim();
    const std::size_t first = static_cast<std::size_t>(node) * n + coord;
    const std::size_t count = static_cast<std::size_t>(path.grid().steps - node + 1);
    kernels::active().suffix_add(levels.data() + first, count, static_cast<std::size_t>(n), h);
    Path out(path.grid(), n, std::move(levels));
    out.set_provenance(path.provenance());
    return out;
}

bool is_stopped_at(const Path& path, int node) {
    const int n = path.dim();
    for (int k = node + 1; k <= path.grid().steps; ++k)
        for (int i = 0; i < n; ++i)
            if (path.value(k, i) != path.value(node, i)) return false;
    return true;
}

Path extend_path(const Path& history, int node, std::span<const double> increments) {
    const int K = history.grid().steps;
    const int n = history.dim();
    if (node < 0 || node > K) throw InvalidArgument("extend_path: t must be a grid node");
    if (increments.size() != static_cast<std::size_t>(K - node) * n)
        throw InvalidArgument("extend_path: increment block has wrong length");
    if (!is_stopped_at(history, node))
        throw InvalidArgument("extend_path: history is not stopped at t");
    std::vector<double> levels(history.levels().begin(), history.levels().end());
    for (int k = node; k < K; ++k) {
        const std::size_t row = static_cast<std::size_t>(k) * n;
        const std::size_t inc = static_cast<std::size_t>(k - node) * n;
        for (int i = 0; i < n; ++i)
            levels[row + n + i] = levels[row + i] + increments[inc + i];
    }
    Path out(history.grid(), n, std::move(levels));
    out.set_provenance(history.provenance());
    return out;
}

}  // namespace portopt
