#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "portopt/grid.hpp"

namespace portopt {

/// One n-dimensional trajectory sampled on a TimeGrid, stored by node levels
/// (node-major, K+1 rows of n).  Increments are derived views; shifting all
/// levels from a node onward is how a vertical bump is applied.
///
/// Paths are immutable once built.  `provenance` records which ensemble
/// member (outer Monte Carlo stream) the path was drawn from; path surgery
/// preserves it, so inner-simulation seeds stay attached to the original
/// member across stop/bump/extend.
class Path {
public:
    Path(TimeGrid grid, int dim)
        : grid_(grid), dim_(check_dim(dim)),
          levels_(static_cast<std::size_t>(grid.nodes()) * dim, 0.0) {}

    Path(TimeGrid grid, int dim, std::vector<double> levels)
        : grid_(grid), dim_(check_dim(dim)), levels_(std::move(levels)) {
        if (levels_.size() != static_cast<std::size_t>(grid_.nodes()) * dim_)
            throw InvalidArgument("Path: level buffer size does not match grid");
    }

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int nodes() const { return grid_.nodes(); }

    double value(int node, int coord) const {
        return levels_[static_cast<std::size_t>(node) * dim_ + coord];
    }
    std::span<const double> at(int node) const {
        return {levels_.data() + static_cast<std::size_t>(node) * dim_,
                static_cast<std::size_t>(dim_)};
    }
    std::span<const double> levels() const { return levels_; }

    uint64_t provenance() const { return provenance_; }
    void set_provenance(uint64_t p) { provenance_ = p; }

    // Increment arriving at node k+1: value(k+1, i) - value(k, i).
    double increment(int k, int coord) const {
        return value(k + 1, coord) - value(k, coord);
    }

private:
    static int check_dim(int dim) {
        if (dim < 1) throw InvalidArgument("Path: dim must be >= 1");
        return dim;
    }

    TimeGrid grid_;
    int dim_;
    uint64_t provenance_ = 0;
    std::vector<double> levels_;
};

/// ω_t: freeze the path at grid node `node` (values beyond stay at ω(t)).
Path stop_path(const Path& path, int node);

/// Add h to coordinate `coord` at every node >= `node` (h·1_[t,T] bump).
/// In increment terms this perturbs only the increment arriving at `node`.
Path bump_path(const Path& path, int node, int coord, double h);

/// Continue a path frozen at `node` with explicit increments over the
/// remaining nodes.  `increments` holds (K-node)*dim values, node-major.
/// The history must actually be stopped at `node`.
Path extend_path(const Path& history, int node, std::span<const double> increments);

bool is_stopped_at(const Path& path, int node);

}  // namespace portopt
