#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "portopt/path.hpp"

namespace portopt {

/// A population of Wiener paths on one shared grid.  Member j is drawn from
/// the counter-based stream (master_seed, j), so regeneration is bit-exact
/// regardless of thread count or generation order.
class PathEnsemble {
public:
    PathEnsemble(TimeGrid grid, int dim, uint64_t master_seed, std::vector<Path> members)
        : grid_(grid), dim_(dim), master_seed_(master_seed), members_(std::move(members)) {
        if (members_.empty()) throw InvalidArgument("PathEnsemble: need at least one member");
    }

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    uint64_t master_seed() const { return master_seed_; }
    int size() const { return static_cast<int>(members_.size()); }
    const Path& member(int j) const { return members_[j]; }
    const std::vector<Path>& members() const { return members_; }

private:
    TimeGrid grid_;
    int dim_;
    uint64_t master_seed_;
    std::vector<Path> members_;
};

/// n_paths independent Wiener trajectories: W(0) = 0, increments N(0, Δt I).
PathEnsemble simulate_brownian(TimeGrid grid, int dim, int n_paths, uint64_t seed);

/// Single member of the ensemble the same seed would generate (bit-identical
/// to simulate_brownian(...).member(member)).
Path simulate_brownian_member(TimeGrid grid, int dim, uint64_t seed, uint64_t member);

/// Debug CSV: path_id,node_index,time,w_1..w_n.
void write_paths_csv(std::ostream& os, const PathEnsemble& ensemble);

}  // namespace portopt
