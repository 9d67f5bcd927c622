#pragma once

#include <compare>

#include "portopt/errors.hpp"

namespace portopt {

/// Uniform time grid t_0 = 0 < t_1 < ... < t_K = T.  All time arguments in
/// the library are grid nodes; there is no interpolation.
struct TimeGrid {
    double horizon = 1.0;  // T, years
    int steps = 1;         // K

    TimeGrid() = default;
    TimeGrid(double T, int K) : horizon(T), steps(K) {
        if (!(T > 0.0)) throw InvalidArgument("TimeGrid: horizon must be > 0");
        if (K < 1) throw InvalidArgument("TimeGrid: need at least one step");
    }

    double dt() const { return horizon / steps; }
    double time(int k) const { return horizon * static_cast<double>(k) / steps; }
    int nodes() const { return steps + 1; }

    bool operator==(const TimeGrid&) const = default;
};

}  // namespace portopt
