#pragma once

// Test-side statistical oracles, independent of the library implementation.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace oracles {

inline constexpr double kZ995 = 2.5758293035489004;  // Φ^{-1}(0.995)

// Wilson–Hilferty approximation of the chi-square quantile.
inline double chi_square_quantile(double dof, double z) {
    const double a = 2.0 / (9.0 * dof);
    const double c = 1.0 - a + z * std::sqrt(a);
    return dof * c * c * c;
}

// 99% confidence band for the variance of N(0, var) samples.
struct Band {
    double lo, hi;
};
inline Band variance_band_99(std::size_t n, double var) {
    const double dof = static_cast<double>(n) - 1.0;
    return {var * chi_square_quantile(dof, -kZ995) / dof,
            var * chi_square_quantile(dof, kZ995) / dof};
}

inline double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / (static_cast<double>(xs.size()) - 1.0);
}

inline double std_error(std::span<const double> xs) {
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

inline double sample_covariance(std::span<const double> xs, std::span<const double> ys) {
    const double mx = mean(xs), my = mean(ys);
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += (xs[i] - mx) * (ys[i] - my);
    return acc / (static_cast<double>(xs.size()) - 1.0);
}

// E[H(T)^c] for the constant-coefficient market: log H(T) ~ N(-(r+θ²/2)T, θ²T),
// so E[H^c] = exp(c·mean + c²·var/2) with mean = -(r+θ²/2)T, var = θ²T.
inline double lognormal_deflator_moment(double r, double theta, double horizon, double c) {
    const double mu = -(r + 0.5 * theta * theta) * horizon;
    const double var = theta * theta * horizon;
    return std::exp(c * mu + 0.5 * c * c * var);
}

}  // namespace oracles
