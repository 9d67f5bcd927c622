#include "portopt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "portopt/errors.hpp"

namespace portopt::linalg {

namespace {

struct Lu {
    double a[kMaxDim * kMaxDim];
    int piv[kMaxDim];
    int n = 0;
    bool ok = false;
};

Lu factor(int n, const double* src) {
    if (n < 1 || n > kMaxDim) throw InvalidArgument("linalg: dimension out of range");
    Lu lu;
    lu.n = n;
    std::memcpy(lu.a, src, sizeof(double) * n * n);
    for (int i = 0; i < n; ++i) lu.piv[i] = i;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(lu.a[col * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(lu.a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) return lu;  // singular
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(lu.a[pivot * n + c], lu.a[col * n + c]);
            std::swap(lu.piv[pivot], lu.piv[col]);
        }
        const double inv = 1.0 / lu.a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = lu.a[r * n + col] * inv;
            lu.a[r * n + col] = f;
            for (int c = col + 1; c < n; ++c) lu.a[r * n + c] -= f * lu.a[col * n + c];
        }
    }
    lu.ok = true;
    return lu;
}

void lu_solve(const Lu& lu, const double* b, double* x) {
    const int n = lu.n;
    double y[kMaxDim];
    for (int r = 0; r < n; ++r) {
        double acc = b[lu.piv[r]];
        for (int c = 0; c < r; ++c) acc -= lu.a[r * n + c] * y[c];
        y[r] = acc;
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = y[r];
        for (int c = r + 1; c < n; ++c) acc -= lu.a[r * n + c] * x[c];
        x[r] = acc / lu.a[r * n + r];
    }
}

double norm1(int n, const double* a) {
    double best = 0.0;
    for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int r = 0; r < n; ++r) s += std::fabs(a[r * n + c]);
        best = std::max(best, s);
    }
    return best;
}

double inv_norm1(const Lu& lu) {
    const int n = lu.n;
    double e[kMaxDim], col[kMaxDim];
    double best = 0.0;
    for (int c = 0; c < n; ++c) {
        for (int i = 0; i < n; ++i) e[i] = (i == c) ? 1.0 : 0.0;
        lu_solve(lu, e, col);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::fabs(col[i]);
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

SolveInfo solve(int n, const double* a, const double* b, double* x) {
    const Lu lu = factor(n, a);
    SolveInfo info;
    if (!lu.ok) {
        info.cond1 = std::numeric_limits<double>::infinity();
        return info;
    }
    lu_solve(lu, b, x);
    info.ok = true;
    info.cond1 = norm1(n, a) * inv_norm1(lu);
    return info;
}

SolveInfo solve_transposed(int n, const double* a, const double* b, double* x) {
    double at[kMaxDim * kMaxDim] = {};
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) at[r * n + c] = a[c * n + r];
    return solve(n, at, b, x);
}

double cond1(int n, const double* a) {
    const Lu lu = factor(n, a);
    if (!lu.ok) return std::numeric_limits<double>::infinity();
    return norm1(n, a) * inv_norm1(lu);
}

}  // namespace portopt::linalg
