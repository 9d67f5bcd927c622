#pragma once

#include <cstddef>

namespace portopt::linalg {

inline constexpr int kMaxDim = 8;  // desk-scale markets; n <= 3 in practice

struct SolveInfo {
    bool ok = false;
    double cond1 = 0.0;  // ||A||_1 * ||A^-1||_1 from the LU factors
};

// Solves A x = b (row-major A, copied internally), partial pivoting.
SolveInfo solve(int n, const double* a, const double* b, double* x);

// Solves A' x = b without forming the transpose explicitly.
SolveInfo solve_transposed(int n, const double* a, const double* b, double* x);

// 1-norm condition estimate (exact inverse for these tiny systems).
double cond1(int n, const double* a);

}  // namespace portopt::linalg
