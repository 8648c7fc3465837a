#pragma once

#include <vector>

namespace rarlkit {

/// Dense n-by-n linear solve, LU with partial pivoting plus one round of
/// iterative refinement. `a` is row-major and is consumed. Throws
/// std::runtime_error when the matrix is numerically singular.
std::vector<double> lu_solve(std::vector<double> a, std::vector<double> b, int n);

/// Infinity-norm residual ||A x - b||.
double residual_inf(const std::vector<double>& a, const std::vector<double>& x,
                    const std::vector<double>& b, int n);

} // namespace rarlkit
