#include "rarlkit/linalg.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rarlkit {

namespace {

// In-place LU factorization with partial pivoting; perm holds the row order.
void factor(std::vector<double>& a, std::vector<int>& perm, int n) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(a[size_t(perm[k]) * n + k]);
        for (int i = k + 1; i < n; ++i) {
            double v = std::fabs(a[size_t(perm[i]) * n + k]);
            if (v > best) { best = v; piv = i; }
        }
        if (best == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        std::swap(perm[k], perm[piv]);
        const size_t rk = size_t(perm[k]) * n;
        for (int i = k + 1; i < n; ++i) {
            const size_t ri = size_t(perm[i]) * n;
            double m = a[ri + k] / a[rk + k];
            a[ri + k] = m;
            for (int j = k + 1; j < n; ++j) a[ri + j] -= m * a[rk + j];
        }
    }
}

std::vector<double> substitute(const std::vector<double>& lu, const std::vector<int>& perm,
                               const std::vector<double>& b, int n) {
    std::vector<double> y(n), x(n);
    for (int i = 0; i < n; ++i) {
        double s = b[perm[i]];
        const size_t ri = size_t(perm[i]) * n;
        for (int j = 0; j < i; ++j) s -= lu[ri + j] * y[j];
        y[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        const size_t ri = size_t(perm[i]) * n;
        for (int j = i + 1; j < n; ++j) s -= lu[ri + j] * x[j];
        x[i] = s / lu[ri + i];
    }
    return x;
}

} // namespace

double residual_inf(const std::vector<double>& a, const std::vector<double>& x,
                    const std::vector<double>& b, int n) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = -b[i];
        const size_t ri = size_t(i) * n;
        for (int j = 0; j < n; ++j) s += a[ri + j] * x[j];
        worst = std::max(worst, std::fabs(s));
    }
    return worst;
}

std::vector<double> lu_solve(std::vector<double> a, std::vector<double> b, int n) {
    std::vector<double> a0 = a;
    std::vector<int> perm;
    factor(a, perm, n);
    std::vector<double> x = substitute(a, perm, b, n);
    // one refinement pass; enough to hold the 1e-10 residual contract at this scale
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        const size_t ri = size_t(i) * n;
        for (int j = 0; j < n; ++j) s -= a0[ri + j] * x[j];
        r[i] = s;
    }
    std::vector<double> dx = substitute(a, perm, r, n);
    for (int i = 0; i < n; ++i) x[i] += dx[i];
    return x;
}

} // namespace rarlkit
