#include "rarlkit/lp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rarlkit {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-8;

// Tableau for min ĉ'z s.t. Âz = b̂ (b̂ >= 0), z >= 0. Columns are laid out
// as [structural | surplus | artificial]; the basis starts at the artificials.
struct Tableau {
    int rows = 0, cols = 0;
    std::vector<double> t;    // rows x (cols + 1), last column is rhs
    std::vector<double> obj;  // cols + 1, reduced costs and negative objective
    std::vector<int> basis;   // basic variable per row

    double& at(int i, int j) { return t[size_t(i) * (cols + 1) + j]; }
    double at(int i, int j) const { return t[size_t(i) * (cols + 1) + j]; }
    double& rhs(int i) { return t[size_t(i) * (cols + 1) + cols]; }

    void pivot(int row, int col) {
        const double inv = 1.0 / at(row, col);
        for (int j = 0; j <= cols; ++j) at(row, j) *= inv;
        for (int i = 0; i <= rows; ++i) {
            double* r = (i < rows) ? &t[size_t(i) * (cols + 1)] : obj.data();
            if (i == row) continue;
            const double f = r[col];
            if (std::fabs(f) <= 0.0) continue;
            const double* pr = &t[size_t(row) * (cols + 1)];
            for (int j = 0; j <= cols; ++j) r[j] -= f * pr[j];
        }
        basis[row] = col;
    }

    // Rebuilds the reduced-cost row for the given variable costs.
    void load_costs(const std::vector<double>& c) {
        for (int j = 0; j <= cols; ++j) obj[j] = (j < int(c.size())) ? c[j] : 0.0;
        for (int i = 0; i < rows; ++i) {
            const double cb = c[basis[i]];
            if (cb == 0.0) continue;
            for (int j = 0; j <= cols; ++j) obj[j] -= cb * at(i, j);
        }
    }

    // Bland: entering = lowest eligible index with negative reduced cost,
    // leaving = min ratio with lowest basic index on ties.
    // Returns 0 when optimal, 1 after a pivot, -1 when unbounded.
    int step(int eligible_cols) {
        int enter = -1;
        for (int j = 0; j < eligible_cols; ++j)
            if (obj[j] < -kPivotTol) { enter = j; break; }
        if (enter < 0) return 0;
        int leave = -1;
        double best = 0.0;
        for (int i = 0; i < rows; ++i) {
            const double a = at(i, enter);
            if (a <= kPivotTol) continue;
            const double ratio = rhs(i) / a;
            if (leave < 0 || ratio < best - kPivotTol ||
                (std::fabs(ratio - best) <= kPivotTol && basis[i] < basis[leave])) {
                best = ratio;
                leave = i;
            }
        }
        if (leave < 0) return -1;
        pivot(leave, enter);
        return 1;
    }
};

} // namespace

void LinearProgram::add_eq(const std::vector<double>& row, double rhs) {
    if (int(row.size()) != num_vars) throw std::invalid_argument("add_eq: row size");
    eq.insert(eq.end(), row.begin(), row.end());
    eq_rhs.push_back(rhs);
}

void LinearProgram::add_ge(const std::vector<double>& row, double rhs) {
    if (int(row.size()) != num_vars) throw std::invalid_argument("add_ge: row size");
    ge.insert(ge.end(), row.begin(), row.end());
    ge_rhs.push_back(rhs);
}

LpSolution solve_lp(const LinearProgram& lp, long max_iterations) {
    const int n = lp.num_vars;
    const int me = lp.num_eq(), mg = lp.num_ge();
    const int m = me + mg;
    if (int(lp.objective.size()) != n) throw std::invalid_argument("solve_lp: objective size");
    if (!lp.lower_bounds.empty() && int(lp.lower_bounds.size()) != n)
        throw std::invalid_argument("solve_lp: lower_bounds size");

    // shift x = lb + z so z >= 0
    std::vector<double> lb(n, 0.0);
    if (!lp.lower_bounds.empty()) lb = lp.lower_bounds;
    double obj_shift = 0.0;
    for (int j = 0; j < n; ++j) obj_shift += lp.objective[j] * lb[j];

    Tableau tab;
    tab.rows = m;
    tab.cols = n + mg + m;
    tab.t.assign(size_t(m) * (tab.cols + 1), 0.0);
    tab.obj.assign(tab.cols + 1, 0.0);
    tab.basis.resize(m);
    std::vector<double> sign(m, 1.0);

    auto fill_row = [&](int i, const double* coeff, double rhs, int surplus_col) {
        double shifted = rhs;
        for (int j = 0; j < n; ++j) shifted -= coeff[j] * lb[j];
        double s = (shifted < 0.0) ? -1.0 : 1.0;
        sign[i] = s;
        for (int j = 0; j < n; ++j) tab.at(i, j) = s * coeff[j];
        if (surplus_col >= 0) tab.at(i, surplus_col) = -s;
        tab.at(i, n + mg + i) = 1.0; // artificial
        tab.rhs(i) = s * shifted;
        tab.basis[i] = n + mg + i;
    };
    for (int i = 0; i < me; ++i) fill_row(i, &lp.eq[size_t(i) * n], lp.eq_rhs[i], -1);
    for (int k = 0; k < mg; ++k)
        fill_row(me + k, &lp.ge[size_t(k) * n], lp.ge_rhs[k], n + k);

    LpSolution out;
    long iterations = 0;

    // phase 1: minimize the artificial mass
    std::vector<double> phase1_costs(tab.cols, 0.0);
    for (int i = 0; i < m; ++i) phase1_costs[n + mg + i] = 1.0;
    tab.load_costs(phase1_costs);
    while (true) {
        if (++iterations > max_iterations) { out.status = LpSolution::Status::iteration_limit; return out; }
        int r = tab.step(tab.cols);
        if (r == 0) break;
        if (r == -1) { out.status = LpSolution::Status::infeasible; return out; }
    }
    if (-tab.obj[tab.cols] > kFeasTol) {
        out.status = LpSolution::Status::infeasible;
        return out;
    }
    // drive leftover artificials out of the basis when a real pivot exists
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] < n + mg) continue;
        for (int j = 0; j < n + mg; ++j)
            if (std::fabs(tab.at(i, j)) > kPivotTol) { tab.pivot(i, j); break; }
    }

    // phase 2: maximize the original objective (minimize its negation);
    // artificial columns stay frozen out of the eligible range
    std::vector<double> phase2_costs(tab.cols, 0.0);
    for (int j = 0; j < n; ++j) phase2_costs[j] = -lp.objective[j];
    tab.load_costs(phase2_costs);
    while (true) {
        if (++iterations > max_iterations) { out.status = LpSolution::Status::iteration_limit; return out; }
        int r = tab.step(n + mg);
        if (r == 0) break;
        if (r == -1) { out.status = LpSolution::Status::unbounded; return out; }
    }

    out.status = LpSolution::Status::optimal;
    out.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (tab.basis[i] < n) out.x[tab.basis[i]] = tab.rhs(i);
    for (int j = 0; j < n; ++j) out.x[j] += lb[j];
    out.objective = tab.obj[tab.cols] + obj_shift; // -(-c'z) accumulated in the rhs cell

    // duals from the artificial columns: internal prices are y_i = -r(art_i)
    out.eq_duals.assign(me, 0.0);
    out.ge_duals.assign(mg, 0.0);
    for (int i = 0; i < me; ++i) out.eq_duals[i] = sign[i] * tab.obj[n + mg + i];
    for (int k = 0; k < mg; ++k) out.ge_duals[k] = -sign[me + k] * tab.obj[n + mg + me + k];

    // certificate residuals
    double feas = 0.0;
    for (int i = 0; i < me; ++i) {
        double s = -lp.eq_rhs[i];
        for (int j = 0; j < n; ++j) s += lp.eq[size_t(i) * n + j] * out.x[j];
        feas = std::max(feas, std::fabs(s));
    }
    for (int k = 0; k < mg; ++k) {
        double s = -lp.ge_rhs[k];
        for (int j = 0; j < n; ++j) s += lp.ge[size_t(k) * n + j] * out.x[j];
        feas = std::max(feas, std::max(0.0, -s));
        // complementary slackness on inequality rows
        out.comp_slack_residual = std::max(out.comp_slack_residual, std::fabs(s * out.ge_duals[k]));
    }
    for (int j = 0; j < n; ++j) {
        double reduced = lp.objective[j];
        for (int i = 0; i < me; ++i) reduced -= lp.eq[size_t(i) * n + j] * out.eq_duals[i];
        for (int k = 0; k < mg; ++k) reduced += lp.ge[size_t(k) * n + j] * out.ge_duals[k];
        out.comp_slack_residual =
            std::max(out.comp_slack_residual, std::fabs((out.x[j] - lb[j]) * reduced));
    }
    out.primal_residual = feas;
    return out;
}

std::string dump_lp(const LinearProgram& lp) {
    std::ostringstream os;
    os.precision(17);
    os << "obj";
    for (double c : lp.objective) os << ' ' << c;
    os << '\n';
    for (int i = 0; i < lp.num_eq(); ++i) {
        os << "eq";
        for (int j = 0; j < lp.num_vars; ++j) os << ' ' << lp.eq[size_t(i) * lp.num_vars + j];
        os << ' ' << lp.eq_rhs[i] << '\n';
    }
    for (int k = 0; k < lp.num_ge(); ++k) {
        os << "ge";
        for (int j = 0; j < lp.num_vars; ++j) os << ' ' << lp.ge[size_t(k) * lp.num_vars + j];
        os << ' ' << lp.ge_rhs[k] << '\n';
    }
    return os.str();
}

} // namespace rarlkit
