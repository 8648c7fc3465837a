#pragma once

#include <string>
#include <vector>

namespace rarlkit {

/// Dense linear program in the form
///   max c'x   s.t.  E x = e,  G x >= g,  x >= lower (default 0).
struct LinearProgram {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<double> eq;       // row-major, num_eq() x num_vars
    std::vector<double> eq_rhs;
    std::vector<double> ge;       // row-major, num_ge() x num_vars
    std::vector<double> ge_rhs;
    std::vector<double> lower_bounds; // empty means all zero

    int num_eq() const { return int(eq_rhs.size()); }
    int num_ge() const { return int(ge_rhs.size()); }
    void add_eq(const std::vector<double>& row, double rhs);
    void add_ge(const std::vector<double>& row, double rhs);
};

struct LpSolution {
    enum class Status { optimal, infeasible, unbounded, iteration_limit };

    Status status = Status::infeasible;
    std::vector<double> x;
    double objective = 0.0;
    // Duals satisfy  c'x* = e'eq_duals - g'ge_duals  with ge_duals >= 0.
    std::vector<double> eq_duals;
    std::vector<double> ge_duals;
    double primal_residual = 0.0;
    double comp_slack_residual = 0.0;
};

/// Two-phase dense simplex with Bland's anti-cycling rule. Pivot tolerance
/// 1e-10; exceeding the iteration cap reports Status::iteration_limit.
LpSolution solve_lp(const LinearProgram& lp, long max_iterations = 1000000);

/// Plain-text dump, one row per line: "obj c...", "eq c... rhs", "ge c... rhs".
std::string dump_lp(const LinearProgram& lp);

} // namespace rarlkit
