#pragma once

// Test-only oracles, kept independent of the library's solver paths: plain
// power series, Monte-Carlo rollouts, exhaustive enumeration.

#include "rarlkit/abstraction.hpp"
#include "rarlkit/linalg.hpp"
#include "rarlkit/lp.hpp"
#include "rarlkit/mdp.hpp"
#include "rarlkit/rng.hpp"
#include "rarlkit/solve.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using namespace rarlkit;

inline std::vector<double> policy_matrix(const GroundMdp& mdp, const DeterministicPolicy& pi) {
    const int S = mdp.num_states();
    std::vector<double> P(size_t(S) * S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int s2 = 0; s2 < S; ++s2) P[size_t(s) * S + s2] = mdp.transition(s, pi.action[s], s2);
    return P;
}

/// Truncated power series d = (1-g) sum_{t<=T} g^t mu P^t.
inline std::vector<double> occupancy_series(const GroundMdp& mdp, const DeterministicPolicy& pi,
                                            const std::vector<double>& mu, int horizon = 200) {
    const int S = mdp.num_states();
    const double g = mdp.gamma();
    std::vector<double> P = policy_matrix(mdp, pi);
    std::vector<double> cur = mu, next(S), out(S, 0.0);
    double w = 1.0 - g;
    for (int t = 0; t <= horizon; ++t) {
        for (int s = 0; s < S; ++s) out[s] += w * cur[s];
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < S; ++s)
            for (int s2 = 0; s2 < S; ++s2) next[s2] += cur[s] * P[size_t(s) * S + s2];
        cur.swap(next);
        w *= g;
    }
    return out;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo return of a policy from a start state, truncated at `horizon`.
inline McEstimate mc_policy_value(const GroundMdp& mdp, const DeterministicPolicy& pi, int start,
                                  int episodes, int horizon, uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (int e = 0; e < episodes; ++e) {
        int s = start;
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            const int a = pi.action[s];
            ret += disc * mdp.reward(s, a);
            disc *= mdp.gamma();
            s = rng.categorical(mdp.row(s, a), mdp.num_states());
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    McEstimate out;
    out.mean = sum / episodes;
    const double var = std::max(0.0, sum_sq / episodes - out.mean * out.mean);
    out.std_error = std::sqrt(var / episodes);
    return out;
}

/// Best deterministic policy by exhaustive enumeration, evaluated exactly.
inline std::pair<DeterministicPolicy, std::vector<double>> enumerate_optimal(
    const GroundMdp& mdp) {
    DeterministicPolicy best;
    std::vector<double> best_v;
    double best_start = -1.0;
    enumerate_action_tables(mdp.num_states(), mdp.num_actions(), 100000000,
                            [&](const std::vector<int>& acts) {
                                DeterministicPolicy pi{acts};
                                std::vector<double> v = evaluate_policy(mdp, pi);
                                const double sv = value_from_start(mdp, v);
                                if (best_v.empty() || sv > best_start) {
                                    best = pi;
                                    best_v = v;
                                    best_start = sv;
                                }
                            });
    return {best, best_v};
}

/// First-order expansion (no pair dependence) of the tuple targets, in the
/// cumulative scale: h = g T(s'|s) / (1 - g T(s|s)), V = R(s) / (1 - g T(s|s)).
inline TupleTargets first_order_targets(const GroundMdp& abs1, int s, int a) {
    TupleTargets t;
    t.own_block = s;
    const double g = abs1.gamma();
    const double denom = 1.0 - g * abs1.transition(s, a, s);
    t.exit_occupancy.assign(abs1.num_states(), 0.0);
    for (int s2 = 0; s2 < abs1.num_states(); ++s2)
        if (s2 != s) t.exit_occupancy[s2] = g * abs1.transition(s, a, s2) / denom;
    t.block_return = abs1.reward(s, a) / denom;
    return t;
}

/// Truncated series for the abstract first-exit occupancy: one step from the
/// (sp, s) row, then self-loops through the (s, s) row.
inline double abstract_exit_series(const SecondOrderMdp& abs, int sp, int s, int a, int target,
                                   int horizon = 500) {
    const double g = abs.gamma();
    double out = g * abs.transition(sp, s, a, target);
    double stay = abs.transition(sp, s, a, s);
    double disc = g * g;
    for (int t = 2; t <= horizon; ++t) {
        out += disc * stay * abs.transition(s, s, a, target);
        stay *= abs.transition(s, s, a, s);
        disc *= g;
    }
    return out;
}

/// Ground MDP that folds exactly onto `quotient`: every abstract state gets
/// two copies, and each quotient transition probability is split between the
/// two target copies by a random fraction. Block sums then reproduce the
/// quotient by construction.
inline std::pair<GroundMdp, Mapping> duplicated_mdp(const GroundMdp& quotient, uint64_t seed) {
    Rng rng(seed);
    const int Sb = quotient.num_states(), A = quotient.num_actions();
    const int S = 2 * Sb;
    std::vector<double> T(size_t(S) * A * S, 0.0), R(size_t(S) * A), start(S, 0.0);
    for (int sb = 0; sb < Sb; ++sb)
        for (int copy = 0; copy < 2; ++copy) {
            const int s = 2 * sb + copy;
            for (int a = 0; a < A; ++a) {
                R[size_t(s) * A + a] = quotient.reward(sb, a);
                for (int tb = 0; tb < Sb; ++tb) {
                    const double p = quotient.transition(sb, a, tb);
                    if (p == 0.0) continue;
                    const double split = rng.uniform();
                    T[(size_t(s) * A + a) * S + 2 * tb] = p * split;
                    T[(size_t(s) * A + a) * S + 2 * tb + 1] = p * (1.0 - split);
                }
            }
        }
    for (int sb = 0; sb < Sb; ++sb) {
        const double p = quotient.start_distribution()[sb];
        const double split = rng.uniform();
        start[2 * sb] = p * split;
        start[2 * sb + 1] = p * (1.0 - split);
    }
    Mapping f;
    f.num_abstract_states = Sb;
    f.block_of.resize(S);
    for (int s = 0; s < S; ++s) f.block_of[s] = s / 2;
    GroundMdp ground(S, A, quotient.gamma(), std::move(T), std::move(R), std::move(start));
    ground.validate();
    return {std::move(ground), std::move(f)};
}

/// Brute-force LP oracle: tries every basis of active constraints among
/// {equalities, inequalities, variable bounds} and keeps the best feasible
/// vertex. Exponential; test sizes only.
inline bool vertex_enumeration(const LinearProgram& lp, double& best) {
    const int n = lp.num_vars;
    struct Row {
        std::vector<double> a;
        double b;
        bool required;
    };
    std::vector<Row> rows;
    for (int i = 0; i < lp.num_eq(); ++i)
        rows.push_back({{lp.eq.begin() + size_t(i) * n, lp.eq.begin() + size_t(i + 1) * n},
                        lp.eq_rhs[i],
                        true});
    for (int k = 0; k < lp.num_ge(); ++k)
        rows.push_back({{lp.ge.begin() + size_t(k) * n, lp.ge.begin() + size_t(k + 1) * n},
                        lp.ge_rhs[k],
                        false});
    for (int j = 0; j < n; ++j) {
        Row bound;
        bound.a.assign(n, 0.0);
        bound.a[j] = 1.0;
        bound.b = lp.lower_bounds.empty() ? 0.0 : lp.lower_bounds[j];
        bound.required = false;
        rows.push_back(bound);
    }
    const int m = int(rows.size());
    bool found = false;
    std::vector<int> pick(n);
    // iterate over all n-subsets of rows
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    auto advance = [&]() {
        int k = n - 1;
        while (k >= 0 && idx[k] == m - n + k) --k;
        if (k < 0) return false;
        ++idx[k];
        for (int j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
        return true;
    };
    do {
        bool all_required_present = true;
        for (int i = 0; i < lp.num_eq(); ++i)
            if (std::find(idx.begin(), idx.end(), i) == idx.end()) all_required_present = false;
        if (!all_required_present) continue;
        std::vector<double> A(size_t(n) * n), b(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) A[size_t(i) * n + j] = rows[idx[i]].a[j];
            b[i] = rows[idx[i]].b;
        }
        std::vector<double> x;
        try {
            x = lu_solve(A, b, n);
        } catch (...) {
            continue;
        }
        bool feasible = true;
        for (const Row& row : rows) {
            double lhs = 0.0;
            for (int j = 0; j < n; ++j) lhs += row.a[j] * x[j];
            if (row.required ? std::fabs(lhs - row.b) > 1e-7 : lhs < row.b - 1e-7) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
        if (!found || obj > best) {
            found = true;
            best = obj;
        }
    } while (advance());
    return found;
}

} // namespace oracle
