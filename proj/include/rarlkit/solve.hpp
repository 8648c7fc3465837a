#pragma once

#include "rarlkit/mdp.hpp"

namespace rarlkit {

/// Exact policy evaluation: solves (I - gamma P_pi) V = R_pi by dense LU.
/// The solution satisfies the Bellman system to residual <= 1e-10; a larger
/// residual signals corrupted inputs and throws.
std::vector<double> evaluate_policy(const GroundMdp& mdp, const DeterministicPolicy& policy);
std::vector<double> evaluate_policy(const GroundMdp& mdp, const StochasticPolicy& policy);

/// Start-distribution value <start, V>.
double value_from_start(const GroundMdp& mdp, const std::vector<double>& v);

struct ValueIterationResult {
    std::vector<double> q;         // (s, a)
    DeterministicPolicy greedy;    // ties broken by lowest action index
};

/// k Bellman-optimality backups from Q = 0. The default entry point runs the
/// sweeps with OpenMP; the _serial variant is the reference kept for tests
/// and the benchmark.
ValueIterationResult value_iteration(const GroundMdp& mdp, int iterations);
ValueIterationResult value_iteration_serial(const GroundMdp& mdp, int iterations);

struct PairValueIterationResult {
    std::vector<double> q;            // (sp, s, a), sp may be the dummy
    DeterministicPairPolicy greedy;
};

/// Bellman-optimality backups over state pairs:
///   Q(sp s, a) <- R(sp s, a) + gamma * sum_{s'} T(s' | sp s, a) max_a' Q(s s', a')
/// Dummy-predecessor rows are part of the sweep.
PairValueIterationResult value_iteration_2mdp(const SecondOrderMdp& mdp, int iterations);
PairValueIterationResult value_iteration_2mdp_serial(const SecondOrderMdp& mdp, int iterations);

/// Exact evaluation of a pair policy on the second-order model (dense solve
/// over all (sp, s) pairs including the dummy rows).
std::vector<double> evaluate_policy_2mdp(const SecondOrderMdp& mdp,
                                         const DeterministicPairPolicy& policy);

inline double pair_value(const SecondOrderMdp& mdp, const std::vector<double>& v, int sp, int s) {
    return v[size_t(sp) * mdp.num_states() + s];
}

/// Start value of a pair policy: expectation of V(dummy, s) under the start
/// distribution.
double value_from_start_2mdp(const SecondOrderMdp& mdp, const std::vector<double>& v);

/// Iteration count that makes the greedy policy eps-optimal. The default uses
/// the conservative bound log(2 / ((1-gamma)^2 eps)) / (1-gamma); pass
/// proof_form = false for the looser log(2 / ((1-gamma) eps)) variant.
int vi_iterations_for(double gamma, double eps, bool proof_form = true);

struct OccupancySource {
    bool is_state = true;
    int state = 0;
    std::vector<double> distribution; // used when !is_state

    static OccupancySource from_state(int s) { return {true, s, {}}; }
    static OccupancySource from_distribution(std::vector<double> d) {
        return {false, 0, std::move(d)};
    }
};

/// Normalized discounted state occupancy d(s) = (1-gamma) sum_t gamma^t Pr(s_t = s),
/// computed from the transposed Bellman-flow linear system.
OccupancyMeasure occupancy(const GroundMdp& mdp, const DeterministicPolicy& policy,
                           const OccupancySource& source);
OccupancyMeasure occupancy(const GroundMdp& mdp, const StochasticPolicy& policy,
                           const OccupancySource& source);

/// State-action variant d(s, a) = d(s) pi(a | s).
OccupancyMeasure state_action_occupancy(const GroundMdp& mdp, const DeterministicPolicy& policy,
                                        const OccupancySource& source);
OccupancyMeasure state_action_occupancy(const GroundMdp& mdp, const StochasticPolicy& policy,
                                        const OccupancySource& source);

/// <d, R> / (1 - gamma) for a state-action occupancy; throws on kind mismatch.
double value_from_occupancy(const OccupancyMeasure& d, const std::vector<double>& rewards);

} // namespace rarlkit
