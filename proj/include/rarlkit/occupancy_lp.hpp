#pragma once

#include "rarlkit/abstraction.hpp"
#include "rarlkit/lp.hpp"
#include "rarlkit/mdp.hpp"

namespace rarlkit {

/// Bellman-flow primal over state-action occupancies b:
///   max b'R   s.t.   E'b - gamma P'b = (1-gamma) nu,   b >= 0.
/// At the optimum b is the occupancy of an optimal policy and the objective
/// equals (1-gamma) times the optimal value from nu.
LinearProgram build_primal_occupancy_lp(const GroundMdp& mdp, const std::vector<double>& nu);

/// Flow program on a block MDP with one extra inequality per foreign abstract
/// state: the occupancy mass landing in that block must reach the target.
/// Targets and slack are in the cumulative scale used by TupleTargets; the
/// rows are stated on normalized occupancies, so both sides carry (1-gamma).
LinearProgram build_constrained_realization_lp(const BlockMdp& block,
                                               const std::vector<double>& nu_local,
                                               const std::vector<double>& target_occupancy,
                                               double eps_t);

/// Conditional distribution pi(a|s) = b(s,a) / sum_a b(s,a) over the interior
/// of the block; states with no occupancy mass fall back to uniform and are
/// reported. The policy rows cover all local states (exit and sink rows are
/// uniform placeholders).
struct ExtractedPolicy {
    StochasticPolicy policy;         // over local states of the block
    std::vector<int> zero_mass;      // interior local states with no support
    bool deterministic = false;
};

ExtractedPolicy extract_policy_from_occupancy(const std::vector<double>& b,
                                              const BlockMdp& block);

} // namespace rarlkit
