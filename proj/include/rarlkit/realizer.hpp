#pragma once

#include "rarlkit/abstraction.hpp"
#include "rarlkit/simulator.hpp"

#include <vector>

namespace rarlkit {

/// One tuple-realization instance: find an option over the block that meets
/// the occupancy targets (up to eps_t) while maximizing the block value from
/// the entry distribution.
struct RealizationProblem {
    BlockMdp block;
    int from_block = -1;
    std::vector<double> nu_local;        // entry distribution over local states
    TupleTargets targets;                 // cumulative scale
    double eps_r = 0.0, eps_t = 0.0;
    double eta = 0.0, lambda = 0.0;       // online softness; unused by the exact path
};

struct RealizationResult {
    bool feasible = false;
    FRelativeOption option;
    double value = 0.0;                   // V^o from nu
    double value_gap = 0.0;               // (1-gamma)(target return - value)
    std::vector<double> constraint_slack; // achieved - required per abstract state
    double max_gap = 0.0;                 // infeasible: worst target shortfall
    bool stochastic = false;
    std::vector<int> zero_mass_states;    // interior locals outside the LP support
};

/// The constrained-MDP view of a realization problem: the block MDP with the
/// entry distribution as its start, one indicator auxiliary reward per
/// foreign target block, and the targets (minus slack) as lower limits.
CmdpSpec realization_cmdp(const RealizationProblem& problem);

/// Solves the constrained occupancy LP and re-verifies the achieved block
/// occupancies through the independent linear-solve path before reporting
/// slacks.
RealizationResult realize_exact(const RealizationProblem& problem);

/// Fallback for infeasible instances: maximizes the worst constraint margin
/// instead. The result carries feasible = false together with the
/// least-violating option and its slacks.
RealizationResult realize_best_effort(const RealizationProblem& problem);

/// Witness search for per-entry realizability of one tuple: tries the LP
/// realization from the uniform entry distribution and from each entry
/// point mass, plus exhaustive deterministic options when the block is small
/// enough. Sound; complete for the deterministic class within the cap.
TupleRealizability find_realization(const AbstractionPair& pair, int sp, int s, int a,
                                    double eps_r, double eps_t, long enum_cap = 4096);

/// All tuples of the abstraction at once (parallel over tuples).
RealizabilityReport check_realizable_abstraction(const AbstractionPair& pair, double eps_r,
                                                 double eps_t, long enum_cap = 4096);

struct OnlineRealizerConfig {
    double eps_t = 0.0;      // cumulative-scale occupancy slack
    double eta = 0.0;        // tolerated option suboptimality
    double lambda = 0.0;     // tolerated constraint violation
    double delta_i = 0.05;   // per-instance confidence budget
    int n_min_override = 0;  // 0: Hoeffding schedule capped at 10^4
    int n_entry_min = 100;
    int rollout_cap = 0;     // 0: horizon-truncation default
};

/// Model-based online realizer: count-greedy exploration rollouts build an
/// empirical block model; once every reachable state-action is visited often
/// enough, the exact LP realizer runs on the estimate with the slack
/// tightened by the model-error allowance.
class OnlineRealizer {
public:
    OnlineRealizer(const Mapping& mapping, int num_actions, double gamma, int from_block,
                   int block, TupleTargets targets, OnlineRealizerConfig config);

    struct RolloutOutcome {
        int prev_state = -1;
        int state = -1;
        bool truncated = false;
        int steps = 0;
        std::vector<double> rewards;
    };

    /// Explores from the simulator's current state (must lie in the block)
    /// until the block is left or the step cap triggers.
    RolloutOutcome rollout_control(Simulator& sim);

    /// Count-greedy action the exploration would take; -1 outside the block.
    int preferred_action(int ground_state) const;

    bool enough() const;

    /// Builds the empirical model and realizes on it. Throws when called
    /// before enough().
    RealizationResult get() const;

    int n_min() const { return n_min_; }
    long rollouts() const { return rollouts_; }
    /// Upper bound on the rollouts this instance can consume, for the
    /// sample-complexity report.
    long sample_complexity_bound() const;
    const std::vector<double>& entry_counts() const { return entry_counts_; }

private:
    bool in_block(int s) const { return s < int(mapping_.block_of.size()) && mapping_(s) == block_; }
    std::vector<int> reachable_states() const;

    Mapping mapping_;
    int num_actions_ = 0;
    double gamma_ = 0.0;
    int from_block_ = -1, block_ = -1;
    TupleTargets targets_;
    OnlineRealizerConfig config_;
    int n_min_ = 0;
    int cap_ = 0;

    std::vector<int> interior_;                 // ground states of the block, sorted
    std::vector<int> interior_index_;           // ground -> position or -1
    std::vector<long> visit_;                   // interior x action
    std::vector<std::vector<long>> successor_;  // per (interior, action): ground counts
    std::vector<double> reward_sum_;            // interior x action
    std::vector<double> entry_counts_;          // per interior state
    long entry_total_ = 0;
    long rollouts_ = 0;
};

} // namespace rarlkit
