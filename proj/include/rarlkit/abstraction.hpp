#pragma once

#include "rarlkit/mdp.hpp"
#include "rarlkit/solve.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rarlkit {

/// Surjective map from ground states onto abstract states. The ground dummy
/// start is mapped to the abstract dummy start by convention and is not
/// stored.
struct Mapping {
    int num_abstract_states = 0;
    std::vector<int> block_of;

    int operator()(int s) const { return block_of[s]; }
    std::vector<std::vector<int>> blocks() const;
    void validate() const; // surjectivity
};

/// Entry states per ordered abstract pair and exit states per block. The
/// predecessor index may be the dummy (== num_abstract), whose entries are
/// the start-distribution support restricted to the block. Membership uses
/// strictly positive stored probabilities.
struct EntryExitSets {
    int num_abstract = 0;
    std::vector<std::vector<int>> entries; // (num_abstract+1) x num_abstract, sorted
    std::vector<std::vector<int>> exits;   // per block, sorted

    const std::vector<int>& entries_for(int sp, int s) const {
        return entries[size_t(sp) * num_abstract + s];
    }
};

EntryExitSets compute_entries_exits(const GroundMdp& mdp, const Mapping& mapping);

/// Restriction of the ground MDP to one block, its exit states and an
/// absorbing sink. Exit states are not absorbing: they transit to the sink,
/// which preserves the occupancy they receive. Rewards vanish outside the
/// block. Local indexing is interior states first, then exits, sink last.
struct BlockMdp {
    int block = -1;
    int num_abstract = 0;
    GroundMdp mdp;               // local tables, start overwritten per query
    std::vector<int> to_ground;  // local -> ground, sink excluded
    std::vector<int> local_of;   // ground -> local, -1 when absent
    int num_interior = 0;
    std::vector<int> exit_block; // abstract state of each exit, in local order

    int sink() const { return int(to_ground.size()); }
    int num_local() const { return mdp.num_states(); }
    int local_state(int ground) const { return local_of[ground]; }
};

BlockMdp build_block_mdp(const GroundMdp& mdp, const Mapping& mapping, int block);

/// Option local to one block: initiation set is the full pair of blocks and
/// it runs until the block changes. The policy covers interior states only.
struct FRelativeOption {
    int from_block = -1; // may be the dummy abstract index
    int block = -1;
    std::vector<int> states;  // sorted ground states of `block`
    std::vector<int> det;     // action per states[i] when deterministic
    StochasticPolicy stoch;   // rows per states[i] when stochastic

    bool stochastic() const { return !stoch.prob.empty(); }
    int index_of(int ground) const;
};

/// Deterministic option repeating the given action table over a block.
FRelativeOption make_option(int from_block, int block, std::vector<int> states,
                            std::vector<int> actions);

/// One option per ordered pair of abstract states (dummy predecessors
/// included).
struct PolicyOfOptions {
    std::map<std::pair<int, int>, FRelativeOption> by_pair;

    const FRelativeOption* find(int from_block, int block) const;
    void insert(FRelativeOption option);
};

struct AbstractionPair {
    GroundMdp ground;
    SecondOrderMdp abstract_model;
    Mapping mapping;

    /// Invariants of the pairing; optionally asserts the marginal start
    /// match between the two levels (tolerance 1e-12).
    void validate(bool check_start_marginal = true) const;
};

/// Occupancy of an option in its block MDP, aggregated per abstract state
/// with the sink kept separate. prob() is the normalized distribution (sums
/// to one); cumulative() strips the (1-gamma) factor, giving the discounted
/// visit sum that realizability comparisons use.
struct BlockOccupancy {
    double gamma = 0.0;
    int own_block = -1;
    std::vector<double> prob; // num_abstract entries then the sink

    double cumulative(int block) const { return prob[block] / (1.0 - gamma); }
    double sink_prob() const { return prob.back(); }
};

BlockOccupancy block_occupancy(const BlockMdp& block, const FRelativeOption& option,
                               int entry_ground);
BlockOccupancy block_occupancy_from(const BlockMdp& block, const FRelativeOption& option,
                                    const std::vector<double>& nu_local);
double block_value(const BlockMdp& block, const FRelativeOption& option, int entry_ground);
double block_value_from(const BlockMdp& block, const FRelativeOption& option,
                        const std::vector<double>& nu_local);

/// The quantities a realizing option must match for one abstract tuple:
/// exit_occupancy is the discounted probability (cumulative scale) of each
/// foreign abstract state being the one visited right after the block;
/// block_return is the return accumulated inside the block, self-loops
/// included.
struct TupleTargets {
    int own_block = -1;
    std::vector<double> exit_occupancy; // per abstract state, 0 at own_block
    double block_return = 0.0;
};

/// Exact expansion of the second-order rows, summing the geometric series of
/// self-loops. Throws when gamma * T(s|ss,a) hits 1 exactly (degenerate
/// self-loop) and when sp == s for a non-dummy predecessor.
TupleTargets tuple_targets(const SecondOrderMdp& abs, int sp, int s, int a);

/// (1-ground_gamma) * cumulative, the scale the occupancy measures use.
std::vector<double> normalized_exit_occupancy(const TupleTargets& t, double ground_gamma);

/// Per-entry realizability gaps of a given option against given targets.
/// value_gap is (1-gamma)(target return - option block value); the occupancy
/// gaps compare cumulative scales.
struct EntryGaps {
    int entry = -1;
    double value_gap = 0.0;
    double occupancy_gap = 0.0; // max over foreign blocks
    int worst_block = -1;
};

struct TupleCheckResult {
    bool vacuous = false; // empty entry set: trivially realizable, flagged
    std::vector<EntryGaps> per_entry;
    double worst_value_gap = 0.0;
    double worst_occupancy_gap = 0.0;

    bool ok(double eps_r, double eps_t) const {
        return vacuous || (worst_value_gap <= eps_r && worst_occupancy_gap <= eps_t);
    }
};

TupleCheckResult check_option_against_targets(const GroundMdp& mdp, const Mapping& mapping,
                                              const std::vector<int>& entry_states,
                                              const TupleTargets& targets,
                                              const FRelativeOption& option);

TupleCheckResult check_realizable_tuple(const AbstractionPair& pair, int sp, int s, int a,
                                        const FRelativeOption& option);

/// Relaxed check against an entry distribution: gaps are computed on the
/// nu-averaged block occupancy and value.
struct FromNuCheckResult {
    double value_gap = 0.0;
    double occupancy_gap = 0.0;
    int worst_block = -1;

    bool ok(double eps_r, double eps_t) const {
        return value_gap <= eps_r && occupancy_gap <= eps_t;
    }
};

FromNuCheckResult check_realizable_from(const AbstractionPair& pair, int sp, int s, int a,
                                        const std::vector<int>& support,
                                        const std::vector<double>& weights,
                                        const FRelativeOption& option);

/// Per-tuple verdict produced by the witness search (see realizer module for
/// the search itself).
struct TupleRealizability {
    int sp = -1, s = -1, a = -1;
    bool vacuous = false;
    bool has_witness = false;
    FRelativeOption witness;
    double worst_value_gap = 0.0;
    double worst_occupancy_gap = 0.0;
    bool realizable = false;
};

struct RealizabilityReport {
    double eps_r = 0.0, eps_t = 0.0;
    std::vector<TupleRealizability> tuples;
    bool all_realizable = false;
};

/// Dominating-action search per enumerated deterministic option of one pair.
struct BestResponseEntry {
    std::vector<int> option_actions;
    int dominating_action = -1; // -1 when none dominates
    int witness_entry = -1;     // entry state violating the best candidate
};

std::vector<BestResponseEntry> best_response_targets(const AbstractionPair& pair, int sp, int s,
                                                     long enum_cap = 1000000);

struct AdmissibilityViolation {
    int sp = -1, s = -1;
    std::vector<int> option_actions;
    int entry = -1;
};

struct AdmissibilityReport {
    bool decided = true; // false: enumeration cap exceeded somewhere
    bool admissible = false;
    std::vector<AdmissibilityViolation> violations;
    long options_checked = 0;
};

AdmissibilityReport check_admissible(const AbstractionPair& pair, long enum_cap = 1000000);

/// Exact transition/reward equality check for a candidate homomorphism into
/// a first-order abstract model (tolerance 1e-12). action_maps[s] maps each
/// ground action to an abstract action and must be surjective.
struct HomomorphismResult {
    bool ok = false;
    std::string detail;
    // two same-block states whose block sums disagree, when that is the cause
    std::optional<std::pair<int, int>> conflicting_states;
};

HomomorphismResult check_homomorphism(const GroundMdp& mdp, const GroundMdp& abstract_mdp,
                                      const Mapping& f,
                                      const std::vector<std::vector<int>>& action_maps);

/// Stochastic-bisimulation check between two MDPs sharing an action space:
/// totality, reward equality on related pairs, and block-sum transition
/// equality over the closure partitions.
struct BisimulationResult {
    bool ok = false;
    std::string detail;
};

BisimulationResult check_bisimulation(const GroundMdp& a, const GroundMdp& b,
                                      const std::vector<std::pair<int, int>>& relation);

/// Necessary condition for running the abstraction at a reduced discount:
/// own-block occupancy must cover (1-gamma_bar) * max(1, option value).
struct HorizonFeasibility {
    bool ok = false;
    double slack = 0.0;
    double own_occupancy = 0.0;
    double option_value = 0.0;
};

HorizonFeasibility horizon_feasibility(const AbstractionPair& pair, int sp, int s,
                                       const FRelativeOption& option, int entry);

/// (eps_r (1 - gamma_bar) + eps_t * num_abstract) / ((1-gamma)^2 (1-gamma_bar))
double value_loss_bound(double eps_r, double eps_t, double gamma, double gamma_bar,
                        int num_abstract);

/// Exact value of a policy of options, solved on the (previous block, state)
/// chain. Row dummy holds the values from the start distribution.
struct OptionPolicyValues {
    int num_abstract = 0, num_states = 0;
    std::vector<double> v; // (num_abstract+1) x num_states

    double at(int prev_block, int s) const { return v[size_t(prev_block) * num_states + s]; }
};

OptionPolicyValues evaluate_policy_of_options(const GroundMdp& mdp, const Mapping& mapping,
                                              const PolicyOfOptions& options);
double start_value(const OptionPolicyValues& values, const GroundMdp& mdp);

/// Visits every deterministic action table of the given shape unless the
/// count |A|^n exceeds the cap; returns false in that case.
bool enumerate_action_tables(int num_states, int num_actions, long cap,
                             const std::function<void(const std::vector<int>&)>& fn);

} // namespace rarlkit
