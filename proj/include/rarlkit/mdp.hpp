#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rarlkit {

constexpr double kRowSumTol = 1e-12;
constexpr double kOccupancySumTol = 1e-9;

/// Finite tabular MDP with rewards in [0,1] and a start distribution.
///
/// States are indexed 0..num_states()-1. The designated virtual start state
/// has index dummy_state() == num_states(); it carries no stored row. Its
/// outgoing transition is the start distribution regardless of action and its
/// reward is zero, which is how the abstraction layer treats it.
class GroundMdp {
public:
    GroundMdp() = default;
    GroundMdp(int num_states, int num_actions, double gamma,
              std::vector<double> transition, std::vector<double> reward,
              std::vector<double> start_distribution);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    double gamma() const { return gamma_; }
    int dummy_state() const { return S_; }

    double transition(int s, int a, int s2) const { return T_[(size_t(s) * A_ + a) * S_ + s2]; }
    double reward(int s, int a) const { return R_[size_t(s) * A_ + a]; }
    const double* row(int s, int a) const { return &T_[(size_t(s) * A_ + a) * S_]; }
    const std::vector<double>& start_distribution() const { return start_; }
    const std::vector<double>& transition_table() const { return T_; }
    const std::vector<double>& reward_table() const { return R_; }

    double& transition_at(int s, int a, int s2) { return T_[(size_t(s) * A_ + a) * S_ + s2]; }
    double& reward_at(int s, int a) { return R_[size_t(s) * A_ + a]; }
    void set_start(std::vector<double> start) { start_ = std::move(start); }

    /// Throws std::invalid_argument when a row fails to normalize within
    /// 1e-12, a reward leaves [0,1], or the start distribution is off.
    void validate() const;

private:
    int S_ = 0, A_ = 0;
    double gamma_ = 0.0;
    std::vector<double> T_;     // (s, a) -> distribution over s'
    std::vector<double> R_;     // (s, a) -> [0,1]
    std::vector<double> start_; // distribution over states
};

/// Second-order MDP over abstract states: transitions and rewards condition on
/// the pair (previous state, current state).
///
/// The predecessor index ranges over 0..num_states(); index num_states() is
/// the dummy start, so rows (dummy, s) describe the first transition taken
/// out of the start distribution.
class SecondOrderMdp {
public:
    SecondOrderMdp() = default;
    SecondOrderMdp(int num_states, int num_actions, double gamma,
                   std::vector<double> transition, std::vector<double> reward,
                   std::vector<double> start_distribution);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    double gamma() const { return gamma_; }
    int dummy_state() const { return S_; }
    int num_predecessors() const { return S_ + 1; }

    double transition(int sp, int s, int a, int s2) const {
        return T_[((size_t(sp) * S_ + s) * A_ + a) * S_ + s2];
    }
    double reward(int sp, int s, int a) const { return R_[(size_t(sp) * S_ + s) * A_ + a]; }
    const double* row(int sp, int s, int a) const {
        return &T_[((size_t(sp) * S_ + s) * A_ + a) * S_];
    }
    const std::vector<double>& start_distribution() const { return start_; }

    double& transition_at(int sp, int s, int a, int s2) {
        return T_[((size_t(sp) * S_ + s) * A_ + a) * S_ + s2];
    }
    double& reward_at(int sp, int s, int a) { return R_[(size_t(sp) * S_ + s) * A_ + a]; }

    /// Views a plain MDP as a 2-MDP with pair-independent rows.
    static SecondOrderMdp from_first_order(const GroundMdp& mdp);

    void validate() const;

private:
    int S_ = 0, A_ = 0;
    double gamma_ = 0.0;
    std::vector<double> T_;     // (sp, s, a) -> distribution over s'
    std::vector<double> R_;     // (sp, s, a) -> [0,1]
    std::vector<double> start_; // distribution over abstract states
};

/// Action per state.
struct DeterministicPolicy {
    std::vector<int> action;
};

/// Action per (previous state, state) pair; previous index may be the dummy.
struct DeterministicPairPolicy {
    int num_states = 0;
    std::vector<int> action; // (num_states+1) * num_states

    int at(int sp, int s) const { return action[size_t(sp) * num_states + s]; }
    int& at(int sp, int s) { return action[size_t(sp) * num_states + s]; }
};

/// Row-stochastic action distribution per state. Realizations coming out of
/// the occupancy LP are stochastic in general, so this lives beside the
/// deterministic table rather than replacing it.
struct StochasticPolicy {
    int num_actions = 0;
    std::vector<double> prob; // s * num_actions

    double at(int s, int a) const { return prob[size_t(s) * num_actions + a]; }
    double& at(int s, int a) { return prob[size_t(s) * num_actions + a]; }
    void validate() const;
};

/// Normalized discounted visitation distribution: the stored values carry the
/// (1-gamma) factor and sum to one. cumulative() strips that factor and gives
/// the raw discounted visit sum.
struct OccupancyMeasure {
    enum class Kind { state, state_action };

    Kind kind = Kind::state;
    double gamma = 0.0;
    std::vector<double> values;
    // originating state (when >= 0) or distribution
    int source_state = -1;
    std::vector<double> source_distribution;

    double cumulative(size_t i) const { return values[i] / (1.0 - gamma); }
    double sum() const;
    void validate() const;
};

/// MDP plus auxiliary reward functions with lower limits on their values.
struct CmdpSpec {
    GroundMdp base;
    std::vector<std::vector<double>> auxiliary_rewards; // each (s, a) -> [0,1]
    std::vector<double> lower_limits;                   // value-scale lower bounds

    void validate() const;
};

} // namespace rarlkit
