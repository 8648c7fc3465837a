#pragma once

#include "rarlkit/mdp.hpp"
#include "rarlkit/rng.hpp"

#include <utility>

namespace rarlkit {

/// Sampling access to a ground MDP. Online code sees only reset/step; the
/// tables never leak through this interface.
class Simulator {
public:
    Simulator(const GroundMdp& mdp, uint64_t seed) : mdp_(&mdp), rng_(seed) {}

    int reset() {
        state_ = rng_.categorical(mdp_->start_distribution());
        return state_;
    }

    std::pair<int, double> step(int action) {
        const double r = mdp_->reward(state_, action);
        state_ = rng_.categorical(mdp_->row(state_, action), mdp_->num_states());
        ++steps_;
        return {state_, r};
    }

    int state() const { return state_; }
    long step_count() const { return steps_; }

    /// Repositions the process; meant for drivers that feed block-local
    /// learners directly.
    void set_state(int s) { state_ = s; }

private:
    const GroundMdp* mdp_;
    Rng rng_;
    int state_ = -1;
    long steps_ = 0;
};

} // namespace rarlkit
