#pragma once

#include "rarlkit/abstraction.hpp"
#include "rarlkit/realizer.hpp"
#include "rarlkit/simulator.hpp"

#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace rarlkit {

struct RarlConfig {
    double eps_r = 0.05, eps_t = 0.05;
    double eta = 0.05;    // option suboptimality granted to the realizer
    double lambda = 0.05; // constraint violation granted to the realizer
    double eps = 0.05;    // planning accuracy
    double delta = 0.1;   // confidence
    int vi_iterations = 0;    // 0: conservative default from the accuracy bound
    long episode_cap = 200000;
    int settle_episodes = 50; // stop after this many consecutive exploit-only episodes
    uint64_t seed = 0;
    int n_min_override = 0;   // 0: Hoeffding schedule
    int n_entry_min = 100;

    void validate() const;
};

struct EpisodeLog {
    long episode = 0;
    double discounted_return = 0.0;
    bool escape = false;     // reached an unknown tuple within the abstract horizon
    int known_tuples = 0;
    int updates = 0;         // reward corrections so far
    double abstract_value = 0.0;
    double seconds = 0.0;    // wall clock since the start of the run
};

struct CorrectionLog {
    int sp = -1, s = -1, a = -1;
    double target_before = 0.0;
    double target_after = 0.0;
};

struct RarlResult {
    PolicyOfOptions options;                                   // realization of the final policy
    std::map<std::tuple<int, int, int>, FRelativeOption> realized; // full option dictionary
    std::vector<EpisodeLog> episodes;
    std::vector<CorrectionLog> corrections;
    SecondOrderMdp final_model;
    DeterministicPairPolicy final_policy;
    bool cap_exceeded = false; // episode cap hit while still exploring
    int updates = 0;
    long realizer_sample_bound = 0; // worst per-tuple rollout budget encountered
    std::vector<std::string> notes;
};

/// The full learning loop: plan on the abstract model, execute known options,
/// hand control to the per-tuple online realizer inside unknown blocks, and
/// correct over-optimistic abstract rewards whenever a fresh realization
/// undershoots the model's promise.
RarlResult rarl_run(Simulator& sim, const AbstractionPair& pair, const RarlConfig& config);

/// Reward correction for one abstract tuple: rewrites the direct and
/// self-loop rewards so the tuple's in-block return target becomes exactly
/// `value`, and compensates the other predecessor rows so their targets are
/// preserved (clamped to [0,1]). Requires value <= current target; throws
/// without modifying anything when the self-loop branch would divide by a
/// zero transition probability.
SecondOrderMdp correct_abstract_reward(const SecondOrderMdp& model, int sp, int s, int a,
                                       double value);

struct OptionRollout {
    int prev_state = -1;
    int state = -1;
    int steps = 0;
    bool truncated = false;
    std::vector<double> rewards;
};

/// Executes the option's policy until the block changes or the step cap
/// triggers; prev_state may be the ground dummy index for episode starts.
OptionRollout rollout_option(Simulator& sim, const Mapping& mapping,
                             const FRelativeOption& option, int prev_state, int step_cap,
                             Rng& rng);

/// Episode budget from the analysis, for reporting observed escape counts
/// against: (2 S^2 A / eps) (realizer_complexity S^2 + ln(2 S^2 A / delta)).
double sample_complexity_budget(const RarlConfig& config, int num_abstract,
                                int num_abstract_actions, double realizer_complexity);

} // namespace rarlkit
