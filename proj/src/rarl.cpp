#include "rarlkit/rarl.hpp"

#include "rarlkit/solve.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace rarlkit {

void RarlConfig::validate() const {
    auto unit = [](double v, const char* what) {
        if (v < 0.0 || v > 1.0) throw std::invalid_argument(std::string(what) + " outside [0,1]");
    };
    unit(eps_r, "eps_r");
    unit(eps_t, "eps_t");
    unit(eta, "eta");
    unit(lambda, "lambda");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps outside (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta outside (0,1)");
    if (episode_cap < 1) throw std::invalid_argument("episode_cap must be positive");
}

SecondOrderMdp correct_abstract_reward(const SecondOrderMdp& model, int sp, int s, int a,
                                       double value) {
    const double g = model.gamma();
    if (value < 0.0 || value > 1.0 / (1.0 - g) + 1e-9)
        throw std::invalid_argument("correct_abstract_reward: value outside [0, 1/(1-gamma)]");
    TupleTargets before = tuple_targets(model, sp, s, a);
    if (before.block_return < value - 1e-9)
        throw std::invalid_argument("correct_abstract_reward: value above the current target");

    const double direct = std::max(0.0, model.reward(sp, s, a) + value - before.block_return);
    const double self_loop_fac =
        g * model.transition(sp, s, a, s) / (1.0 - g * model.transition(s, s, a, s));
    if (direct == 0.0 && model.transition(sp, s, a, s) == 0.0)
        throw std::runtime_error(
            "correct_abstract_reward: zero-reward branch with no self-entry probability");

    SecondOrderMdp out = model;
    const int P = model.num_predecessors();
    std::vector<double> snapshot(P, 0.0);
    for (int sp2 = 0; sp2 < P; ++sp2) {
        if (sp2 == sp || sp2 == s) continue;
        snapshot[sp2] = tuple_targets(model, sp2, s, a).block_return;
    }
    out.reward_at(sp, s, a) = direct;
    if (direct == 0.0) out.reward_at(s, s, a) = value / self_loop_fac;
    for (int sp2 = 0; sp2 < P; ++sp2) {
        if (sp2 == sp || sp2 == s) continue;
        const double after = tuple_targets(out, sp2, s, a).block_return;
        out.reward_at(sp2, s, a) =
            std::min(1.0, out.reward(sp2, s, a) + snapshot[sp2] - after);
    }
    return out;
}

OptionRollout rollout_option(Simulator& sim, const Mapping& mapping,
                             const FRelativeOption& option, int prev_state, int step_cap,
                             Rng& rng) {
    const int dummy_ground = int(mapping.block_of.size());
    const int prev_block =
        prev_state == dummy_ground ? mapping.num_abstract_states : mapping(prev_state);
    if (prev_block != option.from_block || mapping(sim.state()) != option.block)
        throw std::invalid_argument("rollout_option: initiation set mismatch");

    OptionRollout out;
    int prev = prev_state;
    int s = sim.state();
    while (true) {
        if (out.steps >= step_cap) {
            out.prev_state = prev;
            out.state = s;
            out.truncated = true;
            return out;
        }
        const int k = option.index_of(s);
        int a = 0;
        if (k >= 0) {
            if (option.stochastic()) {
                a = rng.categorical(&option.stoch.prob[size_t(k) * option.stoch.num_actions],
                                    option.stoch.num_actions);
            } else {
                a = option.det[k];
            }
        }
        auto [s2, r] = sim.step(a);
        out.rewards.push_back(r);
        ++out.steps;
        prev = s;
        s = s2;
        if (mapping(s) != option.block) {
            out.prev_state = prev;
            out.state = s;
            return out;
        }
    }
}

double sample_complexity_budget(const RarlConfig& config, int num_abstract,
                                int num_abstract_actions, double realizer_complexity) {
    const double tuples = double(num_abstract) * num_abstract * num_abstract_actions;
    return (2.0 * tuples / config.eps) *
           (realizer_complexity * double(num_abstract) * num_abstract +
            std::log(2.0 * tuples / config.delta));
}

namespace {

struct TupleKey {
    int sp, s, a;
    bool operator<(const TupleKey& o) const {
        return std::tie(sp, s, a) < std::tie(o.sp, o.s, o.a);
    }
};

} // namespace

RarlResult rarl_run(Simulator& sim, const AbstractionPair& pair, const RarlConfig& config) {
    config.validate();
    pair.validate(false);
    const auto t0 = std::chrono::steady_clock::now();

    const GroundMdp& ground = pair.ground;
    const Mapping& mapping = pair.mapping;
    const int Sb = mapping.num_abstract_states;
    const double g = ground.gamma();
    const double gb = pair.abstract_model.gamma();
    const int dummy_ground = int(mapping.block_of.size());

    SecondOrderMdp model = pair.abstract_model;
    const int vi_k = config.vi_iterations > 0 ? config.vi_iterations
                                              : vi_iterations_for(gb, config.eps, true);
    const int abstract_horizon =
        int(std::ceil(std::log(1.0 / (config.eps * (1.0 - gb))) / (1.0 - gb)));
    const long hard_step_cap = long(std::ceil(50.0 / (1.0 - g)));
    const int option_step_cap =
        int(std::ceil(std::log(1.0 / ((1.0 - g) * 1e-3)) / (1.0 - g)));

    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    RarlResult result;
    std::map<TupleKey, std::unique_ptr<OnlineRealizer>> realizers;
    std::map<TupleKey, bool> closed; // realized already; each tuple at most once

    DeterministicPairPolicy policy = value_iteration_2mdp(model, vi_k).greedy;
    double abstract_value =
        value_from_start_2mdp(model, evaluate_policy_2mdp(model, policy));

    auto realizer_for = [&](const TupleKey& key) -> OnlineRealizer& {
        auto it = realizers.find(key);
        if (it == realizers.end()) {
            OnlineRealizerConfig rc;
            rc.eps_t = config.eps_t;
            rc.eta = config.eta;
            rc.lambda = config.lambda;
            rc.delta_i = config.delta / (2.0 * double(Sb) * Sb * model.num_actions());
            rc.n_min_override = config.n_min_override;
            rc.n_entry_min = config.n_entry_min;
            it = realizers
                     .emplace(key, std::make_unique<OnlineRealizer>(
                                       mapping, ground.num_actions(), g, key.sp, key.s,
                                       tuple_targets(model, key.sp, key.s, key.a), rc))
                     .first;
            result.realizer_sample_bound =
                std::max(result.realizer_sample_bound, it->second->sample_complexity_bound());
        }
        return *it->second;
    };

    long clean_streak = 0;
    bool settled = false;

    for (long episode = 0; episode < config.episode_cap; ++episode) {
        int s = sim.reset();
        int prev_state = dummy_ground;
        double ep_return = 0.0, discount = 1.0;
        long ep_steps = 0;
        bool alive = true;
        bool escape = false, explored = false;
        int block_switches = 0;

        auto account = [&](const std::vector<double>& rewards) {
            for (double r : rewards) {
                ep_return += discount * r;
                discount *= g;
                ++ep_steps;
                if (rng.uniform() >= g) alive = false; // geometric stopping
            }
            if (ep_steps >= hard_step_cap) alive = false;
        };

        while (alive) {
            const int prev_block =
                prev_state == dummy_ground ? Sb : mapping(prev_state);
            const int b = mapping(s);
            const int a = policy.at(prev_block, b);
            TupleKey key{prev_block, b, a};

            const bool known = closed.count(key) > 0;
            if (known) {
                const FRelativeOption& option = result.realized.at({key.sp, key.s, key.a});
                OptionRollout roll =
                    rollout_option(sim, mapping, option, prev_state, option_step_cap, rng);
                account(roll.rewards);
                prev_state = roll.prev_state;
                s = roll.state;
                ++block_switches;
                if (roll.truncated) break; // trapped inside the block; give up the episode
                continue;
            }

            explored = true;
            if (block_switches < abstract_horizon) escape = true;
            OnlineRealizer& realizer = realizer_for(key);
            OnlineRealizer::RolloutOutcome roll = realizer.rollout_control(sim);
            account(roll.rewards);
            prev_state = roll.prev_state;
            s = roll.state;
            ++block_switches;

            if (realizer.enough()) {
                RealizationResult got = realizer.get();
                closed[key] = true;
                if (!got.feasible)
                    result.notes.push_back("tuple (" + std::to_string(key.sp) + "," +
                                           std::to_string(key.s) + "," + std::to_string(key.a) +
                                           ") infeasible from its entry distribution, gap " +
                                           std::to_string(got.max_gap));
                result.realized[{key.sp, key.s, key.a}] = got.option;
                const double v_opt = std::min(got.value + config.eps_r / (1.0 - g) + config.eta,
                                              1.0 / (1.0 - g));
                const double target = tuple_targets(model, key.sp, key.s, key.a).block_return;
                if (target > v_opt) {
                    try {
                        model = correct_abstract_reward(model, key.sp, key.s, key.a, v_opt);
                        ++result.updates;
                        result.corrections.push_back(
                            {key.sp, key.s, key.a, target,
                             tuple_targets(model, key.sp, key.s, key.a).block_return});
                    } catch (const std::exception& e) {
                        result.notes.push_back(std::string("correction skipped: ") + e.what());
                    }
                    policy = value_iteration_2mdp(model, vi_k).greedy;
                    abstract_value =
                        value_from_start_2mdp(model, evaluate_policy_2mdp(model, policy));
                }
            }
            break; // the explore branch always concludes the episode
        }

        // run out the episode under the exploration policy for logging
        while (alive) {
            const int b = mapping(s);
            const int prev_block = prev_state == dummy_ground ? Sb : mapping(prev_state);
            TupleKey key{prev_block, b, policy.at(prev_block, b)};
            int action = -1;
            auto it = realizers.find(key);
            if (it != realizers.end() && !closed.count(key))
                action = it->second->preferred_action(s);
            if (action < 0) action = rng.uniform_int(ground.num_actions());
            auto [s2, r] = sim.step(action);
            ep_return += discount * r;
            discount *= g;
            ++ep_steps;
            if (mapping(s2) != b) prev_state = s;
            s = s2;
            if (rng.uniform() >= g || ep_steps >= hard_step_cap) alive = false;
        }

        EpisodeLog log;
        log.episode = episode;
        log.discounted_return = ep_return;
        log.escape = escape;
        log.known_tuples = int(closed.size());
        log.updates = result.updates;
        log.abstract_value = abstract_value;
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.episodes.push_back(log);

        clean_streak = explored ? 0 : clean_streak + 1;
        if (clean_streak >= config.settle_episodes) {
            settled = true;
            break;
        }
    }

    result.cap_exceeded = !settled;
    result.final_model = model;
    result.final_policy = policy;
    for (const auto& [key, option] : result.realized) {
        const auto [sp, s, a] = key;
        if (policy.at(sp, s) == a) result.options.insert(option);
    }
    return result;
}

} // namespace rarlkit
