#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "rarlkit/envs.hpp"
#include "rarlkit/solve.hpp"

#include <cmath>

using namespace rarlkit;

namespace {

GroundMdp absorbing_unit_reward(double gamma) {
    // one state, one action, reward 1
    return GroundMdp(1, 1, gamma, {1.0}, {1.0}, {1.0});
}

GroundMdp two_chain(double gamma) {
    // s0 -> s1, s1 absorbing, no rewards
    std::vector<double> T = {0, 1, 0, 1};
    return GroundMdp(2, 1, gamma, T, {0.0, 0.0}, {1.0, 0.0});
}

} // namespace

TEST_CASE("evaluation: absorbing unit-reward state gives the geometric sum") {
    GroundMdp mdp = absorbing_unit_reward(0.9);
    DeterministicPolicy pi{{0}};
    auto v = evaluate_policy(mdp, pi);
    CHECK(v[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("evaluation: zero rewards give zero values") {
    GroundMdp mdp = random_mdp(3, 6, 2, 3);
    GroundMdp zero(mdp.num_states(), mdp.num_actions(), mdp.gamma(), mdp.transition_table(),
                   std::vector<double>(size_t(mdp.num_states()) * mdp.num_actions(), 0.0),
                   mdp.start_distribution());
    DeterministicPolicy pi{std::vector<int>(6, 1)};
    for (double v : evaluate_policy(zero, pi)) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("evaluation matches a Monte-Carlo rollout oracle") {
    GroundMdp mdp = random_mdp(0, 5, 3, 3);
    DeterministicPolicy pi{{0, 2, 1, 0, 2}};
    auto v = evaluate_policy(mdp, pi);
    const double eps = 1e-3;
    const int horizon =
        int(std::ceil(std::log(1.0 / (eps * (1.0 - mdp.gamma()))) / (1.0 - mdp.gamma())));
    for (int s = 0; s < 5; ++s) {
        auto mc = oracle::mc_policy_value(mdp, pi, s, 100000, horizon, 99 + s);
        CHECK(std::fabs(mc.mean - v[s]) < 3.0 * mc.std_error + eps);
    }
}

TEST_CASE("stochastic-policy evaluation agrees with the mixed deterministic values") {
    GroundMdp mdp = absorbing_unit_reward(0.5);
    StochasticPolicy pi;
    pi.num_actions = 1;
    pi.prob = {1.0};
    CHECK(evaluate_policy(mdp, pi)[0] == doctest::Approx(2.0));
}

TEST_CASE("value iteration: zero rewards keep Q at zero with action 0 greedy") {
    GroundMdp mdp = random_mdp(4, 5, 3, 2);
    GroundMdp zero(mdp.num_states(), mdp.num_actions(), mdp.gamma(), mdp.transition_table(),
                   std::vector<double>(15, 0.0), mdp.start_distribution());
    auto res = value_iteration(zero, 25);
    for (double q : res.q) CHECK(q == 0.0);
    for (int a : res.greedy.action) CHECK(a == 0);
}

TEST_CASE("value iteration: two-armed bandit") {
    // one state, arms paying 0.2 and 0.8, gamma 0.5
    GroundMdp mdp(1, 2, 0.5, {1.0, 1.0}, {0.2, 0.8}, {1.0});
    auto one = value_iteration(mdp, 1);
    CHECK(one.greedy.action[0] == 1);
    CHECK(one.q[0] == doctest::Approx(0.2));
    CHECK(one.q[1] == doctest::Approx(0.8));
    // committing to the better arm forever pays 0.8/(1-0.5)
    DeterministicPolicy commit{{1}};
    CHECK(evaluate_policy(mdp, commit)[0] == doctest::Approx(1.6));
    // hand series for the converged optimal Q: Q*(a) = R(a) + 0.5 * 1.6
    auto res = value_iteration(mdp, 60);
    CHECK(res.greedy.action[0] == 1);
    CHECK(res.q[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.q[1] == doctest::Approx(1.6).epsilon(1e-10));
}

TEST_CASE("value iteration reaches the enumerated optimum") {
    GroundMdp mdp = random_mdp(12, 5, 3, 3);
    const double eps = 1e-3;
    auto res = value_iteration(mdp, vi_iterations_for(mdp.gamma(), eps));
    auto v_greedy = evaluate_policy(mdp, res.greedy);
    auto [best, v_best] = oracle::enumerate_optimal(mdp);
    for (int s = 0; s < mdp.num_states(); ++s) CHECK(v_greedy[s] > v_best[s] - eps);
}

TEST_CASE("parallel and serial sweeps agree") {
    GroundMdp mdp = random_mdp(21, 40, 4, 6);
    auto a = value_iteration(mdp, 80);
    auto b = value_iteration_serial(mdp, 80);
    for (size_t i = 0; i < a.q.size(); ++i) CHECK(a.q[i] == b.q[i]);
    SecondOrderMdp two = SecondOrderMdp::from_first_order(random_mdp(22, 9, 3, 4));
    auto c = value_iteration_2mdp(two, 80);
    auto d = value_iteration_2mdp_serial(two, 80);
    for (size_t i = 0; i < c.q.size(); ++i) CHECK(c.q[i] == d.q[i]);
}

TEST_CASE("contraction: successive sup-norm deltas decay by at most gamma") {
    GroundMdp mdp = random_mdp(33, 6, 2, 3, 0.9);
    std::vector<double> prev_q, prev_delta;
    double last_delta = -1.0;
    auto prev = value_iteration(mdp, 1);
    for (int k = 2; k <= 100; ++k) {
        auto cur = value_iteration(mdp, k);
        double delta = 0.0;
        for (size_t i = 0; i < cur.q.size(); ++i)
            delta = std::max(delta, std::fabs(cur.q[i] - prev.q[i]));
        if (last_delta >= 0.0 && last_delta > 1e-13)
            CHECK(delta <= mdp.gamma() * last_delta + 1e-12);
        last_delta = delta;
        prev = cur;
    }
}

TEST_CASE("contraction holds for pair backups too") {
    SecondOrderMdp two = SecondOrderMdp::from_first_order(random_mdp(34, 5, 2, 3, 0.9));
    double last_delta = -1.0;
    auto prev = value_iteration_2mdp(two, 1);
    for (int k = 2; k <= 100; ++k) {
        auto cur = value_iteration_2mdp(two, k);
        double delta = 0.0;
        for (size_t i = 0; i < cur.q.size(); ++i)
            delta = std::max(delta, std::fabs(cur.q[i] - prev.q[i]));
        if (last_delta >= 0.0 && last_delta > 1e-13)
            CHECK(delta <= two.gamma() * last_delta + 1e-12);
        last_delta = delta;
        prev = cur;
    }
}

TEST_CASE("2-mdp value iteration: single action matches policy evaluation") {
    SecondOrderMdp two = SecondOrderMdp::from_first_order(two_chain(0.8));
    auto res = value_iteration_2mdp(two, 400);
    DeterministicPairPolicy only;
    only.num_states = 2;
    only.action.assign(6, 0);
    auto v = evaluate_policy_2mdp(two, only);
    for (int sp = 0; sp <= 2; ++sp)
        for (int s = 0; s < 2; ++s)
            CHECK(res.q[(size_t(sp) * 2 + s) * 1] ==
                  doctest::Approx(pair_value(two, v, sp, s)).epsilon(1e-9));
}

TEST_CASE("2-mdp value iteration beats exhaustive pair-policy enumeration") {
    GroundMdp base = random_mdp(5, 3, 2, 2, 0.85);
    SecondOrderMdp two = SecondOrderMdp::from_first_order(base);
    auto res = value_iteration_2mdp(two, vi_iterations_for(0.85, 1e-6));
    auto v_greedy = evaluate_policy_2mdp(two, res.greedy);

    const int pairs = (two.num_states() + 1) * two.num_states();
    double best = -1.0;
    enumerate_action_tables(pairs, two.num_actions(), 100000000,
                            [&](const std::vector<int>& acts) {
                                DeterministicPairPolicy pi;
                                pi.num_states = two.num_states();
                                pi.action = acts;
                                best = std::max(best, value_from_start_2mdp(
                                                          two, evaluate_policy_2mdp(two, pi)));
                            });
    CHECK(value_from_start_2mdp(two, v_greedy) > best - 1e-5);
}

TEST_CASE("2-mdp evaluation satisfies the self-loop closed form") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        GroundMdp base = random_mdp(1000 + trial, 4, 2, 3, 0.9);
        SecondOrderMdp two = SecondOrderMdp::from_first_order(base);
        DeterministicPairPolicy pi;
        pi.num_states = two.num_states();
        pi.action.resize((two.num_states() + 1) * two.num_states());
        for (int& a : pi.action) a = rng.uniform_int(two.num_actions());
        auto v = evaluate_policy_2mdp(two, pi);

        const int S = two.num_states();
        const double g = two.gamma();
        for (int sp = 0; sp <= S; ++sp)
            for (int s = 0; s < S; ++s) {
                const int a = pi.at(sp, s);
                const double fac = g * two.transition(sp, s, a, s) /
                                   (1.0 - g * two.transition(s, s, pi.at(s, s), s));
                double rhs = two.reward(sp, s, a) + fac * two.reward(s, s, pi.at(s, s));
                for (int s2 = 0; s2 < S; ++s2) {
                    if (s2 == s) continue;
                    rhs += (g * two.transition(sp, s, a, s2) +
                            g * g * two.transition(sp, s, a, s) *
                                two.transition(s, s, pi.at(s, s), s2) /
                                (1.0 - g * two.transition(s, s, pi.at(s, s), s))) *
                           pair_value(two, v, s, s2);
                }
                CHECK(pair_value(two, v, sp, s) == doctest::Approx(rhs).epsilon(1e-9));
            }
    }
}

TEST_CASE("occupancy: absorbing source concentrates everything") {
    GroundMdp mdp = absorbing_unit_reward(0.7);
    DeterministicPolicy pi{{0}};
    auto d = occupancy(mdp, pi, OccupancySource::from_state(0));
    CHECK(d.values[0] == doctest::Approx(1.0));
}

TEST_CASE("occupancy: deterministic two-chain splits mass as the hand series says") {
    GroundMdp mdp = two_chain(0.5);
    DeterministicPolicy pi{{0, 0}};
    auto d = occupancy(mdp, pi, OccupancySource::from_state(0));
    CHECK(d.values[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d.values[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("occupancy matches the truncated power series and normalizes") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        GroundMdp mdp = random_mdp(200 + seed, 6, 3, 3, 0.9);
        DeterministicPolicy pi{{0, 1, 2, 0, 1, 2}};
        std::vector<double> mu(6, 0.0);
        mu[seed % 6] = 1.0;
        auto d = occupancy(mdp, pi, OccupancySource::from_distribution(mu));
        d.validate();
        auto series = oracle::occupancy_series(mdp, pi, mu, 400);
        for (int s = 0; s < 6; ++s) CHECK(std::fabs(d.values[s] - series[s]) < 1e-8);
    }
}

TEST_CASE("occupancy-value duality") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        GroundMdp mdp = random_mdp(300 + seed, 5, 3, 3, 0.88);
        Rng rng(seed);
        StochasticPolicy pi;
        pi.num_actions = 3;
        pi.prob.resize(15);
        for (int s = 0; s < 5; ++s) {
            double total = 0.0;
            for (int a = 0; a < 3; ++a) total += (pi.at(s, a) = rng.exponential());
            for (int a = 0; a < 3; ++a) pi.at(s, a) /= total;
        }
        const int src = int(seed % 5);
        auto d = state_action_occupancy(mdp, pi, OccupancySource::from_state(src));
        const double via_occupancy = value_from_occupancy(d, mdp.reward_table());
        CHECK(via_occupancy == doctest::Approx(evaluate_policy(mdp, pi)[src]).epsilon(1e-9));
    }
}

TEST_CASE("value_from_occupancy edge cases") {
    GroundMdp mdp = absorbing_unit_reward(0.75);
    DeterministicPolicy pi{{0}};
    auto d_state = occupancy(mdp, pi, OccupancySource::from_state(0));
    CHECK_THROWS(value_from_occupancy(d_state, mdp.reward_table()));
    auto d = state_action_occupancy(mdp, pi, OccupancySource::from_state(0));
    CHECK(value_from_occupancy(d, {0.0}) == doctest::Approx(0.0));
    CHECK(value_from_occupancy(d, {0.3}) == doctest::Approx(0.3 / 0.25));
}

TEST_CASE("horizon truncation keeps Monte-Carlo estimates within eps") {
    GroundMdp mdp = random_mdp(77, 5, 2, 3, 0.9);
    DeterministicPolicy pi{{0, 1, 0, 1, 0}};
    auto v = evaluate_policy(mdp, pi);
    const double eps = 0.01;
    const int horizon =
        int(std::ceil(std::log(1.0 / (eps * (1.0 - mdp.gamma()))) / (1.0 - mdp.gamma())));
    auto mc = oracle::mc_policy_value(mdp, pi, 0, 40000, horizon, 5);
    CHECK(std::fabs(mc.mean - v[0]) < 3.0 * mc.std_error + eps);
}
