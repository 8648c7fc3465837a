#include "rarlkit/realizer.hpp"

#include "rarlkit/occupancy_lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rarlkit {

namespace {

FRelativeOption option_from_policy(const BlockMdp& block, int from_block,
                                   const ExtractedPolicy& extracted) {
    const int A = block.mdp.num_actions();
    FRelativeOption o;
    o.from_block = from_block;
    o.block = block.block;
    o.states.assign(block.to_ground.begin(), block.to_ground.begin() + block.num_interior);
    if (extracted.deterministic) {
        o.det.resize(block.num_interior);
        for (int i = 0; i < block.num_interior; ++i) {
            int best = 0;
            for (int a = 1; a < A; ++a)
                if (extracted.policy.at(i, a) > extracted.policy.at(i, best)) best = a;
            o.det[i] = best;
        }
    } else {
        o.stoch.num_actions = A;
        o.stoch.prob.assign(size_t(block.num_interior) * A, 0.0);
        for (int i = 0; i < block.num_interior; ++i)
            for (int a = 0; a < A; ++a) o.stoch.at(i, a) = extracted.policy.at(i, a);
    }
    return o;
}

} // namespace

CmdpSpec realization_cmdp(const RealizationProblem& problem) {
    const BlockMdp& block = problem.block;
    const int n = block.num_local(), A = block.mdp.num_actions();
    CmdpSpec spec;
    spec.base = block.mdp;
    spec.base.set_start(problem.nu_local);
    for (int b = 0; b < block.num_abstract; ++b) {
        if (b == block.block) continue;
        const double limit = problem.targets.exit_occupancy[b] - problem.eps_t;
        if (limit <= 0.0) continue;
        std::vector<double> indicator(size_t(n) * A, 0.0);
        for (int i = block.num_interior; i < n - 1; ++i)
            if (block.exit_block[i - block.num_interior] == b)
                for (int a = 0; a < A; ++a) indicator[size_t(i) * A + a] = 1.0;
        spec.auxiliary_rewards.push_back(std::move(indicator));
        spec.lower_limits.push_back(limit);
    }
    spec.validate();
    return spec;
}

RealizationResult realize_exact(const RealizationProblem& problem) {
    const BlockMdp& block = problem.block;
    const double g = block.mdp.gamma();
    LinearProgram lp = build_constrained_realization_lp(block, problem.nu_local,
                                                        problem.targets.exit_occupancy,
                                                        problem.eps_t);
    LpSolution sol = solve_lp(lp);
    RealizationResult out;
    if (sol.status != LpSolution::Status::optimal) {
        if (sol.status != LpSolution::Status::infeasible)
            throw std::runtime_error("realize_exact: LP solver failure");
        // quantify the shortfall per target via unconstrained max-occupancy runs
        out.max_gap = 0.0;
        const int A = block.mdp.num_actions();
        for (int b = 0; b < block.num_abstract; ++b) {
            if (b == block.block) continue;
            const double required = problem.targets.exit_occupancy[b] - problem.eps_t;
            if (required <= 0.0) continue;
            LinearProgram probe = build_primal_occupancy_lp(block.mdp, problem.nu_local);
            std::fill(probe.objective.begin(), probe.objective.end(), 0.0);
            for (int i = block.num_interior; i < int(block.to_ground.size()); ++i)
                if (block.exit_block[i - block.num_interior] == b)
                    for (int a = 0; a < A; ++a) probe.objective[size_t(i) * A + a] = 1.0;
            LpSolution best = solve_lp(probe);
            if (best.status == LpSolution::Status::optimal)
                out.max_gap = std::max(out.max_gap, required - best.objective / (1.0 - g));
        }
        return out;
    }

    // among the value-optimal occupancies, prefer the one pushing the most
    // mass toward blocks whose requirement binds; keeps degenerate
    // zero-reward blocks from landing on a boundary vertex
    {
        LinearProgram stage2 = lp;
        const int A = block.mdp.num_actions();
        std::fill(stage2.objective.begin(), stage2.objective.end(), 0.0);
        bool any_target = false;
        for (int i = block.num_interior; i < int(block.to_ground.size()); ++i) {
            const int b = block.exit_block[i - block.num_interior];
            if (problem.targets.exit_occupancy[b] - problem.eps_t <= 0.0) continue;
            any_target = true;
            for (int a = 0; a < A; ++a) stage2.objective[size_t(i) * A + a] = 1.0;
        }
        if (any_target) {
            std::vector<double> value_row(lp.num_vars);
            for (int j = 0; j < lp.num_vars; ++j) value_row[j] = lp.objective[j];
            stage2.add_ge(value_row, sol.objective - 1e-10);
            LpSolution refined = solve_lp(stage2);
            if (refined.status == LpSolution::Status::optimal) sol.x = refined.x;
        }
    }
    double objective = 0.0;
    for (int j = 0; j < lp.num_vars; ++j) objective += lp.objective[j] * sol.x[j];

    ExtractedPolicy extracted = extract_policy_from_occupancy(sol.x, block);
    out.feasible = true;
    out.option = option_from_policy(block, problem.from_block, extracted);
    out.stochastic = !extracted.deterministic;
    out.zero_mass_states = extracted.zero_mass;
    out.value = objective / (1.0 - g);
    out.value_gap = (1.0 - g) * (problem.targets.block_return - out.value);

    // independent verification of the achieved occupancies
    BlockOccupancy h = block_occupancy_from(block, out.option, problem.nu_local);
    out.constraint_slack.assign(block.num_abstract, 0.0);
    for (int b = 0; b < block.num_abstract; ++b) {
        if (b == block.block) continue;
        out.constraint_slack[b] =
            h.cumulative(b) - (problem.targets.exit_occupancy[b] - problem.eps_t);
    }
    return out;
}

RealizationResult realize_best_effort(const RealizationProblem& problem) {
    const BlockMdp& block = problem.block;
    const double g = block.mdp.gamma();
    // max t  s.t. flow(b), margin_b(b) >= t for each constrained target
    LinearProgram lp = build_primal_occupancy_lp(block.mdp, problem.nu_local);
    const int nb = lp.num_vars;
    const int A = block.mdp.num_actions();
    lp.num_vars = nb + 1;
    lp.objective.assign(nb + 1, 0.0);
    lp.objective[nb] = 1.0;
    {
        // widen existing equality rows with a zero coefficient for t
        std::vector<double> widened;
        widened.reserve(size_t(lp.num_eq()) * (nb + 1));
        for (int i = 0; i < lp.num_eq(); ++i) {
            widened.insert(widened.end(), lp.eq.begin() + size_t(i) * nb,
                           lp.eq.begin() + size_t(i + 1) * nb);
            widened.push_back(0.0);
        }
        lp.eq = std::move(widened);
    }
    lp.lower_bounds.assign(nb + 1, 0.0);
    lp.lower_bounds[nb] = -2.0; // margins live in [-1, 1]
    std::vector<double> row(nb + 1, 0.0);
    for (int b = 0; b < block.num_abstract; ++b) {
        if (b == block.block) continue;
        std::fill(row.begin(), row.end(), 0.0);
        for (int i = block.num_interior; i < int(block.to_ground.size()); ++i)
            if (block.exit_block[i - block.num_interior] == b)
                for (int a = 0; a < A; ++a) row[size_t(i) * A + a] = 1.0 / (1.0 - g);
        row[nb] = -1.0;
        lp.add_ge(row, problem.targets.exit_occupancy[b] - problem.eps_t);
    }
    LpSolution sol = solve_lp(lp);
    RealizationResult out;
    if (sol.status != LpSolution::Status::optimal)
        throw std::runtime_error("realize_best_effort: LP solver failure");
    std::vector<double> occupancy_part(sol.x.begin(), sol.x.begin() + nb);
    ExtractedPolicy extracted = extract_policy_from_occupancy(occupancy_part, block);
    out.feasible = false;
    out.max_gap = std::max(0.0, -sol.x[nb]);
    out.option = option_from_policy(block, problem.from_block, extracted);
    out.stochastic = !extracted.deterministic;
    out.zero_mass_states = extracted.zero_mass;
    out.value = block_value_from(block, out.option, problem.nu_local);
    out.value_gap = (1.0 - g) * (problem.targets.block_return - out.value);
    BlockOccupancy h = block_occupancy_from(block, out.option, problem.nu_local);
    out.constraint_slack.assign(block.num_abstract, 0.0);
    for (int b = 0; b < block.num_abstract; ++b) {
        if (b == block.block) continue;
        out.constraint_slack[b] =
            h.cumulative(b) - (problem.targets.exit_occupancy[b] - problem.eps_t);
    }
    return out;
}

namespace {

std::vector<double> point_mass(const BlockMdp& block, int ground) {
    std::vector<double> nu(block.num_local(), 0.0);
    nu[block.local_state(ground)] = 1.0;
    return nu;
}

double excess(const TupleCheckResult& r, double eps_r, double eps_t) {
    return std::max(0.0, std::max(r.worst_value_gap - eps_r, r.worst_occupancy_gap - eps_t));
}

} // namespace

TupleRealizability find_realization(const AbstractionPair& pair, int sp, int s, int a,
                                    double eps_r, double eps_t, long enum_cap) {
    TupleRealizability out;
    out.sp = sp;
    out.s = s;
    out.a = a;
    EntryExitSets sets = compute_entries_exits(pair.ground, pair.mapping);
    const std::vector<int>& entries = sets.entries_for(sp, s);
    if (entries.empty()) {
        out.vacuous = true;
        out.realizable = true;
        return out;
    }
    TupleTargets targets = tuple_targets(pair.abstract_model, sp, s, a);
    BlockMdp block = build_block_mdp(pair.ground, pair.mapping, s);

    std::vector<FRelativeOption> candidates;
    {
        RealizationProblem p;
        p.block = block;
        p.from_block = sp;
        p.targets = targets;
        p.eps_t = eps_t;
        p.nu_local.assign(block.num_local(), 0.0);
        for (int e : entries) p.nu_local[block.local_state(e)] = 1.0 / double(entries.size());
        RealizationResult r = realize_exact(p);
        if (r.feasible) candidates.push_back(r.option);
        for (int e : entries) {
            p.nu_local = point_mass(block, e);
            r = realize_exact(p);
            if (r.feasible) candidates.push_back(r.option);
        }
    }

    bool have_best = false;
    TupleCheckResult best_check;
    auto score = [&](const TupleCheckResult& c) {
        // slack violations dominate; among witnesses inside the slack the
        // tightest raw gaps win
        return std::make_pair(excess(c, eps_r, eps_t),
                              std::max(c.worst_value_gap, c.worst_occupancy_gap));
    };
    auto consider = [&](const FRelativeOption& o) {
        TupleCheckResult c =
            check_option_against_targets(pair.ground, pair.mapping, entries, targets, o);
        if (!have_best || score(c) < score(best_check)) {
            have_best = true;
            best_check = c;
            out.witness = o;
            out.has_witness = true;
        }
    };
    for (const FRelativeOption& o : candidates) consider(o);

    std::vector<int> interior(block.to_ground.begin(),
                              block.to_ground.begin() + block.num_interior);
    enumerate_action_tables(block.num_interior, pair.ground.num_actions(), enum_cap,
                            [&](const std::vector<int>& acts) {
                                consider(make_option(sp, s, interior, acts));
                            });

    if (have_best) {
        out.worst_value_gap = best_check.worst_value_gap;
        out.worst_occupancy_gap = best_check.worst_occupancy_gap;
        out.realizable = best_check.ok(eps_r, eps_t);
        if (!out.realizable) out.has_witness = false;
    }
    return out;
}

RealizabilityReport check_realizable_abstraction(const AbstractionPair& pair, double eps_r,
                                                 double eps_t, long enum_cap) {
    RealizabilityReport report;
    report.eps_r = eps_r;
    report.eps_t = eps_t;
    const int Sb = pair.mapping.num_abstract_states;
    const int Ab = pair.abstract_model.num_actions();

    std::vector<std::tuple<int, int, int>> tuples;
    for (int sp = 0; sp <= Sb; ++sp)
        for (int s = 0; s < Sb; ++s)
            if (sp != s)
                for (int a = 0; a < Ab; ++a) tuples.emplace_back(sp, s, a);
    report.tuples.resize(tuples.size());

#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < tuples.size(); ++i) {
        const auto [sp, s, a] = tuples[i];
        report.tuples[i] = find_realization(pair, sp, s, a, eps_r, eps_t, enum_cap);
    }
    report.all_realizable = true;
    for (const TupleRealizability& t : report.tuples)
        if (!t.realizable) report.all_realizable = false;
    return report;
}

OnlineRealizer::OnlineRealizer(const Mapping& mapping, int num_actions, double gamma,
                               int from_block, int block, TupleTargets targets,
                               OnlineRealizerConfig config)
    : mapping_(mapping), num_actions_(num_actions), gamma_(gamma), from_block_(from_block),
      block_(block), targets_(std::move(targets)), config_(config) {
    for (int s = 0; s < int(mapping_.block_of.size()); ++s)
        if (mapping_(s) == block_) interior_.push_back(s);
    interior_index_.assign(mapping_.block_of.size(), -1);
    for (int i = 0; i < int(interior_.size()); ++i) interior_index_[interior_[i]] = i;

    if (config_.n_min_override > 0) {
        n_min_ = config_.n_min_override;
    } else {
        // Hoeffding budget for per-row transition error lambda(1-gamma)/|S_block|
        const double rows = double(interior_.size());
        const double tol = config_.lambda * (1.0 - gamma_) / std::max(rows, 1.0);
        double n = 1e18;
        if (tol > 0.0)
            n = std::ceil(std::log(2.0 * rows * num_actions_ / config_.delta_i) /
                          (2.0 * tol * tol));
        n_min_ = int(std::min(n, 1e4));
    }
    cap_ = config_.rollout_cap > 0
               ? config_.rollout_cap
               : int(std::ceil(std::log(1.0 / ((1.0 - gamma_) * 1e-3)) / (1.0 - gamma_)));

    visit_.assign(interior_.size() * size_t(num_actions_), 0);
    successor_.assign(interior_.size() * size_t(num_actions_), {});
    reward_sum_.assign(interior_.size() * size_t(num_actions_), 0.0);
    entry_counts_.assign(interior_.size(), 0.0);
}

OnlineRealizer::RolloutOutcome OnlineRealizer::rollout_control(Simulator& sim) {
    int s = sim.state();
    if (!in_block(s))
        throw std::invalid_argument("rollout_control: simulator not positioned in the block");
    entry_counts_[interior_index_[s]] += 1.0;
    ++entry_total_;
    ++rollouts_;

    // Direction table toward the nearest state still lacking visits,
    // rebuilt once per rollout from the observed edges. At saturated states
    // the walk follows it instead of cycling in place.
    std::vector<int> toward(interior_.size(), -1);
    {
        std::vector<int> dist(interior_.size(), -1);
        std::vector<int> queue;
        for (int i = 0; i < int(interior_.size()); ++i)
            for (int a = 0; a < num_actions_; ++a)
                if (visit_[size_t(i) * num_actions_ + a] < n_min_) {
                    dist[i] = 0;
                    queue.push_back(i);
                    break;
                }
        for (size_t head = 0; head < queue.size(); ++head) {
            const int j = queue[head];
            for (int i = 0; i < int(interior_.size()); ++i) {
                if (dist[i] >= 0) continue;
                for (int a = 0; a < num_actions_ && dist[i] < 0; ++a) {
                    const auto& succ = successor_[size_t(i) * num_actions_ + a];
                    if (!succ.empty() && succ[interior_[j]] > 0) {
                        dist[i] = dist[j] + 1;
                        toward[i] = a;
                        queue.push_back(i);
                    }
                }
            }
        }
    }

    RolloutOutcome out;
    int prev = s;
    while (true) {
        if (out.steps >= cap_) {
            out.prev_state = prev;
            out.state = s;
            out.truncated = true;
            return out;
        }
        const size_t row = size_t(interior_index_[s]) * num_actions_;
        int a = 0;
        bool deficit = false;
        for (int k = 0; k < num_actions_; ++k)
            if (visit_[row + k] < n_min_) {
                deficit = true;
                break;
            }
        if (deficit || toward[interior_index_[s]] < 0) {
            for (int k = 1; k < num_actions_; ++k)
                if (visit_[row + k] < visit_[row + a]) a = k;
        } else {
            a = toward[interior_index_[s]];
        }
        auto [s2, r] = sim.step(a);
        out.rewards.push_back(r);
        ++out.steps;
        ++visit_[row + a];
        reward_sum_[row + a] += r;
        auto& succ = successor_[row + a];
        if (succ.empty()) succ.assign(mapping_.block_of.size(), 0);
        ++succ[s2];
        prev = s;
        s = s2;
        if (!in_block(s)) {
            out.prev_state = prev;
            out.state = s;
            return out;
        }
    }
}

int OnlineRealizer::preferred_action(int ground_state) const {
    if (!in_block(ground_state)) return -1;
    const size_t row = size_t(interior_index_[ground_state]) * num_actions_;
    int a = 0;
    for (int k = 1; k < num_actions_; ++k)
        if (visit_[row + k] < visit_[row + a]) a = k;
    return a;
}

std::vector<int> OnlineRealizer::reachable_states() const {
    std::vector<char> seen(interior_.size(), 0);
    std::vector<int> stack;
    for (int i = 0; i < int(interior_.size()); ++i)
        if (entry_counts_[i] > 0.0) {
            seen[i] = 1;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int a = 0; a < num_actions_; ++a) {
            const auto& succ = successor_[size_t(i) * num_actions_ + a];
            if (succ.empty()) continue;
            for (int s2 = 0; s2 < int(succ.size()); ++s2) {
                if (succ[s2] == 0) continue;
                const int j = interior_index_[s2];
                if (j >= 0 && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    std::vector<int> out;
    for (int i = 0; i < int(interior_.size()); ++i)
        if (seen[i]) out.push_back(i);
    return out;
}

bool OnlineRealizer::enough() const {
    if (entry_total_ < config_.n_entry_min) return false;
    for (int i : reachable_states())
        for (int a = 0; a < num_actions_; ++a)
            if (visit_[size_t(i) * num_actions_ + a] < n_min_) return false;
    return true;
}

RealizationResult OnlineRealizer::get() const {
    if (!enough()) throw std::logic_error("OnlineRealizer::get called before enough()");

    // observed exit states
    std::vector<char> is_exit(mapping_.block_of.size(), 0);
    for (const auto& succ : successor_)
        for (int s2 = 0; s2 < int(succ.size()); ++s2)
            if (succ[s2] > 0 && mapping_(s2) != block_) is_exit[s2] = 1;
    std::vector<int> exits;
    for (int s = 0; s < int(is_exit.size()); ++s)
        if (is_exit[s]) exits.push_back(s);

    BlockMdp block;
    block.block = block_;
    block.num_abstract = mapping_.num_abstract_states;
    block.to_ground = interior_;
    block.num_interior = int(interior_.size());
    for (int e : exits) {
        block.to_ground.push_back(e);
        block.exit_block.push_back(mapping_(e));
    }
    block.local_of.assign(mapping_.block_of.size(), -1);
    for (int i = 0; i < int(block.to_ground.size()); ++i)
        block.local_of[block.to_ground[i]] = i;

    const int n = int(block.to_ground.size()) + 1;
    const int A = num_actions_;
    std::vector<double> T(size_t(n) * A * n, 0.0), R(size_t(n) * A, 0.0);
    for (int i = 0; i < block.num_interior; ++i)
        for (int a = 0; a < A; ++a) {
            const size_t row = size_t(i) * A + a;
            const long total = visit_[row];
            if (total == 0) {
                T[(size_t(i) * A + a) * n + i] = 1.0; // no data: hold in place
                continue;
            }
            R[size_t(i) * A + a] = reward_sum_[row] / double(total);
            const auto& succ = successor_[row];
            for (int s2 = 0; s2 < int(succ.size()); ++s2)
                if (succ[s2] > 0)
                    T[(size_t(i) * A + a) * n + block.local_of[s2]] +=
                        double(succ[s2]) / double(total);
        }
    for (int i = block.num_interior; i < n - 1; ++i)
        for (int a = 0; a < A; ++a) T[(size_t(i) * A + a) * n + (n - 1)] = 1.0;
    for (int a = 0; a < A; ++a) T[(size_t(n - 1) * A + a) * n + (n - 1)] = 1.0;
    std::vector<double> start(n, 0.0);
    start[0] = 1.0;
    block.mdp = GroundMdp(n, A, gamma_, std::move(T), std::move(R), std::move(start));

    RealizationProblem problem;
    problem.from_block = from_block_;
    problem.targets = targets_;
    problem.eps_r = 0.0;
    problem.eps_t = std::max(0.0, config_.eps_t - config_.lambda / 2.0);
    problem.eta = config_.eta;
    problem.lambda = config_.lambda;
    problem.nu_local.assign(block.num_local(), 0.0);
    for (int i = 0; i < block.num_interior; ++i)
        problem.nu_local[i] = entry_counts_[i] / double(entry_total_);
    problem.block = std::move(block);
    RealizationResult out = realize_exact(problem);
    if (!out.feasible) {
        // infeasible from this entry distribution: report the gap but still
        // hand back the least-violating option
        double gap = out.max_gap;
        out = realize_best_effort(problem);
        out.max_gap = std::max(out.max_gap, gap);
    }
    return out;
}

long OnlineRealizer::sample_complexity_bound() const {
    return long(interior_.size()) * num_actions_ * n_min_ + config_.n_entry_min;
}

} // namespace rarlkit
