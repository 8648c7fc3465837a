#include "rarlkit/abstraction.hpp"

#include "rarlkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rarlkit {

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kCheckSlack = 1e-9; // numerical slack for >= comparisons

StochasticPolicy local_policy(const BlockMdp& block, const FRelativeOption& option) {
    const int n = block.num_local(), A = block.mdp.num_actions();
    StochasticPolicy pi;
    pi.num_actions = A;
    pi.prob.assign(size_t(n) * A, 0.0);
    for (int i = 0; i < n; ++i) pi.at(i, 0) = 1.0; // exits and sink: action is irrelevant
    for (size_t k = 0; k < option.states.size(); ++k) {
        const int local = block.local_state(option.states[k]);
        if (local < 0) throw std::invalid_argument("option does not live on this block");
        for (int a = 0; a < A; ++a) pi.at(local, a) = 0.0;
        if (option.stochastic()) {
            for (int a = 0; a < A; ++a) pi.at(local, a) = option.stoch.at(int(k), a);
        } else {
            pi.at(local, option.det[k]) = 1.0;
        }
    }
    return pi;
}

BlockOccupancy aggregate(const BlockMdp& block, const OccupancyMeasure& d) {
    BlockOccupancy h;
    h.gamma = block.mdp.gamma();
    h.own_block = block.block;
    h.prob.assign(size_t(block.num_abstract) + 1, 0.0);
    for (int i = 0; i < block.num_interior; ++i) h.prob[block.block] += d.values[i];
    for (int i = block.num_interior; i < int(block.to_ground.size()); ++i)
        h.prob[block.exit_block[i - block.num_interior]] += d.values[i];
    h.prob[block.num_abstract] += d.values[block.sink()];
    return h;
}

std::vector<double> local_source(const BlockMdp& block, int entry_ground) {
    const int local = block.local_state(entry_ground);
    if (local < 0 || local >= block.num_interior)
        throw std::invalid_argument("entry state outside the block");
    std::vector<double> nu(block.num_local(), 0.0);
    nu[local] = 1.0;
    return nu;
}

long power_capped(int base, int exponent, long cap) {
    long v = 1;
    for (int i = 0; i < exponent; ++i) {
        if (v > cap / base) return cap + 1;
        v *= base;
    }
    return v;
}

} // namespace

std::vector<std::vector<int>> Mapping::blocks() const {
    std::vector<std::vector<int>> out(num_abstract_states);
    for (int s = 0; s < int(block_of.size()); ++s) out[block_of[s]].push_back(s);
    return out;
}

void Mapping::validate() const {
    std::vector<char> seen(num_abstract_states, 0);
    for (int b : block_of) {
        if (b < 0 || b >= num_abstract_states)
            throw std::invalid_argument("Mapping: block index out of range");
        seen[b] = 1;
    }
    for (char c : seen)
        if (!c) throw std::invalid_argument("Mapping: not surjective");
}

EntryExitSets compute_entries_exits(const GroundMdp& mdp, const Mapping& mapping) {
    mapping.validate();
    const int S = mdp.num_states(), A = mdp.num_actions();
    const int Sb = mapping.num_abstract_states;
    EntryExitSets out;
    out.num_abstract = Sb;
    out.entries.assign(size_t(Sb + 1) * Sb, {});
    out.exits.assign(Sb, {});

    std::vector<char> mark(size_t(Sb + 1) * S, 0);
    for (int s = 0; s < S; ++s) {
        const int bp = mapping(s);
        for (int a = 0; a < A; ++a) {
            const double* row = mdp.row(s, a);
            for (int s2 = 0; s2 < S; ++s2)
                if (row[s2] > 0.0 && mapping(s2) != bp) mark[size_t(bp) * S + s2] = 1;
        }
    }
    for (int s2 = 0; s2 < S; ++s2)
        if (mdp.start_distribution()[s2] > 0.0) mark[size_t(Sb) * S + s2] = 1;

    for (int bp = 0; bp <= Sb; ++bp)
        for (int s2 = 0; s2 < S; ++s2)
            if (mark[size_t(bp) * S + s2])
                out.entries[size_t(bp) * Sb + mapping(s2)].push_back(s2);
    for (int b = 0; b < Sb; ++b) {
        std::vector<char> in_exit(S, 0);
        for (int b2 = 0; b2 < Sb; ++b2)
            if (b2 != b)
                for (int s : out.entries_for(b, b2)) in_exit[s] = 1;
        for (int s = 0; s < S; ++s)
            if (in_exit[s]) out.exits[b].push_back(s);
    }
    return out;
}

BlockMdp build_block_mdp(const GroundMdp& mdp, const Mapping& mapping, int block) {
    if (block < 0 || block >= mapping.num_abstract_states)
        throw std::invalid_argument("build_block_mdp: invalid block");
    const int S = mdp.num_states(), A = mdp.num_actions();
    EntryExitSets sets = compute_entries_exits(mdp, mapping);

    BlockMdp out;
    out.block = block;
    out.num_abstract = mapping.num_abstract_states;
    out.local_of.assign(S, -1);
    for (int s = 0; s < S; ++s)
        if (mapping(s) == block) out.to_ground.push_back(s);
    out.num_interior = int(out.to_ground.size());
    for (int s : sets.exits[block]) {
        out.to_ground.push_back(s);
        out.exit_block.push_back(mapping(s));
    }
    for (int i = 0; i < int(out.to_ground.size()); ++i) out.local_of[out.to_ground[i]] = i;

    const int n = int(out.to_ground.size()) + 1; // plus sink
    std::vector<double> T(size_t(n) * A * n, 0.0), R(size_t(n) * A, 0.0);
    for (int i = 0; i < n - 1; ++i) {
        const int g = out.to_ground[i];
        for (int a = 0; a < A; ++a) {
            if (i < out.num_interior) {
                R[size_t(i) * A + a] = mdp.reward(g, a);
                const double* row = mdp.row(g, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    if (row[s2] == 0.0) continue;
                    const int local = out.local_of[s2];
                    if (local < 0)
                        throw std::logic_error("block transition leaves the block+exit set");
                    T[(size_t(i) * A + a) * n + local] += row[s2];
                }
            } else {
                T[(size_t(i) * A + a) * n + (n - 1)] = 1.0;
            }
        }
    }
    for (int a = 0; a < A; ++a) T[(size_t(n - 1) * A + a) * n + (n - 1)] = 1.0; // sink absorbs

    std::vector<double> start(n, 0.0);
    start[0] = 1.0;
    out.mdp = GroundMdp(n, A, mdp.gamma(), std::move(T), std::move(R), std::move(start));
    return out;
}

int FRelativeOption::index_of(int ground) const {
    auto it = std::lower_bound(states.begin(), states.end(), ground);
    if (it == states.end() || *it != ground) return -1;
    return int(it - states.begin());
}

FRelativeOption make_option(int from_block, int block, std::vector<int> states,
                            std::vector<int> actions) {
    FRelativeOption o;
    o.from_block = from_block;
    o.block = block;
    o.states = std::move(states);
    o.det = std::move(actions);
    if (o.det.size() != o.states.size())
        throw std::invalid_argument("make_option: one action per block state required");
    return o;
}

const FRelativeOption* PolicyOfOptions::find(int from_block, int block) const {
    auto it = by_pair.find({from_block, block});
    return it == by_pair.end() ? nullptr : &it->second;
}

void PolicyOfOptions::insert(FRelativeOption option) {
    by_pair[{option.from_block, option.block}] = std::move(option);
}

void AbstractionPair::validate(bool check_start_marginal) const {
    ground.validate();
    abstract_model.validate();
    if (int(mapping.block_of.size()) != ground.num_states())
        throw std::invalid_argument("AbstractionPair: mapping size mismatch");
    if (mapping.num_abstract_states != abstract_model.num_states())
        throw std::invalid_argument("AbstractionPair: abstract state count mismatch");
    mapping.validate();
    if (abstract_model.gamma() > ground.gamma() + kExactTol)
        throw std::invalid_argument("AbstractionPair: gamma_bar exceeds ground gamma");
    if (check_start_marginal) {
        std::vector<double> marginal(mapping.num_abstract_states, 0.0);
        for (int s = 0; s < ground.num_states(); ++s)
            marginal[mapping(s)] += ground.start_distribution()[s];
        for (int b = 0; b < mapping.num_abstract_states; ++b)
            if (std::fabs(marginal[b] - abstract_model.start_distribution()[b]) > kExactTol)
                throw std::invalid_argument("AbstractionPair: start marginals differ");
    }
}

BlockOccupancy block_occupancy_from(const BlockMdp& block, const FRelativeOption& option,
                                    const std::vector<double>& nu_local) {
    StochasticPolicy pi = local_policy(block, option);
    OccupancyMeasure d =
        occupancy(block.mdp, pi, OccupancySource::from_distribution(nu_local));
    return aggregate(block, d);
}

BlockOccupancy block_occupancy(const BlockMdp& block, const FRelativeOption& option,
                               int entry_ground) {
    return block_occupancy_from(block, option, local_source(block, entry_ground));
}

double block_value_from(const BlockMdp& block, const FRelativeOption& option,
                        const std::vector<double>& nu_local) {
    StochasticPolicy pi = local_policy(block, option);
    std::vector<double> v = evaluate_policy(block.mdp, pi);
    double out = 0.0;
    for (int i = 0; i < block.num_local(); ++i) out += nu_local[i] * v[i];
    return out;
}

double block_value(const BlockMdp& block, const FRelativeOption& option, int entry_ground) {
    return block_value_from(block, option, local_source(block, entry_ground));
}

TupleTargets tuple_targets(const SecondOrderMdp& abs, int sp, int s, int a) {
    if (sp == s && sp != abs.dummy_state())
        throw std::invalid_argument("tuple_targets: predecessor equals current state");
    const double g = abs.gamma();
    const double self_loop = abs.transition(s, s, a, s);
    const double denom = 1.0 - g * self_loop;
    if (denom <= 0.0)
        throw std::runtime_error("tuple_targets: degenerate self-loop (gamma*T == 1)");
    const double fac = abs.transition(sp, s, a, s) / denom;

    TupleTargets t;
    t.own_block = s;
    t.exit_occupancy.assign(abs.num_states(), 0.0);
    for (int s2 = 0; s2 < abs.num_states(); ++s2) {
        if (s2 == s) continue;
        t.exit_occupancy[s2] =
            g * abs.transition(sp, s, a, s2) + g * g * fac * abs.transition(s, s, a, s2);
    }
    t.block_return = abs.reward(sp, s, a) + g * fac * abs.reward(s, s, a);
    return t;
}

std::vector<double> normalized_exit_occupancy(const TupleTargets& t, double ground_gamma) {
    std::vector<double> out = t.exit_occupancy;
    for (double& v : out) v *= (1.0 - ground_gamma);
    return out;
}

TupleCheckResult check_option_against_targets(const GroundMdp& mdp, const Mapping& mapping,
                                              const std::vector<int>& entry_states,
                                              const TupleTargets& targets,
                                              const FRelativeOption& option) {
    TupleCheckResult out;
    if (entry_states.empty()) {
        out.vacuous = true;
        return out;
    }
    BlockMdp block = build_block_mdp(mdp, mapping, option.block);
    const double g = mdp.gamma();
    const int Sb = mapping.num_abstract_states;
    for (int entry : entry_states) {
        EntryGaps gaps;
        gaps.entry = entry;
        gaps.value_gap = (1.0 - g) * (targets.block_return - block_value(block, option, entry));
        BlockOccupancy h = block_occupancy(block, option, entry);
        gaps.occupancy_gap = -1e300;
        for (int b = 0; b < Sb; ++b) {
            if (b == targets.own_block) continue;
            const double d = targets.exit_occupancy[b] - h.cumulative(b);
            if (d > gaps.occupancy_gap) {
                gaps.occupancy_gap = d;
                gaps.worst_block = b;
            }
        }
        if (gaps.worst_block < 0) gaps.occupancy_gap = 0.0; // single abstract state
        out.per_entry.push_back(gaps);
    }
    out.worst_value_gap = -1e300;
    out.worst_occupancy_gap = -1e300;
    for (const EntryGaps& e : out.per_entry) {
        out.worst_value_gap = std::max(out.worst_value_gap, e.value_gap);
        out.worst_occupancy_gap = std::max(out.worst_occupancy_gap, e.occupancy_gap);
    }
    return out;
}

TupleCheckResult check_realizable_tuple(const AbstractionPair& pair, int sp, int s, int a,
                                        const FRelativeOption& option) {
    if (option.from_block != sp || option.block != s)
        throw std::invalid_argument("check_realizable_tuple: option initiation mismatch");
    EntryExitSets sets = compute_entries_exits(pair.ground, pair.mapping);
    TupleTargets targets = tuple_targets(pair.abstract_model, sp, s, a);
    return check_option_against_targets(pair.ground, pair.mapping, sets.entries_for(sp, s),
                                        targets, option);
}

FromNuCheckResult check_realizable_from(const AbstractionPair& pair, int sp, int s, int a,
                                        const std::vector<int>& support,
                                        const std::vector<double>& weights,
                                        const FRelativeOption& option) {
    if (support.size() != weights.size() || support.empty())
        throw std::invalid_argument("check_realizable_from: bad distribution");
    EntryExitSets sets = compute_entries_exits(pair.ground, pair.mapping);
    const std::vector<int>& entries = sets.entries_for(sp, s);
    for (int st : support)
        if (!std::binary_search(entries.begin(), entries.end(), st))
            throw std::invalid_argument("check_realizable_from: support outside entry set");

    BlockMdp block = build_block_mdp(pair.ground, pair.mapping, s);
    std::vector<double> nu(block.num_local(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < support.size(); ++i) {
        nu[block.local_state(support[i])] += weights[i];
        total += weights[i];
    }
    if (std::fabs(total - 1.0) > kOccupancySumTol)
        throw std::invalid_argument("check_realizable_from: distribution does not sum to 1");

    TupleTargets targets = tuple_targets(pair.abstract_model, sp, s, a);
    const double g = pair.ground.gamma();
    FromNuCheckResult out;
    out.value_gap = (1.0 - g) * (targets.block_return - block_value_from(block, option, nu));
    BlockOccupancy h = block_occupancy_from(block, option, nu);
    out.occupancy_gap = -1e300;
    for (int b = 0; b < pair.mapping.num_abstract_states; ++b) {
        if (b == s) continue;
        const double d = targets.exit_occupancy[b] - h.cumulative(b);
        if (d > out.occupancy_gap) {
            out.occupancy_gap = d;
            out.worst_block = b;
        }
    }
    if (out.worst_block < 0) out.occupancy_gap = 0.0;
    return out;
}

std::vector<BestResponseEntry> best_response_targets(const AbstractionPair& pair, int sp, int s,
                                                     long enum_cap) {
    EntryExitSets sets = compute_entries_exits(pair.ground, pair.mapping);
    const std::vector<int>& entries = sets.entries_for(sp, s);
    std::vector<BestResponseEntry> out;
    if (entries.empty()) return out;

    BlockMdp block = build_block_mdp(pair.ground, pair.mapping, s);
    const int A = pair.ground.num_actions();
    if (power_capped(A, block.num_interior, enum_cap) > enum_cap)
        throw std::runtime_error("best_response_targets: enumeration cap exceeded");

    const int Sb = pair.mapping.num_abstract_states;
    std::vector<TupleTargets> targets;
    for (int a = 0; a < pair.abstract_model.num_actions(); ++a)
        targets.push_back(tuple_targets(pair.abstract_model, sp, s, a));

    std::vector<int> interior(block.to_ground.begin(),
                              block.to_ground.begin() + block.num_interior);
    enumerate_action_tables(block.num_interior, A, enum_cap, [&](const std::vector<int>& acts) {
        FRelativeOption o = make_option(sp, s, interior, acts);
        std::vector<BlockOccupancy> hs;
        std::vector<double> vs;
        for (int entry : entries) {
            hs.push_back(block_occupancy(block, o, entry));
            vs.push_back(block_value(block, o, entry));
        }
        BestResponseEntry row;
        row.option_actions = acts;
        for (int a = 0; a < pair.abstract_model.num_actions() && row.dominating_action < 0; ++a) {
            bool dominates = true;
            int witness = -1;
            for (size_t e = 0; e < entries.size() && dominates; ++e) {
                if (targets[a].block_return < vs[e] - kCheckSlack) {
                    dominates = false;
                    witness = entries[e];
                    break;
                }
                for (int b = 0; b < Sb; ++b) {
                    if (b == s) continue;
                    if (targets[a].exit_occupancy[b] < hs[e].cumulative(b) - kCheckSlack) {
                        dominates = false;
                        witness = entries[e];
                        break;
                    }
                }
            }
            if (dominates)
                row.dominating_action = a;
            else if (row.witness_entry < 0)
                row.witness_entry = witness;
        }
        out.push_back(std::move(row));
    });
    return out;
}

AdmissibilityReport check_admissible(const AbstractionPair& pair, long enum_cap) {
    AdmissibilityReport report;
    report.admissible = true;
    EntryExitSets sets = compute_entries_exits(pair.ground, pair.mapping);
    const int Sb = pair.mapping.num_abstract_states;

    std::vector<std::pair<int, int>> pairs;
    for (int sp = 0; sp <= Sb; ++sp)
        for (int s = 0; s < Sb; ++s)
            if (sp != s && !sets.entries_for(sp, s).empty()) pairs.emplace_back(sp, s);

#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto [sp, s] = pairs[i];
        std::vector<BestResponseEntry> rows;
        bool capped = false;
        try {
            rows = best_response_targets(pair, sp, s, enum_cap);
        } catch (const std::runtime_error&) {
            capped = true;
        }
#pragma omp critical
        {
            if (capped) {
                report.decided = false;
            } else {
                report.options_checked += long(rows.size());
                for (const BestResponseEntry& row : rows)
                    if (row.dominating_action < 0) {
                        report.admissible = false;
                        report.violations.push_back(
                            {sp, s, row.option_actions, row.witness_entry});
                    }
            }
        }
    }
    if (!report.decided) report.admissible = false;
    return report;
}

HomomorphismResult check_homomorphism(const GroundMdp& mdp, const GroundMdp& abstract_mdp,
                                      const Mapping& f,
                                      const std::vector<std::vector<int>>& action_maps) {
    HomomorphismResult out;
    const int S = mdp.num_states(), A = mdp.num_actions();
    const int Sb = abstract_mdp.num_states(), Ab = abstract_mdp.num_actions();
    if (int(f.block_of.size()) != S || f.num_abstract_states != Sb ||
        int(action_maps.size()) != S)
        throw std::invalid_argument("check_homomorphism: dimension mismatch");

    auto block_sum = [&](int s, int a, int target) {
        double acc = 0.0;
        for (int s2 = 0; s2 < S; ++s2)
            if (f(s2) == target) acc += mdp.transition(s, a, s2);
        return acc;
    };

    for (int s = 0; s < S; ++s) {
        std::vector<char> hit(Ab, 0);
        if (int(action_maps[s].size()) != A)
            throw std::invalid_argument("check_homomorphism: action map size");
        for (int a = 0; a < A; ++a) {
            const int ab = action_maps[s][a];
            if (ab < 0 || ab >= Ab)
                throw std::invalid_argument("check_homomorphism: abstract action out of range");
            hit[ab] = 1;
            if (std::fabs(abstract_mdp.reward(f(s), ab) - mdp.reward(s, a)) > kExactTol) {
                out.detail = "reward mismatch at state " + std::to_string(s);
                return out;
            }
            for (int t = 0; t < Sb; ++t) {
                const double got = block_sum(s, a, t);
                if (std::fabs(abstract_mdp.transition(f(s), ab, t) - got) > kExactTol) {
                    out.detail = "transition mismatch at state " + std::to_string(s);
                    // a same-block sibling with a different block sum explains
                    // why no transition table can work
                    for (int s2 = 0; s2 < S && !out.conflicting_states; ++s2) {
                        if (s2 == s || f(s2) != f(s)) continue;
                        for (int a2 = 0; a2 < A; ++a2)
                            if (action_maps[s2][a2] == ab &&
                                std::fabs(block_sum(s2, a2, t) - got) > kExactTol) {
                                out.conflicting_states = std::make_pair(std::min(s, s2),
                                                                        std::max(s, s2));
                                break;
                            }
                    }
                    return out;
                }
            }
        }
        for (int ab = 0; ab < Ab; ++ab)
            if (!hit[ab]) {
                out.detail = "action map not surjective at state " + std::to_string(s);
                return out;
            }
    }
    out.ok = true;
    return out;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void link(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

BisimulationResult check_bisimulation(const GroundMdp& a, const GroundMdp& b,
                                      const std::vector<std::pair<int, int>>& relation) {
    BisimulationResult out;
    if (a.num_actions() != b.num_actions()) {
        out.detail = "action spaces differ";
        return out;
    }
    const int SA = a.num_states(), SB = b.num_states(), A = a.num_actions();
    std::vector<char> seen_a(SA, 0), seen_b(SB, 0);
    UnionFind uf(SA + SB);
    for (auto [x, y] : relation) {
        seen_a[x] = 1;
        seen_b[y] = 1;
        uf.link(x, SA + y);
    }
    for (int s = 0; s < SA; ++s)
        if (!seen_a[s]) {
            out.detail = "relation not total on the left";
            return out;
        }
    for (int s = 0; s < SB; ++s)
        if (!seen_b[s]) {
            out.detail = "relation not total on the right";
            return out;
        }

    for (auto [x, y] : relation)
        for (int act = 0; act < A; ++act)
            if (std::fabs(a.reward(x, act) - b.reward(y, act)) > kExactTol) {
                out.detail = "reward mismatch on related pair (" + std::to_string(x) + "," +
                             std::to_string(y) + ")";
                return out;
            }

    for (auto [x, y] : relation)
        for (auto [nx, ny] : relation)
            for (int act = 0; act < A; ++act) {
                double sum_a = 0.0, sum_b = 0.0;
                const int root_a = uf.find(nx), root_b = uf.find(SA + ny);
                for (int s2 = 0; s2 < SA; ++s2)
                    if (uf.find(s2) == root_a) sum_a += a.transition(x, act, s2);
                for (int s2 = 0; s2 < SB; ++s2)
                    if (uf.find(SA + s2) == root_b) sum_b += b.transition(y, act, s2);
                if (std::fabs(sum_a - sum_b) > kExactTol) {
                    out.detail = "block-sum mismatch on pair (" + std::to_string(x) + "," +
                                 std::to_string(y) + ")";
                    return out;
                }
            }
    out.ok = true;
    return out;
}

HorizonFeasibility horizon_feasibility(const AbstractionPair& pair, int sp, int s,
                                       const FRelativeOption& option, int entry) {
    (void)sp;
    BlockMdp block = build_block_mdp(pair.ground, pair.mapping, s);
    HorizonFeasibility out;
    BlockOccupancy h = block_occupancy(block, option, entry);
    out.own_occupancy = h.prob[s];
    out.option_value = block_value(block, option, entry);
    const double required =
        (1.0 - pair.abstract_model.gamma()) * std::max(1.0, out.option_value);
    out.slack = out.own_occupancy - required;
    out.ok = out.slack >= -kCheckSlack;
    return out;
}

double value_loss_bound(double eps_r, double eps_t, double gamma, double gamma_bar,
                        int num_abstract) {
    const double num = eps_r * (1.0 - gamma_bar) + eps_t * num_abstract;
    return num / ((1.0 - gamma) * (1.0 - gamma) * (1.0 - gamma_bar));
}

OptionPolicyValues evaluate_policy_of_options(const GroundMdp& mdp, const Mapping& mapping,
                                              const PolicyOfOptions& options) {
    const int S = mdp.num_states(), A = mdp.num_actions();
    const int Sb = mapping.num_abstract_states;
    const int n = (Sb + 1) * S;
    const double g = mdp.gamma();

    std::vector<double> M(size_t(n) * n, 0.0), rhs(n, 0.0);
    for (int p = 0; p <= Sb; ++p)
        for (int s = 0; s < S; ++s) {
            const int i = p * S + s;
            M[size_t(i) * n + i] += 1.0;
            const int b = mapping(s);
            const FRelativeOption* opt = options.find(p, b);
            // action distribution of the applicable option, default action 0
            for (int a = 0; a < A; ++a) {
                double w;
                if (!opt) {
                    w = (a == 0) ? 1.0 : 0.0;
                } else if (opt->stochastic()) {
                    const int k = opt->index_of(s);
                    w = (k >= 0) ? opt->stoch.at(k, a) : (a == 0 ? 1.0 : 0.0);
                } else {
                    const int k = opt->index_of(s);
                    w = (k >= 0 && opt->det[k] == a) ? 1.0 : (k >= 0 ? 0.0 : (a == 0 ? 1.0 : 0.0));
                }
                if (w == 0.0) continue;
                rhs[i] += w * mdp.reward(s, a);
                const double* row = mdp.row(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    if (row[s2] == 0.0) continue;
                    const int p2 = (mapping(s2) == b) ? p : b;
                    M[size_t(i) * n + (p2 * S + s2)] -= g * w * row[s2];
                }
            }
        }

    OptionPolicyValues out;
    out.num_abstract = Sb;
    out.num_states = S;
    out.v = lu_solve(M, rhs, n);
    return out;
}

double start_value(const OptionPolicyValues& values, const GroundMdp& mdp) {
    double acc = 0.0;
    for (int s = 0; s < mdp.num_states(); ++s)
        acc += mdp.start_distribution()[s] * values.at(values.num_abstract, s);
    return acc;
}

bool enumerate_action_tables(int num_states, int num_actions, long cap,
                             const std::function<void(const std::vector<int>&)>& fn) {
    if (power_capped(num_actions, num_states, cap) > cap) return false;
    std::vector<int> acts(num_states, 0);
    while (true) {
        fn(acts);
        int k = 0;
        while (k < num_states) {
            if (++acts[k] < num_actions) break;
            acts[k] = 0;
            ++k;
        }
        if (k == num_states) return true;
    }
}

} // namespace rarlkit
