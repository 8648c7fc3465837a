#include "rarlkit/envs.hpp"

#include "rarlkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rarlkit {

namespace {

constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {1, -1, 0, 0}; // up, down, left, right
constexpr int kPerp[4][2] = {{2, 3}, {2, 3}, {0, 1}, {0, 1}};

} // namespace

BuiltGrid build_grid(const GridWorldSpec& spec) {
    const int cells = spec.width * spec.height;
    BuiltGrid out;
    out.state_of_cell.assign(cells, -1);
    int S = 0;
    for (int c = 0; c < cells; ++c)
        if (!spec.wall[c]) out.state_of_cell[c] = S++;

    const int A = 4;
    std::vector<double> T(size_t(S) * A * S, 0.0), R(size_t(S) * A, 0.0), start(S, 0.0);
    auto target_cell = [&](int x, int y, int dir) {
        const int nx = x + kDx[dir], ny = y + kDy[dir];
        if (nx < 0 || nx >= spec.width || ny < 0 || ny >= spec.height) return spec.cell(x, y);
        if (spec.wall[spec.cell(nx, ny)]) return spec.cell(x, y);
        return spec.cell(nx, ny);
    };
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const int c = spec.cell(x, y);
            if (spec.wall[c]) continue;
            const int s = out.state_of_cell[c];
            for (int a = 0; a < A; ++a) {
                R[size_t(s) * A + a] = spec.cell_reward[c];
                auto land = [&](int dir, double p) {
                    const int c2 = spec.absorbing[c] ? c : target_cell(x, y, dir);
                    T[(size_t(s) * A + a) * S + out.state_of_cell[c2]] += p;
                };
                if (spec.slip > 0.0) {
                    land(a, 1.0 - spec.slip);
                    land(kPerp[a][0], spec.slip / 2.0);
                    land(kPerp[a][1], spec.slip / 2.0);
                } else {
                    land(a, 1.0);
                }
            }
        }
    for (int c : spec.start_cells) start[out.state_of_cell[c]] = 1.0 / spec.start_cells.size();

    out.mdp = GroundMdp(S, A, spec.gamma, std::move(T), std::move(R), std::move(start));
    out.mapping.num_abstract_states = spec.num_blocks;
    out.mapping.block_of.assign(S, 0);
    for (int c = 0; c < cells; ++c)
        if (!spec.wall[c]) out.mapping.block_of[out.state_of_cell[c]] = spec.color[c];
    out.mdp.validate();
    out.mapping.validate();
    return out;
}

TwoRegionFixture build_two_region_grid(double slip) {
    GridWorldSpec spec;
    spec.width = 6;
    spec.height = 4;
    spec.gamma = 0.95;
    spec.slip = slip;
    spec.num_blocks = 3;
    const int cells = spec.width * spec.height;
    spec.wall.assign(cells, 0);
    spec.color.assign(cells, 0);
    spec.cell_reward.assign(cells, 0.0);
    spec.absorbing.assign(cells, 0);

    spec.wall[spec.cell(3, 0)] = 1;
    for (int x = 0; x <= 2; ++x) spec.color[spec.cell(x, 0)] = 1; // small start block
    for (int x = 4; x <= 5; ++x) {
        const int c = spec.cell(x, 0);
        spec.color[c] = 2; // reward block
        spec.cell_reward[c] = 1.0;
        spec.absorbing[c] = 1;
    }
    for (int y = 1; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) spec.color[spec.cell(x, y)] = 0;
    for (int x = 0; x <= 2; ++x) spec.start_cells.push_back(spec.cell(x, 0));

    BuiltGrid built = build_grid(spec);
    return {std::move(built.mdp), std::move(built.mapping), 0, 1, 2};
}

CorridorFixture build_corridor_grid() {
    GridWorldSpec spec;
    spec.width = 22;
    spec.height = 2;
    spec.gamma = 0.95;
    spec.num_blocks = 3;
    const int cells = spec.width * spec.height;
    spec.wall.assign(cells, 1);
    spec.color.assign(cells, 0);
    spec.cell_reward.assign(cells, 0.0);
    spec.absorbing.assign(cells, 0);

    for (int x = 0; x <= 21; ++x) spec.wall[spec.cell(x, 0)] = 0; // the corridor row
    spec.wall[spec.cell(0, 1)] = 0;                               // start cell above the slow end
    spec.wall[spec.cell(10, 1)] = 0;                              // start cell above the fast end
    for (int x = 0; x <= 20; ++x) spec.color[spec.cell(x, 0)] = 0;
    spec.color[spec.cell(0, 1)] = 1;
    spec.color[spec.cell(10, 1)] = 1;
    spec.color[spec.cell(21, 0)] = 2;
    spec.cell_reward[spec.cell(21, 0)] = 1.0;
    spec.absorbing[spec.cell(21, 0)] = 1;
    spec.start_cells = {spec.cell(0, 1), spec.cell(10, 1)};

    BuiltGrid built = build_grid(spec);
    CorridorFixture out;
    out.s1 = built.state_of_cell[spec.cell(0, 0)];
    out.s2 = built.state_of_cell[spec.cell(10, 0)];
    out.mdp = std::move(built.mdp);
    out.mapping = std::move(built.mapping);

    // Two-action abstract model at the ground discount. Exit-occupancy
    // targets for leaving the long block toward the reward block:
    // 0.6 for the ambitious action (more than the slow entry can deliver),
    // gamma^21 for the modest one (exactly the slow entry's best).
    const double g = spec.gamma;
    const int Sb = 3, Ab = 2;
    std::vector<double> T(size_t(Sb + 1) * Sb * Ab * Sb, 0.0);
    std::vector<double> R(size_t(Sb + 1) * Sb * Ab, 0.0);
    std::vector<double> nu0(Sb, 0.0);
    nu0[1] = 1.0;
    SecondOrderMdp abs(Sb, Ab, g, std::move(T), std::move(R), std::move(nu0));
    const double ambitious = 0.6 / g;
    const double modest = std::pow(g, 21) / g;
    for (int sp = 0; sp <= Sb; ++sp)
        for (int a = 0; a < Ab; ++a) {
            const double p = (a == 0) ? ambitious : modest;
            if (sp != 0) { // rows entering the long block
                abs.transition_at(sp, 0, a, 2) = p;
                abs.transition_at(sp, 0, a, 0) = 1.0 - p;
            } else { // its self-row: keep looping, no further exit mass
                abs.transition_at(sp, 0, a, 0) = 1.0;
            }
            // start block falls into the long block; reward block absorbs
            abs.transition_at(sp, 1, a, sp == 1 ? 1 : 0) = 1.0;
            abs.transition_at(sp, 2, a, 2) = 1.0;
            abs.reward_at(sp, 2, a) = 1.0;
        }
    abs.validate();
    out.abstraction = std::move(abs);
    return out;
}

ChainFixture build_appendixB_chain(double gamma) {
    const int S = 3, A = 1;
    std::vector<double> T(size_t(S) * A * S, 0.0), R(size_t(S) * A, 0.0), start(S, 0.0);
    T[0 * S + 1] = 1.0; // s0 -> s1
    T[1 * S + 2] = 1.0; // s1 -> s2
    T[2 * S + 2] = 1.0; // s2 absorbs
    R[2] = 1.0;
    start[0] = 1.0;
    ChainFixture out;
    out.mdp = GroundMdp(S, A, gamma, std::move(T), std::move(R), std::move(start));
    out.mapping.num_abstract_states = 2;
    out.mapping.block_of = {0, 0, 1};

    const int Sb = 2, Ab = 1;
    std::vector<double> Tb(size_t(Sb + 1) * Sb * Ab * Sb, 0.0);
    std::vector<double> Rb(size_t(Sb + 1) * Sb * Ab, 0.0);
    std::vector<double> nu0 = {1.0, 0.0};
    SecondOrderMdp abs(Sb, Ab, gamma, std::move(Tb), std::move(Rb), std::move(nu0));
    for (int sp = 0; sp <= Sb; ++sp) {
        abs.transition_at(sp, 0, 0, 1) = gamma / (1.0 + gamma);
        abs.transition_at(sp, 0, 0, 0) = 1.0 / (1.0 + gamma);
        abs.transition_at(sp, 1, 0, 1) = 1.0;
        abs.reward_at(sp, 1, 0) = 1.0;
    }
    abs.validate();
    out.abstraction = std::move(abs);
    return out;
}

GroundMdp random_mdp(uint64_t seed, int num_states, int num_actions, int branching,
                     double gamma) {
    Rng rng(seed);
    branching = std::min(branching, num_states);
    std::vector<double> T(size_t(num_states) * num_actions * num_states, 0.0);
    std::vector<double> R(size_t(num_states) * num_actions);
    std::vector<double> start(num_states);
    std::vector<int> order(num_states);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
            std::iota(order.begin(), order.end(), 0);
            for (int i = 0; i < branching; ++i)
                std::swap(order[i], order[i + rng.uniform_int(num_states - i)]);
            double total = 0.0;
            std::vector<double> w(branching);
            for (int i = 0; i < branching; ++i) total += (w[i] = rng.exponential());
            for (int i = 0; i < branching; ++i)
                T[(size_t(s) * num_actions + a) * num_states + order[i]] = w[i] / total;
            R[size_t(s) * num_actions + a] = rng.uniform();
        }
    double total = 0.0;
    for (int s = 0; s < num_states; ++s) total += (start[s] = rng.exponential());
    for (int s = 0; s < num_states; ++s) start[s] /= total;
    GroundMdp out(num_states, num_actions, gamma, std::move(T), std::move(R), std::move(start));
    out.validate();
    return out;
}

Mapping random_mapping(uint64_t seed, int num_states, int num_abstract) {
    Rng rng(seed ^ 0x5851f42d4c957f2dULL);
    Mapping out;
    out.num_abstract_states = num_abstract;
    out.block_of.assign(num_states, 0);
    std::vector<int> order(num_states);
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < num_states; ++i)
        std::swap(order[i], order[i + rng.uniform_int(num_states - i)]);
    for (int i = 0; i < num_states; ++i)
        out.block_of[order[i]] = i < num_abstract ? i : rng.uniform_int(num_abstract);
    out.validate();
    return out;
}

AbstractionPair identity_abstraction(const GroundMdp& mdp) {
    AbstractionPair pair;
    pair.ground = mdp;
    pair.abstract_model = SecondOrderMdp::from_first_order(mdp);
    pair.mapping.num_abstract_states = mdp.num_states();
    pair.mapping.block_of.resize(mdp.num_states());
    std::iota(pair.mapping.block_of.begin(), pair.mapping.block_of.end(), 0);
    return pair;
}

namespace {

struct ColumnFit {
    std::vector<std::vector<double>> exit_max; // per predecessor: cumulative targets
    std::vector<double> value_max;             // per predecessor
    std::vector<char> used;                    // predecessor has entries
};

// Entry-wise maxima over the enumerated deterministic options of one block.
ColumnFit column_maxima(const GroundMdp& mdp, const Mapping& mapping,
                        const EntryExitSets& sets, int s, long enum_cap) {
    const int Sb = mapping.num_abstract_states;
    BlockMdp block = build_block_mdp(mdp, mapping, s);
    ColumnFit fit;
    fit.exit_max.assign(Sb + 1, std::vector<double>(Sb, 0.0));
    fit.value_max.assign(Sb + 1, 0.0);
    fit.used.assign(Sb + 1, 0);
    std::vector<int> interior(block.to_ground.begin(),
                              block.to_ground.begin() + block.num_interior);
    for (int sp = 0; sp <= Sb; ++sp) {
        if (sp == s || sets.entries_for(sp, s).empty()) continue;
        fit.used[sp] = 1;
        const std::vector<int>& entries = sets.entries_for(sp, s);
        bool done = enumerate_action_tables(
            block.num_interior, mdp.num_actions(), enum_cap, [&](const std::vector<int>& acts) {
                FRelativeOption o = make_option(sp, s, interior, acts);
                for (int e : entries) {
                    BlockOccupancy h = block_occupancy(block, o, e);
                    for (int b = 0; b < Sb; ++b)
                        if (b != s)
                            fit.exit_max[sp][b] = std::max(fit.exit_max[sp][b], h.cumulative(b));
                    fit.value_max[sp] = std::max(fit.value_max[sp], block_value(block, o, e));
                }
            });
        if (!done) throw std::runtime_error("synthesize: enumeration cap exceeded");
    }
    return fit;
}

bool fit_column(SecondOrderMdp& abs, int s, const ColumnFit& fit, double gb) {
    const int Sb = abs.num_states();
    // default rows: hold in the block
    for (int sp = 0; sp <= Sb; ++sp) {
        for (int b = 0; b < Sb; ++b) abs.transition_at(sp, s, 0, b) = 0.0;
        abs.transition_at(sp, s, 0, s) = 1.0;
        abs.reward_at(sp, s, 0) = 0.0;
    }
    std::vector<int> preds;
    for (int sp = 0; sp <= Sb; ++sp)
        if (fit.used[sp]) preds.push_back(sp);
    if (preds.empty()) return true;

    bool uniform = true;
    for (int sp : preds) {
        if (std::fabs(fit.value_max[sp] - fit.value_max[preds[0]]) > 1e-12) uniform = false;
        for (int b = 0; b < Sb; ++b)
            if (std::fabs(fit.exit_max[sp][b] - fit.exit_max[preds[0]][b]) > 1e-12)
                uniform = false;
    }

    if (uniform) {
        // first-order rows: invert the single-row expansion
        const std::vector<double>& H = fit.exit_max[preds[0]];
        double D = 0.0;
        for (int b = 0; b < Sb; ++b)
            if (b != s) D += H[b];
        if (D > gb + 1e-12) return false;
        double self = (D >= 1.0) ? 0.0 : (gb - D) / (gb * (1.0 - D));
        if (self < -1e-9 || self > 1.0 + 1e-9) return false;
        self = std::clamp(self, 0.0, 1.0);
        const double reward = fit.value_max[preds[0]] * (1.0 - gb * self);
        if (reward < -1e-12 || reward > 1.0 + 1e-12) return false;
        for (int sp = 0; sp <= Sb; ++sp) {
            abs.transition_at(sp, s, 0, s) = self;
            double sum = self;
            for (int b = 0; b < Sb; ++b)
                if (b != s) sum += (abs.transition_at(sp, s, 0, b) = H[b] * (1.0 - gb * self) / gb);
            for (int b = 0; b < Sb; ++b) abs.transition_at(sp, s, 0, b) /= sum;
            abs.reward_at(sp, s, 0) = std::clamp(reward, 0.0, 1.0);
        }
        return true;
    }

    // second-order rows with a pure self-loop continuation: the (s,s) row
    // keeps all mass on s, so each predecessor row is free to carry its own
    // targets directly.
    abs.transition_at(s, s, 0, s) = 1.0;
    for (int b = 0; b < Sb; ++b)
        if (b != s) abs.transition_at(s, s, 0, b) = 0.0;

    double loop_reward = 0.0;
    std::vector<double> q(Sb + 1, 0.0);
    for (int sp : preds) {
        double D = 0.0;
        for (int b = 0; b < Sb; ++b)
            if (b != s) D += fit.exit_max[sp][b];
        if (D > gb + 1e-12) return false;
        q[sp] = std::max(0.0, 1.0 - D / gb);
        if (fit.value_max[sp] > 1.0) {
            if (q[sp] <= 0.0) return false;
            loop_reward = std::max(loop_reward,
                                   (fit.value_max[sp] - 1.0) * (1.0 - gb) / (gb * q[sp]));
        }
    }
    if (loop_reward > 1.0 + 1e-12) return false;
    loop_reward = std::clamp(loop_reward, 0.0, 1.0);
    abs.reward_at(s, s, 0) = loop_reward;
    for (int sp : preds) {
        double sum = (abs.transition_at(sp, s, 0, s) = q[sp]);
        for (int b = 0; b < Sb; ++b)
            if (b != s) sum += (abs.transition_at(sp, s, 0, b) = fit.exit_max[sp][b] / gb);
        for (int b = 0; b < Sb; ++b) abs.transition_at(sp, s, 0, b) /= sum;
        const double direct = fit.value_max[sp] - gb * q[sp] * loop_reward / (1.0 - gb);
        if (direct < -1e-9 || direct > 1.0 + 1e-9) return false;
        abs.reward_at(sp, s, 0) = std::clamp(direct, 0.0, 1.0);
    }
    return true;
}

} // namespace

SecondOrderMdp synthesize_admissible_abstraction(const GroundMdp& mdp, const Mapping& mapping,
                                                 double gamma_bar, long enum_cap) {
    const int Sb = mapping.num_abstract_states;
    EntryExitSets sets = compute_entries_exits(mdp, mapping);
    std::vector<ColumnFit> fits;
    for (int s = 0; s < Sb; ++s) fits.push_back(column_maxima(mdp, mapping, sets, s, enum_cap));

    auto attempt = [&](double gb, SecondOrderMdp* out) {
        std::vector<double> T(size_t(Sb + 1) * Sb * Sb, 0.0), R(size_t(Sb + 1) * Sb, 0.0);
        std::vector<double> nu0(Sb, 0.0);
        for (int s = 0; s < mdp.num_states(); ++s)
            nu0[mapping(s)] += mdp.start_distribution()[s];
        SecondOrderMdp abs(Sb, 1, gb, std::move(T), std::move(R), std::move(nu0));
        for (int s = 0; s < Sb; ++s)
            if (!fit_column(abs, s, fits[s], gb)) return false;
        if (out) *out = std::move(abs);
        return true;
    };

    SecondOrderMdp result;
    if (attempt(gamma_bar, &result)) {
        result.validate();
        return result;
    }
    // feasibility is monotone in the discount: report the threshold
    double lo = gamma_bar, hi = 1.0 - 1e-9;
    if (!attempt(hi, nullptr))
        throw std::runtime_error("synthesize: no discount below 1 fits the targets");
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (attempt(mid, nullptr))
            hi = mid;
        else
            lo = mid;
    }
    throw std::runtime_error("synthesize: infeasible at the requested discount; minimal feasible "
                             "discount is about " +
                             std::to_string(hi));
}

namespace {

void emit(std::ostringstream& os, double v) {
    os.precision(17);
    os << v;
}

} // namespace

std::string write_env(const GroundMdp& mdp) {
    std::ostringstream os;
    os.precision(17);
    os << "mdp " << mdp.num_states() << ' ' << mdp.num_actions() << ' ' << mdp.gamma() << '\n';
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a)
            for (int s2 = 0; s2 < mdp.num_states(); ++s2)
                if (mdp.transition(s, a, s2) > 0.0)
                    os << "t " << s << ' ' << a << ' ' << s2 << ' ' << mdp.transition(s, a, s2)
                       << '\n';
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a)
            if (mdp.reward(s, a) > 0.0)
                os << "r " << s << ' ' << a << ' ' << mdp.reward(s, a) << '\n';
    for (int s = 0; s < mdp.num_states(); ++s)
        if (mdp.start_distribution()[s] > 0.0)
            os << "start " << s << ' ' << mdp.start_distribution()[s] << '\n';
    return os.str();
}

GroundMdp parse_env(std::istream& in) {
    std::string line, tag;
    int lineno = 0;
    int S = -1, A = -1;
    double gamma = 0.0;
    std::vector<double> T, R, start;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ls >> tag;
        if (tag == "mdp") {
            if (!(ls >> S >> A >> gamma) || S <= 0 || A <= 0)
                throw ParseError(lineno, "bad header");
            T.assign(size_t(S) * A * S, 0.0);
            R.assign(size_t(S) * A, 0.0);
            start.assign(S, 0.0);
        } else if (tag == "t") {
            int s, a, s2;
            double p;
            if (S < 0 || !(ls >> s >> a >> s2 >> p) || s < 0 || s >= S || a < 0 || a >= A ||
                s2 < 0 || s2 >= S)
                throw ParseError(lineno, "bad transition");
            T[(size_t(s) * A + a) * S + s2] = p;
        } else if (tag == "r") {
            int s, a;
            double v;
            if (S < 0 || !(ls >> s >> a >> v) || s < 0 || s >= S || a < 0 || a >= A)
                throw ParseError(lineno, "bad reward");
            R[size_t(s) * A + a] = v;
        } else if (tag == "start") {
            int s;
            double p;
            if (S < 0 || !(ls >> s >> p) || s < 0 || s >= S) throw ParseError(lineno, "bad start");
            start[s] = p;
        } else {
            throw ParseError(lineno, "unknown tag '" + tag + "'");
        }
    }
    if (S < 0) throw ParseError(lineno, "missing header");
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < S; ++s2) sum += T[(size_t(s) * A + a) * S + s2];
            if (std::fabs(sum - 1.0) > 1e-9)
                throw ParseError(lineno, "transition row (" + std::to_string(s) + "," +
                                             std::to_string(a) + ") sums to " +
                                             std::to_string(sum));
        }
    double sum = 0.0;
    for (double p : start) sum += p;
    if (std::fabs(sum - 1.0) > 1e-9) throw ParseError(lineno, "start distribution not normalized");
    GroundMdp out(S, A, gamma, std::move(T), std::move(R), std::move(start));
    out.validate();
    return out;
}

std::string write_abstraction(const SecondOrderMdp& abs, const Mapping& mapping) {
    std::ostringstream os;
    os.precision(17);
    const int Sb = abs.num_states(), Ab = abs.num_actions();
    os << "abs " << Sb << ' ' << Ab << ' ' << abs.gamma() << '\n';
    for (int sp = 0; sp <= Sb; ++sp)
        for (int s = 0; s < Sb; ++s)
            for (int a = 0; a < Ab; ++a)
                for (int s2 = 0; s2 < Sb; ++s2)
                    if (abs.transition(sp, s, a, s2) > 0.0)
                        os << "t " << sp << ' ' << s << ' ' << a << ' ' << s2 << ' '
                           << abs.transition(sp, s, a, s2) << '\n';
    for (int sp = 0; sp <= Sb; ++sp)
        for (int s = 0; s < Sb; ++s)
            for (int a = 0; a < Ab; ++a)
                if (abs.reward(sp, s, a) > 0.0)
                    os << "r " << sp << ' ' << s << ' ' << a << ' ' << abs.reward(sp, s, a)
                       << '\n';
    for (int s = 0; s < int(mapping.block_of.size()); ++s)
        os << "map " << s << ' ' << mapping.block_of[s] << '\n';
    return os.str();
}

std::pair<SecondOrderMdp, Mapping> parse_abstraction(std::istream& in) {
    std::string line, tag;
    int lineno = 0;
    int Sb = -1, Ab = -1;
    double gamma = 0.0;
    std::vector<double> T, R;
    std::vector<std::pair<int, int>> map_lines;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ls >> tag;
        if (tag == "abs") {
            if (!(ls >> Sb >> Ab >> gamma) || Sb <= 0 || Ab <= 0)
                throw ParseError(lineno, "bad header");
            T.assign(size_t(Sb + 1) * Sb * Ab * Sb, 0.0);
            R.assign(size_t(Sb + 1) * Sb * Ab, 0.0);
        } else if (tag == "t") {
            int sp, s, a, s2;
            double p;
            if (Sb < 0 || !(ls >> sp >> s >> a >> s2 >> p) || sp < 0 || sp > Sb || s < 0 ||
                s >= Sb || a < 0 || a >= Ab || s2 < 0 || s2 >= Sb)
                throw ParseError(lineno, "bad transition");
            T[((size_t(sp) * Sb + s) * Ab + a) * Sb + s2] = p;
        } else if (tag == "r") {
            int sp, s, a;
            double v;
            if (Sb < 0 || !(ls >> sp >> s >> a >> v) || sp < 0 || sp > Sb || s < 0 || s >= Sb ||
                a < 0 || a >= Ab)
                throw ParseError(lineno, "bad reward");
            R[(size_t(sp) * Sb + s) * Ab + a] = v;
        } else if (tag == "map") {
            int s, sb;
            if (Sb < 0 || !(ls >> s >> sb) || sb < 0 || sb >= Sb)
                throw ParseError(lineno, "bad map line");
            map_lines.emplace_back(s, sb);
        } else {
            throw ParseError(lineno, "unknown tag '" + tag + "'");
        }
    }
    if (Sb < 0) throw ParseError(lineno, "missing header");
    for (int sp = 0; sp <= Sb; ++sp)
        for (int s = 0; s < Sb; ++s)
            for (int a = 0; a < Ab; ++a) {
                double sum = 0.0;
                for (int s2 = 0; s2 < Sb; ++s2) sum += T[((size_t(sp) * Sb + s) * Ab + a) * Sb + s2];
                if (std::fabs(sum - 1.0) > 1e-9)
                    throw ParseError(lineno, "transition row (" + std::to_string(sp) + "," +
                                                 std::to_string(s) + "," + std::to_string(a) +
                                                 ") sums to " + std::to_string(sum));
            }
    int S = 0;
    for (auto [s, sb] : map_lines) S = std::max(S, s + 1);
    Mapping mapping;
    mapping.num_abstract_states = Sb;
    mapping.block_of.assign(S, -1);
    for (auto [s, sb] : map_lines) mapping.block_of[s] = sb;
    for (int s = 0; s < S; ++s)
        if (mapping.block_of[s] < 0) throw ParseError(lineno, "mapping not total");

    // the abstract start is reconstructed by the caller pairing it with an
    // environment; default to uniform
    std::vector<double> nu0(Sb, 1.0 / Sb);
    SecondOrderMdp abs(Sb, Ab, gamma, std::move(T), std::move(R), std::move(nu0));
    return {std::move(abs), std::move(mapping)};
}

} // namespace rarlkit
