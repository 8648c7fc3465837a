#include "rarlkit/occupancy_lp.hpp"

#include <cmath>
#include <stdexcept>

namespace rarlkit {

LinearProgram build_primal_occupancy_lp(const GroundMdp& mdp, const std::vector<double>& nu) {
    const int S = mdp.num_states(), A = mdp.num_actions();
    if (int(nu.size()) != S)
        throw std::invalid_argument("build_primal_occupancy_lp: nu size mismatch");
    const double g = mdp.gamma();

    LinearProgram lp;
    lp.num_vars = S * A;
    lp.objective.resize(lp.num_vars);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) lp.objective[size_t(s) * A + a] = mdp.reward(s, a);

    std::vector<double> row(lp.num_vars);
    for (int s2 = 0; s2 < S; ++s2) {
        std::fill(row.begin(), row.end(), 0.0);
        for (int a = 0; a < A; ++a) row[size_t(s2) * A + a] += 1.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) row[size_t(s) * A + a] -= g * mdp.transition(s, a, s2);
        lp.add_eq(row, (1.0 - g) * nu[s2]);
    }
    return lp;
}

LinearProgram build_constrained_realization_lp(const BlockMdp& block,
                                               const std::vector<double>& nu_local,
                                               const std::vector<double>& target_occupancy,
                                               double eps_t) {
    if (int(target_occupancy.size()) != block.num_abstract)
        throw std::invalid_argument("build_constrained_realization_lp: target size mismatch");
    LinearProgram lp = build_primal_occupancy_lp(block.mdp, nu_local);
    const int A = block.mdp.num_actions();
    const double g = block.mdp.gamma();

    std::vector<double> row(lp.num_vars);
    for (int b = 0; b < block.num_abstract; ++b) {
        if (b == block.block) continue;
        std::fill(row.begin(), row.end(), 0.0);
        for (int i = block.num_interior; i < int(block.to_ground.size()); ++i)
            if (block.exit_block[i - block.num_interior] == b)
                for (int a = 0; a < A; ++a) row[size_t(i) * A + a] = 1.0;
        lp.add_ge(row, (1.0 - g) * (target_occupancy[b] - eps_t));
    }
    return lp;
}

ExtractedPolicy extract_policy_from_occupancy(const std::vector<double>& b,
                                              const BlockMdp& block) {
    const int n = block.num_local(), A = block.mdp.num_actions();
    if (int(b.size()) != n * A)
        throw std::invalid_argument("extract_policy_from_occupancy: occupancy size mismatch");
    ExtractedPolicy out;
    out.policy.num_actions = A;
    out.policy.prob.assign(size_t(n) * A, 1.0 / A);
    out.deterministic = true;
    for (int i = 0; i < n; ++i) {
        double mass = 0.0;
        for (int a = 0; a < A; ++a) mass += b[size_t(i) * A + a];
        if (mass <= 1e-12) {
            if (i < block.num_interior) out.zero_mass.push_back(i);
            continue;
        }
        int support = 0;
        for (int a = 0; a < A; ++a) {
            const double p = b[size_t(i) * A + a] / mass;
            out.policy.at(i, a) = p;
            if (p > 1e-9) ++support;
        }
        if (support > 1 && i < block.num_interior) out.deterministic = false;
    }
    return out;
}

} // namespace rarlkit
