#include "rarlkit/solve.hpp"

#include "rarlkit/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace rarlkit {

namespace {

constexpr double kEvalResidualTol = 1e-10;

// Row-stochastic policy transition matrix P_pi and reward vector R_pi.
void policy_dynamics(const GroundMdp& mdp, const StochasticPolicy* stoch,
                     const DeterministicPolicy* det, std::vector<double>& P,
                     std::vector<double>& R) {
    const int S = mdp.num_states(), A = mdp.num_actions();
    P.assign(size_t(S) * S, 0.0);
    R.assign(S, 0.0);
    for (int s = 0; s < S; ++s) {
        if (det) {
            const int a = det->action[s];
            R[s] = mdp.reward(s, a);
            const double* row = mdp.row(s, a);
            for (int s2 = 0; s2 < S; ++s2) P[size_t(s) * S + s2] = row[s2];
        } else {
            for (int a = 0; a < A; ++a) {
                const double w = stoch->at(s, a);
                if (w == 0.0) continue;
                R[s] += w * mdp.reward(s, a);
                const double* row = mdp.row(s, a);
                for (int s2 = 0; s2 < S; ++s2) P[size_t(s) * S + s2] += w * row[s2];
            }
        }
    }
}

std::vector<double> solve_evaluation(const GroundMdp& mdp, const std::vector<double>& P,
                                     const std::vector<double>& R) {
    const int S = mdp.num_states();
    const double g = mdp.gamma();
    std::vector<double> A(size_t(S) * S);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            A[size_t(i) * S + j] = (i == j ? 1.0 : 0.0) - g * P[size_t(i) * S + j];
    std::vector<double> v = lu_solve(A, R, S);
    if (residual_inf(A, v, R, S) > kEvalResidualTol)
        throw std::runtime_error("evaluate_policy: residual above tolerance");
    return v;
}

OccupancyMeasure solve_occupancy(const GroundMdp& mdp, const std::vector<double>& P,
                                 const OccupancySource& source) {
    const int S = mdp.num_states();
    const double g = mdp.gamma();
    std::vector<double> mu(S, 0.0);
    if (source.is_state) {
        if (source.state < 0 || source.state >= S)
            throw std::invalid_argument("occupancy: source state out of range");
        mu[source.state] = 1.0;
    } else {
        if (int(source.distribution.size()) != S)
            throw std::invalid_argument("occupancy: source distribution size");
        mu = source.distribution;
    }
    // d = (1-g) mu + g P^T d
    std::vector<double> A(size_t(S) * S);
    std::vector<double> b(S);
    for (int i = 0; i < S; ++i) {
        b[i] = (1.0 - g) * mu[i];
        for (int j = 0; j < S; ++j)
            A[size_t(i) * S + j] = (i == j ? 1.0 : 0.0) - g * P[size_t(j) * S + i];
    }
    OccupancyMeasure d;
    d.kind = OccupancyMeasure::Kind::state;
    d.gamma = g;
    d.values = lu_solve(A, b, S);
    for (double& v : d.values)
        if (v < 0.0 && v > -1e-13) v = 0.0;
    if (source.is_state)
        d.source_state = source.state;
    else
        d.source_distribution = source.distribution;
    return d;
}

} // namespace

std::vector<double> evaluate_policy(const GroundMdp& mdp, const DeterministicPolicy& policy) {
    if (int(policy.action.size()) != mdp.num_states())
        throw std::invalid_argument("evaluate_policy: policy not total");
    std::vector<double> P, R;
    policy_dynamics(mdp, nullptr, &policy, P, R);
    return solve_evaluation(mdp, P, R);
}

std::vector<double> evaluate_policy(const GroundMdp& mdp, const StochasticPolicy& policy) {
    if (int(policy.prob.size()) != mdp.num_states() * mdp.num_actions())
        throw std::invalid_argument("evaluate_policy: policy not total");
    std::vector<double> P, R;
    policy_dynamics(mdp, &policy, nullptr, P, R);
    return solve_evaluation(mdp, P, R);
}

double value_from_start(const GroundMdp& mdp, const std::vector<double>& v) {
    double out = 0.0;
    for (int s = 0; s < mdp.num_states(); ++s) out += mdp.start_distribution()[s] * v[s];
    return out;
}

namespace {

template <bool Parallel>
ValueIterationResult value_iteration_impl(const GroundMdp& mdp, int iterations) {
    if (iterations < 1) throw std::invalid_argument("value_iteration: iterations must be >= 1");
    const int S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.gamma();
    std::vector<double> q(size_t(S) * A, 0.0), next(size_t(S) * A);
    std::vector<double> vmax(S, 0.0);
    for (int k = 0; k < iterations; ++k) {
        for (int s = 0; s < S; ++s) {
            double best = q[size_t(s) * A];
            for (int a = 1; a < A; ++a) best = std::max(best, q[size_t(s) * A + a]);
            vmax[s] = best;
        }
#pragma omp parallel for schedule(static) if (Parallel)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.row(s, a);
                double acc = 0.0;
                for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * vmax[s2];
                next[size_t(s) * A + a] = mdp.reward(s, a) + g * acc;
            }
        q.swap(next);
    }
    ValueIterationResult out;
    out.q = std::move(q);
    out.greedy.action.resize(S);
    for (int s = 0; s < S; ++s) {
        int best = 0;
        for (int a = 1; a < A; ++a)
            if (out.q[size_t(s) * A + a] > out.q[size_t(s) * A + best]) best = a;
        out.greedy.action[s] = best;
    }
    return out;
}

template <bool Parallel>
PairValueIterationResult value_iteration_2mdp_impl(const SecondOrderMdp& mdp, int iterations) {
    if (iterations < 1) throw std::invalid_argument("value_iteration_2mdp: iterations must be >= 1");
    const int S = mdp.num_states(), A = mdp.num_actions();
    const int P = mdp.num_predecessors();
    const double g = mdp.gamma();
    std::vector<double> q(size_t(P) * S * A, 0.0), next(size_t(P) * S * A);
    std::vector<double> vmax(size_t(P) * S);
    for (int k = 0; k < iterations; ++k) {
        for (int sp = 0; sp < P; ++sp)
            for (int s = 0; s < S; ++s) {
                const size_t base = (size_t(sp) * S + s) * A;
                double best = q[base];
                for (int a = 1; a < A; ++a) best = std::max(best, q[base + a]);
                vmax[size_t(sp) * S + s] = best;
            }
#pragma omp parallel for schedule(static) if (Parallel)
        for (int sp = 0; sp < P; ++sp)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double* row = mdp.row(sp, s, a);
                    // the successor pair is (s, s')
                    double acc = 0.0;
                    for (int s2 = 0; s2 < S; ++s2) acc += row[s2] * vmax[size_t(s) * S + s2];
                    next[(size_t(sp) * S + s) * A + a] = mdp.reward(sp, s, a) + g * acc;
                }
        q.swap(next);
    }
    PairValueIterationResult out;
    out.q = std::move(q);
    out.greedy.num_states = S;
    out.greedy.action.resize(size_t(P) * S);
    for (int sp = 0; sp < P; ++sp)
        for (int s = 0; s < S; ++s) {
            const size_t base = (size_t(sp) * S + s) * A;
            int best = 0;
            for (int a = 1; a < A; ++a)
                if (out.q[base + a] > out.q[base + best]) best = a;
            out.greedy.at(sp, s) = best;
        }
    return out;
}

} // namespace

ValueIterationResult value_iteration(const GroundMdp& mdp, int iterations) {
    return value_iteration_impl<true>(mdp, iterations);
}
ValueIterationResult value_iteration_serial(const GroundMdp& mdp, int iterations) {
    return value_iteration_impl<false>(mdp, iterations);
}
PairValueIterationResult value_iteration_2mdp(const SecondOrderMdp& mdp, int iterations) {
    return value_iteration_2mdp_impl<true>(mdp, iterations);
}
PairValueIterationResult value_iteration_2mdp_serial(const SecondOrderMdp& mdp, int iterations) {
    return value_iteration_2mdp_impl<false>(mdp, iterations);
}

std::vector<double> evaluate_policy_2mdp(const SecondOrderMdp& mdp,
                                         const DeterministicPairPolicy& policy) {
    const int S = mdp.num_states();
    const int P = mdp.num_predecessors();
    if (policy.num_states != S || int(policy.action.size()) != P * S)
        throw std::invalid_argument("evaluate_policy_2mdp: policy not total");
    const int n = P * S;
    const double g = mdp.gamma();
    std::vector<double> A(size_t(n) * n, 0.0), b(n);
    for (int sp = 0; sp < P; ++sp)
        for (int s = 0; s < S; ++s) {
            const int i = sp * S + s;
            const int a = policy.at(sp, s);
            b[i] = mdp.reward(sp, s, a);
            A[size_t(i) * n + i] += 1.0;
            const double* row = mdp.row(sp, s, a);
            for (int s2 = 0; s2 < S; ++s2)
                A[size_t(i) * n + (s * S + s2)] -= g * row[s2];
        }
    std::vector<double> v = lu_solve(A, b, n);
    if (residual_inf(A, v, b, n) > kEvalResidualTol)
        throw std::runtime_error("evaluate_policy_2mdp: residual above tolerance");
    return v;
}

double value_from_start_2mdp(const SecondOrderMdp& mdp, const std::vector<double>& v) {
    const int S = mdp.num_states();
    double out = 0.0;
    for (int s = 0; s < S; ++s)
        out += mdp.start_distribution()[s] * v[size_t(mdp.dummy_state()) * S + s];
    return out;
}

int vi_iterations_for(double gamma, double eps, bool proof_form) {
    const double one_minus = 1.0 - gamma;
    const double arg = proof_form ? 2.0 / (one_minus * one_minus * eps) : 2.0 / (one_minus * eps);
    return int(std::ceil(std::log(arg) / one_minus));
}

OccupancyMeasure occupancy(const GroundMdp& mdp, const DeterministicPolicy& policy,
                           const OccupancySource& source) {
    std::vector<double> P, R;
    policy_dynamics(mdp, nullptr, &policy, P, R);
    return solve_occupancy(mdp, P, source);
}

OccupancyMeasure occupancy(const GroundMdp& mdp, const StochasticPolicy& policy,
                           const OccupancySource& source) {
    std::vector<double> P, R;
    policy_dynamics(mdp, &policy, nullptr, P, R);
    return solve_occupancy(mdp, P, source);
}

namespace {

OccupancyMeasure expand_state_action(const GroundMdp& mdp, OccupancyMeasure d,
                                     const StochasticPolicy* stoch,
                                     const DeterministicPolicy* det) {
    const int S = mdp.num_states(), A = mdp.num_actions();
    OccupancyMeasure out;
    out.kind = OccupancyMeasure::Kind::state_action;
    out.gamma = d.gamma;
    out.source_state = d.source_state;
    out.source_distribution = d.source_distribution;
    out.values.assign(size_t(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        if (det) {
            out.values[size_t(s) * A + det->action[s]] = d.values[s];
        } else {
            for (int a = 0; a < A; ++a) out.values[size_t(s) * A + a] = d.values[s] * stoch->at(s, a);
        }
    }
    return out;
}

} // namespace

OccupancyMeasure state_action_occupancy(const GroundMdp& mdp, const DeterministicPolicy& policy,
                                        const OccupancySource& source) {
    return expand_state_action(mdp, occupancy(mdp, policy, source), nullptr, &policy);
}

OccupancyMeasure state_action_occupancy(const GroundMdp& mdp, const StochasticPolicy& policy,
                                        const OccupancySource& source) {
    return expand_state_action(mdp, occupancy(mdp, policy, source), &policy, nullptr);
}

double value_from_occupancy(const OccupancyMeasure& d, const std::vector<double>& rewards) {
    if (d.kind != OccupancyMeasure::Kind::state_action)
        throw std::invalid_argument("value_from_occupancy: state-action occupancy required");
    if (rewards.size() != d.values.size())
        throw std::invalid_argument("value_from_occupancy: reward table size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < rewards.size(); ++i) acc += d.values[i] * rewards[i];
    return acc / (1.0 - d.gamma);
}

} // namespace rarlkit
