#include "rarlkit/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace rarlkit {

namespace {

void check_distribution(const double* p, int n, double tol, const std::string& what) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (p[i] < 0.0) throw std::invalid_argument(what + ": negative probability");
        sum += p[i];
    }
    if (std::fabs(sum - 1.0) > tol)
        throw std::invalid_argument(what + ": row sums to " + std::to_string(sum));
}

void check_unit_interval(double v, const std::string& what) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument(what + ": value outside [0,1]");
}

void check_gamma(double g) {
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
}

} // namespace

GroundMdp::GroundMdp(int num_states, int num_actions, double gamma,
                     std::vector<double> transition, std::vector<double> reward,
                     std::vector<double> start_distribution)
    : S_(num_states), A_(num_actions), gamma_(gamma),
      T_(std::move(transition)), R_(std::move(reward)), start_(std::move(start_distribution)) {}

void GroundMdp::validate() const {
    check_gamma(gamma_);
    if (T_.size() != size_t(S_) * A_ * S_ || R_.size() != size_t(S_) * A_ ||
        start_.size() != size_t(S_))
        throw std::invalid_argument("GroundMdp: table sizes inconsistent");
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a) {
            check_distribution(row(s, a), S_, kRowSumTol, "GroundMdp transition");
            check_unit_interval(reward(s, a), "GroundMdp reward");
        }
    check_distribution(start_.data(), S_, kRowSumTol, "GroundMdp start");
}

SecondOrderMdp::SecondOrderMdp(int num_states, int num_actions, double gamma,
                               std::vector<double> transition, std::vector<double> reward,
                               std::vector<double> start_distribution)
    : S_(num_states), A_(num_actions), gamma_(gamma),
      T_(std::move(transition)), R_(std::move(reward)), start_(std::move(start_distribution)) {}

SecondOrderMdp SecondOrderMdp::from_first_order(const GroundMdp& mdp) {
    const int S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> T(size_t(S + 1) * S * A * S);
    std::vector<double> R(size_t(S + 1) * S * A);
    SecondOrderMdp out(S, A, mdp.gamma(), std::move(T), std::move(R), mdp.start_distribution());
    for (int sp = 0; sp <= S; ++sp)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                out.reward_at(sp, s, a) = mdp.reward(s, a);
                for (int s2 = 0; s2 < S; ++s2)
                    out.transition_at(sp, s, a, s2) = mdp.transition(s, a, s2);
            }
    return out;
}

void SecondOrderMdp::validate() const {
    check_gamma(gamma_);
    if (T_.size() != size_t(S_ + 1) * S_ * A_ * S_ || R_.size() != size_t(S_ + 1) * S_ * A_ ||
        start_.size() != size_t(S_))
        throw std::invalid_argument("SecondOrderMdp: table sizes inconsistent");
    for (int sp = 0; sp <= S_; ++sp)
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) {
                check_distribution(row(sp, s, a), S_, kRowSumTol, "SecondOrderMdp transition");
                check_unit_interval(reward(sp, s, a), "SecondOrderMdp reward");
            }
    check_distribution(start_.data(), S_, kRowSumTol, "SecondOrderMdp start");
}

void StochasticPolicy::validate() const {
    if (num_actions <= 0 || prob.size() % num_actions != 0)
        throw std::invalid_argument("StochasticPolicy: bad shape");
    const int S = int(prob.size()) / num_actions;
    for (int s = 0; s < S; ++s)
        check_distribution(&prob[size_t(s) * num_actions], num_actions, kRowSumTol,
                           "StochasticPolicy row");
}

double OccupancyMeasure::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

void OccupancyMeasure::validate() const {
    for (double v : values)
        if (v < -kOccupancySumTol) throw std::invalid_argument("OccupancyMeasure: negative entry");
    if (std::fabs(sum() - 1.0) > kOccupancySumTol)
        throw std::invalid_argument("OccupancyMeasure: does not sum to 1");
}

void CmdpSpec::validate() const {
    base.validate();
    if (auxiliary_rewards.size() != lower_limits.size())
        throw std::invalid_argument("CmdpSpec: rewards/limits length mismatch");
    for (const auto& table : auxiliary_rewards) {
        if (table.size() != size_t(base.num_states()) * base.num_actions())
            throw std::invalid_argument("CmdpSpec: auxiliary reward shape");
        for (double v : table) check_unit_interval(v, "CmdpSpec auxiliary reward");
    }
    for (double l : lower_limits) check_unit_interval(l, "CmdpSpec lower limit");
}

} // namespace rarlkit
