// Times the OpenMP kernels against their serial references on sizeable
// random instances. Not part of the test suite.

#include "rarlkit/envs.hpp"
#include "rarlkit/solve.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

using namespace rarlkit;

namespace {

template <typename F>
double time_of(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main() {
    {
        GroundMdp mdp = random_mdp(7, 600, 6, 12, 0.95);
        const int iters = 120;
        ValueIterationResult serial, parallel;
        const double ts = time_of([&] { serial = value_iteration_serial(mdp, iters); });
        const double tp = time_of([&] { parallel = value_iteration(mdp, iters); });
        double diff = 0.0;
        for (size_t i = 0; i < serial.q.size(); ++i)
            diff = std::max(diff, std::fabs(serial.q[i] - parallel.q[i]));
        std::printf("value_iteration      S=600 A=6 k=%d   serial %.3fs   omp %.3fs   max|dQ|=%g\n",
                    iters, ts, tp, diff);
    }
    {
        GroundMdp base = random_mdp(11, 48, 3, 6, 0.95);
        SecondOrderMdp two = SecondOrderMdp::from_first_order(base);
        const int iters = 150;
        PairValueIterationResult serial, parallel;
        const double ts = time_of([&] { serial = value_iteration_2mdp_serial(two, iters); });
        const double tp = time_of([&] { parallel = value_iteration_2mdp(two, iters); });
        double diff = 0.0;
        for (size_t i = 0; i < serial.q.size(); ++i)
            diff = std::max(diff, std::fabs(serial.q[i] - parallel.q[i]));
        std::printf("value_iteration_2mdp S=48 A=3 k=%d   serial %.3fs   omp %.3fs   max|dQ|=%g\n",
                    iters, ts, tp, diff);
    }
    return 0;
}
