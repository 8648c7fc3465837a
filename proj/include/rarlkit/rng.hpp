#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace rarlkit {

/// Small self-contained generator (xoshiro256**) so that fixtures and runs are
/// byte-identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        // splitmix64 seeding
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
        for (auto& word : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            uint64_t x = z;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            word = x ^ (x >> 31);
        }
    }

    uint64_t next_u64() {
        uint64_t* s = s_;
        uint64_t result = rotl(s[1] * 5, 7) * 9;
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

    double exponential() {
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return -std::log(u);
    }

    /// Index drawn from an unnormalized nonnegative weight vector.
    int categorical(const double* w, int n) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += w[i];
        double u = uniform() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += w[i];
            if (u < acc) return i;
        }
        return n - 1;
    }
    int categorical(const std::vector<double>& w) { return categorical(w.data(), int(w.size())); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

} // namespace rarlkit
