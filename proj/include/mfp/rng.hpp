#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace mfp {

// Counter-based PRNG: every output is a pure hash of (seed, counter), so a
// stream can be split into independent substreams that reproduce identically
// no matter which thread consumes them.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {}

    static uint64_t mix(uint64_t seed, uint64_t counter) {
        // splitmix64 finalizer over the keyed counter
        uint64_t z = seed + (counter + 1) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() { return mix(seed_, counter_++); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; consumes two counters per call
    double normal() {
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // independent child stream
    Rng derive(uint64_t stream) const {
        return Rng(mix(seed_, 0xd1b54a32d192ed03ULL + stream));
    }

    std::vector<size_t> permutation(size_t n) {
        std::vector<size_t> p(n);
        std::iota(p.begin(), p.end(), size_t{0});
        for (size_t i = n; i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace mfp
