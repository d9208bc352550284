#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tempodiff/common.hpp"

namespace tempodiff {

// mt19937_64 core with hand-rolled uniform/normal mappings. The standard
// distributions are implementation-defined, which would break byte-identical
// artifacts across standard libraries; these mappings are fixed.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // N(0,1) via Box-Muller. Always consumes exactly two draws, no caching,
    // so the stream position is a pure function of the call count.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Inclusive range. Modulo bias is negligible for the ranges used here
    // and the mapping is platform-stable.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (hi < lo) throw ParameterError("uniform_int: empty range");
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

private:
    std::mt19937_64 gen_;
};

// Fisher-Yates with the fixed integer mapping above (std::shuffle is
// implementation-defined).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace tempodiff
