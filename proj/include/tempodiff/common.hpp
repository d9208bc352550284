#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tempodiff {

// Error taxonomy shared across modules. The CLI maps these onto exit codes:
// ParameterError -> 1 (usage), IoError/FormatError/DataError -> 2,
// NumericError and everything else -> 3.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class IndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

// Deterministic stream derivation for seeding sub-RNGs.
inline uint64_t mix_seed(uint64_t base, std::string_view tag) {
    uint64_t h = fnv1a64(&base, sizeof(base));
    return fnv1a64(tag, h);
}

inline uint64_t mix_seed(uint64_t base, uint64_t n) {
    uint64_t h = fnv1a64(&base, sizeof(base));
    return fnv1a64(&n, sizeof(n), h);
}

inline std::string hex_u64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// Round-trip text form for doubles; used by every CSV/text artifact so
// outputs are byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline void ensure_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw NumericError(std::string("non-finite value in ") + what);
    }
}

inline void ensure_finite(const double* p, size_t n, const char* what) {
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) {
            throw NumericError(std::string("non-finite value in ") + what);
        }
    }
}

}  // namespace tempodiff
