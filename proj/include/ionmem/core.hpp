#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ionmem {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr const char* version_string = "ionmem 0.3.0";

// ---------------------------------------------------------------------------
// Error hierarchy. Hard precondition violations throw; soft conditions
// (noise floors, non-convergence) are reported as status flags on results.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct LabelError : Error {
    using Error::Error;
};

struct NoRootError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

struct SubspaceError : Error {
    using Error::Error;
};

struct FitDomainError : Error {
    using Error::Error;
};

struct NoOscillationError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Half-integer quantum numbers, stored as twice the value so that equality
// and ordering are exact.
// ---------------------------------------------------------------------------

struct HalfInt {
    int twice = 0;

    constexpr HalfInt() = default;
    constexpr explicit HalfInt(int twice_value) : twice(twice_value) {}

    static constexpr HalfInt from_int(int n) { return HalfInt{2 * n}; }

    constexpr double value() const { return 0.5 * twice; }
    constexpr bool integral() const { return twice % 2 == 0; }

    friend constexpr bool operator==(HalfInt a, HalfInt b) { return a.twice == b.twice; }
    friend constexpr bool operator!=(HalfInt a, HalfInt b) { return a.twice != b.twice; }
    friend constexpr bool operator<(HalfInt a, HalfInt b) { return a.twice < b.twice; }
    friend constexpr bool operator<=(HalfInt a, HalfInt b) { return a.twice <= b.twice; }
    friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return HalfInt{a.twice + b.twice}; }
    friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return HalfInt{a.twice - b.twice}; }
    friend constexpr HalfInt operator-(HalfInt a) { return HalfInt{-a.twice}; }
};

/// Formats a half-integer quantum number: "2", "-1", "1.5", "-0.5".
inline std::string format_qn(HalfInt q) {
    if (q.integral()) return std::to_string(q.twice / 2);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", q.value());
    return buf;
}

/// Parses "2", "-1", "1.5" into a half-integer; rejects anything else.
inline HalfInt parse_qn(std::string_view text) {
    std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw ValidationError("not a quantum number: '" + s + "'");
    const double tw = 2.0 * v;
    const double rounded = std::nearbyint(tw);
    if (std::abs(tw - rounded) > 1e-9 || std::abs(rounded) > 1e6)
        throw ValidationError("quantum number must be half-integer: '" + s + "'");
    return HalfInt{static_cast<int>(rounded)};
}

// ---------------------------------------------------------------------------
// Deterministic text formatting for all emitted files.
// ---------------------------------------------------------------------------

/// Round-trip-exact decimal rendering of a double.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string format_u64(std::uint64_t x) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(x));
    return buf;
}

// 64-bit FNV-1a, used for scenario hashes and output checksums.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline bool nearly_equal(double a, double b, double rel, double abs_floor = 0.0) {
    const double scale = std::max({std::abs(a), std::abs(b), abs_floor});
    return std::abs(a - b) <= rel * scale;
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double phi) {
    double w = std::remainder(phi, two_pi);
    if (w <= -pi) w += two_pi;
    return w;
}

} // namespace ionmem
