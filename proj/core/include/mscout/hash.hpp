#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace mscout {

// Stable 64-bit hashing and counter-based random variates. Everything in
// this header is a pure function of its integer inputs: no global state,
// no std::hash (whose values are implementation-defined). Registry files
// persist values derived from these functions, so the constants below are
// part of the on-disk format and must not change.

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

// splitmix64 finalizer; bijective on uint64.
inline std::uint64_t mix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
}

inline std::uint64_t key2(std::uint64_t seed, std::uint64_t a) {
    return hash_combine(mix64(seed), a);
}

inline std::uint64_t key3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return hash_combine(key2(seed, a), b);
}

inline std::uint64_t key4(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    return hash_combine(key3(seed, a, b), c);
}

// Uniform in [0,1) from the top 53 bits.
inline double unit_from_bits(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in (0,1]; safe as a log argument.
inline double unit_open_from_bits(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform_at(std::uint64_t key) { return unit_from_bits(mix64(key)); }

// One standard normal variate per key (Box-Muller, cosine branch over two
// derived 64-bit lanes).
inline double standard_normal_at(std::uint64_t key) {
    const std::uint64_t lane0 = mix64(key ^ 0xa24baed4963ee407ULL);
    const std::uint64_t lane1 = mix64(key ^ 0x9fb21c651e98df25ULL);
    const double u1 = unit_open_from_bits(lane0);
    const double u2 = unit_from_bits(lane1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Lowercased, whitespace-trimmed feature name; feature ids and bin tokens
// are derived from this form so "Age " and "age" are the same feature.
inline std::string canonical_feature_name(std::string_view name) {
    std::size_t begin = 0;
    std::size_t end = name.size();
    auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
    };
    while (begin < end && is_space(name[begin])) ++begin;
    while (end > begin && is_space(name[end - 1])) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        char c = name[i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.push_back(c);
    }
    return out;
}

inline std::uint64_t feature_id_for(std::string_view name) {
    return fnv1a64(canonical_feature_name(name));
}

} // namespace mscout
