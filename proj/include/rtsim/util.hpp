#pragma once

#include <bit>
#include <cstdint>

namespace rtsim {

// a * 2^d with floor semantics: left shift for d >= 0, arithmetic right
// shift (floor division by 2^|d|) for d < 0.
inline int64_t floor_shift(int64_t a, int d) {
    if (d >= 0) return a << d;
    return a >> (-d); // C++20: arithmetic shift on signed
}

// Interpret the low `bits` bits of v as a two's-complement value.
inline int64_t sign_extend(uint64_t v, int bits) {
    const uint64_t m = uint64_t{1} << (bits - 1);
    v &= (bits >= 64) ? ~uint64_t{0} : ((uint64_t{1} << bits) - 1);
    return static_cast<int64_t>((v ^ m) - m);
}

// Bit i of v with sign extension beyond bit 62.
inline uint8_t bit_of(int64_t v, int i) {
    if (i > 62) i = 62;
    return static_cast<uint8_t>((v >> i) & 1);
}

inline int ceil_log2(uint64_t v) {
    return v <= 1 ? 0 : 64 - std::countl_zero(v - 1);
}

inline uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Exponent of the power of two nearest to v (ties toward the larger power).
inline int nearest_pow2_exponent(uint64_t v) {
    const int lo = 63 - std::countl_zero(v);
    const uint64_t floor_pow = uint64_t{1} << lo;
    if (v == floor_pow) return lo;
    const uint64_t ceil_pow = floor_pow << 1;
    return (v - floor_pow < ceil_pow - v) ? lo : lo + 1;
}

// Smallest signed bit-width that holds v.
inline int signed_width(int64_t v) {
    int w = 1;
    while (v < -(int64_t{1} << (w - 1)) || v > (int64_t{1} << (w - 1)) - 1) ++w;
    return w;
}

} // namespace rtsim
