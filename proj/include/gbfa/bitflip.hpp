// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// IEEE-754 binary32 bit view of weights and the gradient-guided flip rule.
//
// A weight w is a bit vector b_31..b_0 (31 = sign, 30..23 = exponent,
// 22..0 = mantissa). The loss derivative with respect to bit i is taken to
// first order as dL/dw * delta_i, where delta_i is the value of w with bit i
// set minus the value with bit i cleared. A bit is eligible for flipping when
// the flip moves the weight along the loss-ascending direction:
//
//   b_i | sign(dL/db_i) | flipped b_i | eligible
//   ----+---------------+-------------+---------
//    0  |      +1       |      1      |    1
//    0  |      -1       |      0      |    0
//    1  |      +1       |      1      |    0
//    1  |      -1       |      0      |    1

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace gbfa {

class BitIndex {
public:
    static constexpr std::uint8_t kSign = 31;
    static constexpr std::uint8_t kExponentMsb = 30;
    static constexpr std::uint8_t kExponentLsb = 23;

    constexpr BitIndex() = default;
    constexpr explicit BitIndex(unsigned position) : pos_(static_cast<std::uint8_t>(position)) {
        if (position > 31) throw std::out_of_range("bit index must be in [0, 31]");
    }
    constexpr unsigned value() const { return pos_; }
    constexpr std::uint32_t mask() const { return std::uint32_t{1} << pos_; }
    constexpr bool is_sign() const { return pos_ == kSign; }
    constexpr bool is_exponent() const { return pos_ >= kExponentLsb && pos_ <= kExponentMsb; }
    friend constexpr bool operator==(BitIndex, BitIndex) = default;

private:
    std::uint8_t pos_ = 0;
};

inline std::uint32_t bits_of(float w) { return std::bit_cast<std::uint32_t>(w); }
inline float float_of(std::uint32_t bits) { return std::bit_cast<float>(bits); }
inline bool bit_is_set(float w, BitIndex i) { return (bits_of(w) & i.mask()) != 0; }

/// Bit pattern of w XOR (1 << i). NaN and infinities are legal results.
inline float flip_bit(float w, BitIndex i) { return float_of(bits_of(w) ^ i.mask()); }

/// value(bits | mask) - value(bits & ~mask). When the set pattern is NaN or
/// infinite the result is an infinity pointing the way the weight moves.
double bit_delta(float w, BitIndex i);

struct BitGradientVector {
    std::array<double, 32> gradient{};  // dL/db_i, indexed by bit position
    std::array<bool, 32> bit{};         // current b_i
    std::array<bool, 32> indicator{};   // eligibility I_i
    std::array<bool, 32> flipped{};     // b_i after applying the rule

    bool eligible(BitIndex i) const { return indicator[i.value()]; }
};

/// Flip-indicator rule for a single bit.
constexpr bool flip_indicator(bool bit, double gradient) {
    return (!bit && gradient > 0.0) || (bit && gradient < 0.0);
}

BitGradientVector bit_gradients(double dl_dw, float w);

enum class FlipRule {
    /// Eligible iff the truth table above says so (default).
    Indicator,
    /// Naive b + sign(g) in one-bit arithmetic: any bit with g != 0 flips,
    /// including those whose flip lowers the first-order loss.
    SignStep,
};

struct BitPolicy {
    FlipRule rule = FlipRule::Indicator;
    bool allow_nan = false;
    bool allow_inf = true;
};

/// Eligible bit with the largest |dL/db_i| (ties to the lowest index), or
/// nothing when no bit qualifies.
std::optional<BitIndex> select_vulnerable_bit(double dl_dw, float w, const BitPolicy& policy = {});

}  // namespace gbfa
