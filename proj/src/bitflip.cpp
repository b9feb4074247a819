// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbfa/bitflip.hpp"

#include <cmath>
#include <limits>

namespace gbfa {

double bit_delta(float w, BitIndex i) {
    const std::uint32_t bits = bits_of(w);
    const double set_value = float_of(bits | i.mask());
    const double clear_value = float_of(bits & ~i.mask());
    if (std::isnan(set_value)) {
        const double inf = std::numeric_limits<double>::infinity();
        return std::signbit(w) ? -inf : inf;
    }
    return set_value - clear_value;
}

BitGradientVector bit_gradients(double dl_dw, float w) {
    BitGradientVector out;
    for (unsigned p = 0; p < 32; ++p) {
        const BitIndex i(p);
        const bool bit = bit_is_set(w, i);
        double g = 0.0;
        if (dl_dw != 0.0) {
            const double delta = bit_delta(w, i);
            if (delta != 0.0) g = dl_dw * delta;
        }
        out.gradient[p] = g;
        out.bit[p] = bit;
        out.indicator[p] = flip_indicator(bit, g);
        out.flipped[p] = out.indicator[p] ? !bit : bit;
    }
    return out;
}

std::optional<BitIndex> select_vulnerable_bit(double dl_dw, float w, const BitPolicy& policy) {
    const auto grads = bit_gradients(dl_dw, w);
    std::optional<BitIndex> best;
    double best_mag = -1.0;
    for (unsigned p = 0; p < 32; ++p) {
        const double g = grads.gradient[p];
        const bool candidate = policy.rule == FlipRule::Indicator ? grads.indicator[p] : g != 0.0;
        if (!candidate) continue;
        const float result = flip_bit(w, BitIndex(p));
        if (std::isnan(result) && !policy.allow_nan) continue;
        if (std::isinf(result) && !policy.allow_inf) continue;
        const double mag = std::fabs(g);
        if (mag > best_mag) {
            best_mag = mag;
            best = BitIndex(p);
        }
    }
    return best;
}

}  // namespace gbfa
