// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <string>

namespace gbfa {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

}  // namespace gbfa
