// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian array payloads and JSON manifest helpers.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gbfa/graph.hpp"

namespace gbfa::io {

template <typename T>
T byteswap_value(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(std::begin(bytes), std::end(bytes));
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return {bytes.begin(), bytes.end()};
}

template <typename T>
std::vector<T> read_array(const std::filesystem::path& path, std::size_t expected_count) {
    const auto bytes = read_file(path);
    if (bytes.size() != expected_count * sizeof(T)) {
        throw DataError(path.filename().string() + ": expected " +
                        std::to_string(expected_count * sizeof(T)) + " bytes, found " +
                        std::to_string(bytes.size()));
    }
    std::vector<T> out(expected_count);
    if (!bytes.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (auto& v : out) v = byteswap_value(v);
    }
    return out;
}

template <typename T>
void append_array(std::ofstream& out, std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (T v : values) {
            v = byteswap_value(v);
            out.write(reinterpret_cast<const char*>(&v), sizeof(T));
        }
    } else {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size_bytes()));
    }
}

template <typename T>
void write_array(const std::filesystem::path& path, std::span<const T> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    append_array(out, values);
    if (!out) throw DataError("short write to " + path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

}  // namespace gbfa::io
