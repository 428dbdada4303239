#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "tins/error.hpp"

namespace tins::detail {

// Little-endian primitive IO, independent of host byte order.

template <typename T>
    requires std::is_integral_v<T>
void write_le(std::ostream& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
    }
    out.write(bytes, sizeof(T));
}

inline void write_f32(std::ostream& out, float value) {
    write_le(out, std::bit_cast<std::uint32_t>(value));
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_le(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
    requires std::is_integral_v<T>
T read_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw DataError("truncated file");
    }
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        u |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
    }
    return static_cast<T>(u);
}

inline float read_f32(std::istream& in) {
    return std::bit_cast<float>(read_le<std::uint32_t>(in));
}

inline std::string read_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
    const auto len = read_le<std::uint32_t>(in);
    if (len > max_len) {
        throw DataError("corrupt file: string length " + std::to_string(len));
    }
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) {
        throw DataError("truncated file");
    }
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
    char got[4];
    if (!in.read(got, 4)) {
        throw DataError(std::string("truncated file: missing ") + what + " header");
    }
    if (std::string(got, 4) != std::string(magic, 4)) {
        throw DataError(std::string("not a ") + what + " file (bad magic)");
    }
}

}  // namespace tins::detail
