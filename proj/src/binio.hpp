#pragma once

// Little-endian binary file helpers shared by the weight and table formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "c2f/errors.hpp"

namespace c2f::binio {

inline void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
    put_u32(out, static_cast<uint32_t>(v));
    put_u32(out, static_cast<uint32_t>(v >> 32));
}

inline void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<uint64_t>(v));
}

inline void put_f32(std::ostream& out, float v) {
    put_u32(out, std::bit_cast<uint32_t>(v));
}

inline uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        fail("file " + path + ": truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t get_u64(std::istream& in, const std::string& path) {
    uint64_t lo = get_u32(in, path);
    uint64_t hi = get_u32(in, path);
    return lo | (hi << 32);
}

inline double get_f64(std::istream& in, const std::string& path) {
    return std::bit_cast<double>(get_u64(in, path));
}

inline float get_f32(std::istream& in, const std::string& path) {
    return std::bit_cast<float>(get_u32(in, path));
}

} // namespace c2f::binio
