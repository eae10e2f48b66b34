#ifndef CDCNN_SRC_BINIO_HPP
#define CDCNN_SRC_BINIO_HPP

// Little-endian binary stream helpers shared by the file-format writers.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cdcnn::binio {

inline void put_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

[[noreturn]] inline void fail_truncated(const char* what) {
    throw std::runtime_error(std::string("truncated file while reading ") + what);
}

inline std::uint8_t get_u8(std::istream& in, const char* what) {
    const int c = in.get();
    if (c == EOF) fail_truncated(what);
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{get_u8(in, what)} << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& in, const char* what) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{get_u8(in, what)} << (8 * i);
    return v;
}

inline double get_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(get_u64(in, what));
}

inline void put_bytes(std::ostream& out, const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

inline std::string get_bytes(std::istream& in, std::size_t len, const char* what) {
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in.gcount()) != len) fail_truncated(what);
    return s;
}

}  // namespace cdcnn::binio

#endif
