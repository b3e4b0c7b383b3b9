#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bvote {

using Bytes = std::vector<uint8_t>;

std::string to_hex(std::span<const uint8_t> data);
Bytes from_hex(const std::string& hex);  // throws std::invalid_argument on bad input

template <size_t N>
std::array<uint8_t, N> array_from_hex(const std::string& hex) {
    Bytes b = from_hex(hex);
    if (b.size() != N) throw std::invalid_argument("hex string has wrong length");
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), b.data(), N);
    return out;
}

/// Little-endian append-only byte sink used by all on-disk and wire formats.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v));
        buf_.push_back(static_cast<uint8_t>(v >> 8));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void raw(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void raw(const char* s) { while (*s) buf_.push_back(static_cast<uint8_t>(*s++)); }

    const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    Bytes buf_;
};

/// Bounds-checked little-endian cursor over a byte buffer.
/// All read methods throw std::out_of_range past the end; callers translate
/// that into their own malformed-input errors.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto s = take(2);
        return static_cast<uint16_t>(s[0] | (s[1] << 8));
    }
    uint32_t u32() {
        auto s = take(4);
        return static_cast<uint32_t>(s[0]) | (static_cast<uint32_t>(s[1]) << 8) |
               (static_cast<uint32_t>(s[2]) << 16) | (static_cast<uint32_t>(s[3]) << 24);
    }
    uint64_t u64() {
        uint64_t lo = u32();
        uint64_t hi = u32();
        return lo | (hi << 32);
    }
    std::span<const uint8_t> take(size_t n) {
        if (n > remaining()) throw std::out_of_range("read past end of buffer");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <size_t N>
    std::array<uint8_t, N> take_array() {
        auto s = take(N);
        std::array<uint8_t, N> out{};
        std::memcpy(out.data(), s.data(), N);
        return out;
    }
    bool expect_magic(const char* magic4) {
        if (remaining() < 4) return false;
        auto s = take(4);
        return std::memcmp(s.data(), magic4, 4) == 0;
    }

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

Bytes read_file(const std::string& path);           // throws StorageError
void write_file(const std::string& path, std::span<const uint8_t> data);

}  // namespace bvote
