#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ledgersim {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

class HexError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace detail

/// Lowercase, 0x-prefixed rendering used by every dump and log.
inline std::string to_hex(ByteView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 + data.size() * 2);
    out += "0x";
    for (auto b : data) {
        out += digits[b >> 4];
        out += digits[b & 0xf];
    }
    return out;
}

/// Accepts an optional 0x prefix; rejects odd length and non-hex digits.
inline Bytes from_hex(std::string_view text) {
    if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
    if (text.size() % 2 != 0) throw HexError("hex string has odd length");
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = detail::hex_nibble(text[2 * i]);
        int lo = detail::hex_nibble(text[2 * i + 1]);
        if (hi < 0 || lo < 0) throw HexError("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

inline Bytes to_bytes(std::string_view text) {
    return Bytes(text.begin(), text.end());
}

/// Fixed-width byte string. The tag keeps addresses, digests and secrets
/// from being mixed up at compile time.
template <std::size_t N, class Tag>
struct FixedBytes {
    static constexpr std::size_t size_bytes = N;

    std::array<std::uint8_t, N> bytes{};

    constexpr FixedBytes() = default;
    explicit constexpr FixedBytes(const std::array<std::uint8_t, N>& b) : bytes(b) {}

    static FixedBytes from_span(ByteView data) {
        if (data.size() != N)
            throw HexError("expected " + std::to_string(N) + " bytes, got " +
                           std::to_string(data.size()));
        FixedBytes out;
        std::copy(data.begin(), data.end(), out.bytes.begin());
        return out;
    }

    static FixedBytes from_hex(std::string_view text) {
        auto raw = ledgersim::from_hex(text);
        return from_span(raw);
    }

    std::string hex() const { return to_hex(bytes); }
    ByteView view() const { return bytes; }

    bool is_zero() const {
        return std::all_of(bytes.begin(), bytes.end(), [](auto b) { return b == 0; });
    }

    friend constexpr auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
    friend constexpr bool operator==(const FixedBytes&, const FixedBytes&) = default;
};

struct AddressTag {};
struct HashTag {};
struct SecretTag {};

using Address = FixedBytes<20, AddressTag>;
using Hash256 = FixedBytes<32, HashTag>;
/// 32-byte key seed; also used for the derived public identifier.
using Secret = FixedBytes<32, SecretTag>;
using PublicId = Hash256;

/// Scheme-defined signature bytes (32 bytes for the keyed-hash default).
using SignatureBytes = Bytes;

} // namespace ledgersim
