#pragma once

#include "ledgersim/core/bytes.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <string_view>

namespace ledgersim::crypto {

namespace detail {

inline constexpr std::array<std::uint64_t, 24> keccak_round_constants = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL, 0x8000000080008000ULL,
    0x000000000000808bULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
    0x000000000000008aULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
    0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800aULL, 0x800000008000000aULL,
    0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

// Rotation offsets and lane permutation for the combined rho/pi step,
// walking lanes in pi order starting from lane 1.
inline constexpr std::array<int, 24> keccak_rho = {1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                                                   27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};
inline constexpr std::array<int, 24> keccak_pi = {10, 7,  11, 17, 18, 3, 5,  16, 8,  21, 24, 4,
                                                  15, 23, 19, 13, 12, 2, 20, 14, 22, 9,  6,  1};

inline void keccak_f1600(std::array<std::uint64_t, 25>& a) {
    for (auto rc : keccak_round_constants) {
        std::array<std::uint64_t, 5> c{};
        for (int x = 0; x < 5; ++x) c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        for (int x = 0; x < 5; ++x) {
            std::uint64_t d = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
            for (int y = 0; y < 25; y += 5) a[y + x] ^= d;
        }

        std::uint64_t current = a[1];
        for (int i = 0; i < 24; ++i) {
            int j = keccak_pi[i];
            std::uint64_t next = a[j];
            a[j] = std::rotl(current, keccak_rho[i]);
            current = next;
        }

        for (int y = 0; y < 25; y += 5) {
            std::array<std::uint64_t, 5> row{};
            for (int x = 0; x < 5; ++x) row[x] = a[y + x];
            for (int x = 0; x < 5; ++x) a[y + x] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5]);
        }

        a[0] ^= rc;
    }
}

} // namespace detail

/// Incremental Keccak-256 with the original 0x01 domain padding (the
/// pre-standard variant, not FIPS-202 SHA3-256).
class Keccak256 {
  public:
    static constexpr std::size_t rate = 136;

    Keccak256& update(ByteView data) {
        for (auto b : data) {
            state_[pos_ / 8] ^= static_cast<std::uint64_t>(b) << (8 * (pos_ % 8));
            if (++pos_ == rate) {
                detail::keccak_f1600(state_);
                pos_ = 0;
            }
        }
        return *this;
    }

    Keccak256& update(std::string_view text) {
        return update(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }

    Hash256 finish() {
        state_[pos_ / 8] ^= std::uint64_t{0x01} << (8 * (pos_ % 8));
        state_[(rate - 1) / 8] ^= std::uint64_t{0x80} << (8 * ((rate - 1) % 8));
        detail::keccak_f1600(state_);
        Hash256 out;
        for (std::size_t i = 0; i < out.bytes.size(); ++i)
            out.bytes[i] = static_cast<std::uint8_t>(state_[i / 8] >> (8 * (i % 8)));
        return out;
    }

  private:
    std::array<std::uint64_t, 25> state_{};
    std::size_t pos_ = 0;
};

inline Hash256 keccak256(ByteView data) {
    return Keccak256{}.update(data).finish();
}

inline Hash256 keccak256(std::string_view text) {
    return Keccak256{}.update(text).finish();
}

} // namespace ledgersim::crypto
