#pragma once

// Straight-from-the-definition Keccak-f[1600] used only as a test oracle.
// Round constants come from the degree-8 LFSR and rotation offsets from the
// (x, y) -> (y, 2x + 3y) walk, so no table is shared with the library.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

inline bool rc_bit(int t) {
    if (t % 255 == 0) return true;
    std::uint32_t r = 1;
    for (int i = 1; i <= t % 255; ++i) {
        r <<= 1;
        if (r & 0x100) r ^= 0x171; // x^8 + x^6 + x^5 + x^4 + 1
    }
    return r & 1;
}

inline std::uint64_t round_constant(int round) {
    std::uint64_t rc = 0;
    for (int j = 0; j <= 6; ++j)
        if (rc_bit(j + 7 * round)) rc |= std::uint64_t{1} << ((1 << j) - 1);
    return rc;
}

inline std::uint64_t rot(std::uint64_t v, int n) {
    n %= 64;
    return n == 0 ? v : (v << n) | (v >> (64 - n));
}

using Lanes = std::uint64_t[5][5]; // [x][y]

inline void permute(Lanes a) {
    int offsets[5][5] = {};
    for (int x = 1, y = 0, t = 0; t < 24; ++t) {
        offsets[x][y] = ((t + 1) * (t + 2) / 2) % 64;
        int nx = y, ny = (2 * x + 3 * y) % 5;
        x = nx;
        y = ny;
    }
    for (int round = 0; round < 24; ++round) {
        std::uint64_t c[5], d[5];
        for (int x = 0; x < 5; ++x) c[x] = a[x][0] ^ a[x][1] ^ a[x][2] ^ a[x][3] ^ a[x][4];
        for (int x = 0; x < 5; ++x) d[x] = c[(x + 4) % 5] ^ rot(c[(x + 1) % 5], 1);
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) a[x][y] ^= d[x];

        Lanes b = {};
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) b[y][(2 * x + 3 * y) % 5] = rot(a[x][y], offsets[x][y]);

        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) a[x][y] = b[x][y] ^ (~b[(x + 1) % 5][y] & b[(x + 2) % 5][y]);

        a[0][0] ^= round_constant(round);
    }
}

inline std::array<std::uint8_t, 32> keccak256(const std::vector<std::uint8_t>& msg) {
    constexpr std::size_t rate = 136;
    std::vector<std::uint8_t> padded = msg;
    padded.push_back(0x01);
    while (padded.size() % rate != 0) padded.push_back(0x00);
    padded.back() |= 0x80;

    Lanes a = {};
    for (std::size_t off = 0; off < padded.size(); off += rate) {
        for (std::size_t i = 0; i < rate / 8; ++i) {
            std::uint64_t lane = 0;
            for (int k = 7; k >= 0; --k) lane = (lane << 8) | padded[off + 8 * i + k];
            a[i % 5][i / 5] ^= lane;
        }
        permute(a);
    }
    std::array<std::uint8_t, 32> out{};
    for (std::size_t i = 0; i < 32; ++i) out[i] = static_cast<std::uint8_t>(a[(i / 8) % 5][(i / 8) / 5] >> (8 * (i % 8)));
    return out;
}

inline std::array<std::uint8_t, 32> keccak256(const std::string& s) {
    return keccak256(std::vector<std::uint8_t>(s.begin(), s.end()));
}

inline std::string hex(const std::array<std::uint8_t, 32>& d) {
    static const char* digits = "0123456789abcdef";
    std::string out = "0x";
    for (auto b : d) {
        out += digits[b >> 4];
        out += digits[b & 15];
    }
    return out;
}

} // namespace oracle
