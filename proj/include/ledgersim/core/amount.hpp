#pragma once

#include <algorithm>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ledgersim {

using uint128 = unsigned __int128;

/// Unsigned currency amount in [0, 2^128). Arithmetic is checked: results
/// outside the domain are reported, never wrapped.
class Amount {
  public:
    constexpr Amount() = default;
    constexpr explicit Amount(uint128 v) : value_(v) {}

    constexpr uint128 value() const { return value_; }

    static constexpr Amount max() { return Amount(~uint128{0}); }

    constexpr std::optional<Amount> checked_add(Amount rhs) const {
        uint128 sum = value_ + rhs.value_;
        if (sum < value_) return std::nullopt;
        return Amount(sum);
    }

    constexpr std::optional<Amount> checked_sub(Amount rhs) const {
        if (rhs.value_ > value_) return std::nullopt;
        return Amount(value_ - rhs.value_);
    }

    std::string to_string() const {
        if (value_ == 0) return "0";
        std::string out;
        for (uint128 v = value_; v != 0; v /= 10) out += static_cast<char>('0' + static_cast<int>(v % 10));
        std::reverse(out.begin(), out.end());
        return out;
    }

    /// Decimal digits only; throws std::invalid_argument on anything else or
    /// on values that do not fit in 128 bits.
    static Amount parse(std::string_view text) {
        if (text.empty()) throw std::invalid_argument("empty amount");
        uint128 v = 0;
        for (char c : text) {
            if (c < '0' || c > '9') throw std::invalid_argument("amount must be decimal digits");
            auto digit = static_cast<unsigned>(c - '0');
            if (v > (~uint128{0} - digit) / 10) throw std::invalid_argument("amount exceeds 128 bits");
            v = v * 10 + digit;
        }
        return Amount(v);
    }

    friend constexpr auto operator<=>(const Amount&, const Amount&) = default;
    friend constexpr bool operator==(const Amount&, const Amount&) = default;

  private:
    uint128 value_ = 0;
};

} // namespace ledgersim
