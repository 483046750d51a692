#pragma once

#include "ledgersim/core/bytes.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ledgersim::consensus {

/// F = floor((N - 1) / 3): the number of Byzantine validators tolerated.
constexpr std::size_t fault_tolerance(std::size_t n) {
    return n == 0 ? 0 : (n - 1) / 3;
}

/// Smallest count strictly greater than two thirds of N.
constexpr std::size_t quorum_size(std::size_t n) {
    return (2 * n) / 3 + 1;
}

struct QuorumRow {
    std::size_t n = 0;
    std::size_t f = 0;
    std::size_t q = 0;
};

inline std::vector<QuorumRow> quorum_table(std::size_t max_n) {
    if (max_n < 1) throw std::invalid_argument("max_n must be at least 1");
    std::vector<QuorumRow> rows;
    for (std::size_t n = 1; n <= max_n; ++n) rows.push_back({n, fault_tolerance(n), quorum_size(n)});
    return rows;
}

struct ConsensusConfig {
    std::vector<Address> validators;
    std::uint64_t base_round_timeout = 20;

    ConsensusConfig() = default;
    ConsensusConfig(std::vector<Address> vals, std::uint64_t timeout)
        : validators(std::move(vals)), base_round_timeout(timeout) {
        if (validators.empty()) throw std::invalid_argument("consensus needs at least one validator");
        auto sorted = validators;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("validator addresses must be distinct");
        if (base_round_timeout == 0) throw std::invalid_argument("round timeout must be positive");
    }

    std::size_t n() const { return validators.size(); }
    std::size_t f() const { return fault_tolerance(n()); }
    std::size_t quorum() const { return quorum_size(n()); }

    std::optional<std::size_t> index_of(const Address& a) const {
        auto it = std::find(validators.begin(), validators.end(), a);
        if (it == validators.end()) return std::nullopt;
        return static_cast<std::size_t>(it - validators.begin());
    }
    bool is_validator(const Address& a) const { return index_of(a).has_value(); }

    /// Round-robin over the genesis order.
    const Address& proposer_for(std::uint64_t height, std::uint64_t round) const {
        return validators[(height + round) % validators.size()];
    }

    /// base * 2^round, with the exponent capped so the product cannot overflow.
    std::uint64_t round_timeout(std::uint64_t round) const {
        return base_round_timeout << std::min<std::uint64_t>(round, 20);
    }
};

} // namespace ledgersim::consensus
