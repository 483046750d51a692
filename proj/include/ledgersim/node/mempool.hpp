#pragma once

#include "ledgersim/core/model.hpp"
#include "ledgersim/vm/contract.hpp"

#include <deque>
#include <map>
#include <set>
#include <vector>

namespace ledgersim::node {

/// FIFO pool of transactions waiting for inclusion. `seen` remembers every
/// hash ever admitted so resubmissions are rejected even after inclusion.
class Mempool {
  public:
    /// False if the hash was already seen.
    bool add(const Transaction& tx) {
        auto hash = tx_hash(tx);
        if (!seen_.insert(hash).second) return false;
        pending_.push_back({hash, tx});
        return true;
    }

    bool contains(const Hash256& hash) const { return seen_.contains(hash); }
    std::size_t size() const { return pending_.size(); }
    bool empty() const { return pending_.empty(); }

    /// Arrival order, skipping transactions whose nonce is not next for their
    /// sender; stops at the first one that would push the block past the gas
    /// limit.
    std::vector<Transaction> select(const vm::LedgerState& base, std::uint64_t block_gas_limit) const {
        std::vector<Transaction> picked;
        std::map<Address, std::uint64_t> nonces;
        std::vector<bool> taken(pending_.size(), false);
        std::uint64_t gas = 0;
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < pending_.size(); ++i) {
                if (taken[i]) continue;
                const auto& tx = pending_[i].tx;
                auto [it, fresh] = nonces.try_emplace(tx.sender, base.next_nonce(tx.sender));
                if (tx.nonce != it->second) continue;
                if (gas + tx.gas_limit > block_gas_limit) return picked;
                gas += tx.gas_limit;
                ++it->second;
                taken[i] = true;
                picked.push_back(tx);
                progress = true;
            }
        }
        return picked;
    }

    /// Drops included transactions and any whose nonce is already used.
    void prune(const vm::LedgerState& state) {
        std::erase_if(pending_, [&](const Entry& e) { return e.tx.nonce < state.next_nonce(e.tx.sender); });
    }

  private:
    struct Entry {
        Hash256 hash;
        Transaction tx;
    };

    std::deque<Entry> pending_;
    std::set<Hash256> seen_;
};

} // namespace ledgersim::node
