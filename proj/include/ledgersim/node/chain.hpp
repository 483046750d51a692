#pragma once

#include "ledgersim/core/model.hpp"
#include "ledgersim/crypto/signature.hpp"
#include "ledgersim/vm/contract.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ledgersim::node {

enum class ExecError : std::uint8_t { InvalidSignature, BadNonce, BlockGasExceeded, StateRootMismatch };

inline constexpr std::string_view to_string(ExecError e) {
    switch (e) {
    case ExecError::InvalidSignature: return "InvalidSignature";
    case ExecError::BadNonce: return "BadNonce";
    case ExecError::BlockGasExceeded: return "BlockGasExceeded";
    case ExecError::StateRootMismatch: return "StateRootMismatch";
    }
    return "?";
}

struct Execution {
    std::optional<ExecError> error;
    /// Index of the offending transaction, when the error is per-transaction.
    std::optional<std::size_t> tx_index;
    vm::LedgerState state;
    std::vector<Receipt> receipts;

    bool ok() const { return !error; }
};

/// Runs the block's transactions on top of `parent`. Contract-level failures
/// become FAILED receipts; bad signatures, stale or future nonces and gas
/// overruns make the whole block invalid, as does a state root that differs
/// from the recomputed one (unless `check_root` is off, which is how
/// proposers compute the root in the first place).
inline Execution execute_block(const vm::LedgerState& parent, const Block& block,
                               const crypto::SignatureScheme& scheme, std::uint64_t block_gas_limit,
                               bool check_root = true) {
    Execution ex;
    ex.state = parent;
    std::uint64_t gas = 0;
    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        const auto& tx = block.txs[i];
        gas += tx.gas_limit;
        if (tx.gas_limit > block_gas_limit || gas > block_gas_limit) {
            ex.error = ExecError::BlockGasExceeded;
            ex.tx_index = i;
            return ex;
        }
        if (!scheme.verify_from(tx.sender, tx_hash(tx), tx.signature)) {
            ex.error = ExecError::InvalidSignature;
            ex.tx_index = i;
            return ex;
        }
        if (tx.nonce != ex.state.next_nonce(tx.sender)) {
            ex.error = ExecError::BadNonce;
            ex.tx_index = i;
            return ex;
        }
        ex.receipts.push_back(vm::apply_in_place(ex.state, tx));
    }
    if (check_root && vm::state_root(ex.state.contract) != block.state_root) ex.error = ExecError::StateRootMismatch;
    return ex;
}

struct LoggedEvent {
    std::uint64_t cursor = 0;
    std::uint64_t height = 0;
    std::uint32_t tx_index = 0;
    std::uint32_t log_index = 0;
    Hash256 tx_hash;
    Event event;

    friend bool operator==(const LoggedEvent&, const LoggedEvent&) = default;
};

/// Append-only finalized chain with per-height state snapshots, a receipt
/// index and the ordered event log. Cursors are 1-based event ordinals.
class Chain {
  public:
    Chain(Block genesis, vm::LedgerState genesis_state) {
        if (genesis.height != 0 || !genesis.parent_hash.is_zero())
            throw std::invalid_argument("genesis must have height 0 and a zero parent hash");
        hashes_.push_back(block_hash(genesis));
        blocks_.push_back(std::move(genesis));
        states_.push_back(std::move(genesis_state));
        receipts_by_height_.emplace_back();
    }

    void append(Block block, vm::LedgerState state, std::vector<Receipt> receipts) {
        if (block.height != height() + 1) throw std::logic_error("block height does not extend the chain");
        if (block.parent_hash != hashes_.back()) throw std::logic_error("block parent hash does not match tip");
        if (receipts.size() != block.txs.size()) throw std::logic_error("receipt count does not match transactions");

        for (std::uint32_t i = 0; i < receipts.size(); ++i) {
            const auto& rc = receipts[i];
            for (std::uint32_t j = 0; j < rc.events.size(); ++j)
                events_.push_back(LoggedEvent{events_.size() + 1, block.height, i, j, rc.tx_hash, rc.events[j]});
            receipt_index_[rc.tx_hash] = {block.height, i};
        }
        hashes_.push_back(block_hash(block));
        blocks_.push_back(std::move(block));
        states_.push_back(std::move(state));
        receipts_by_height_.push_back(std::move(receipts));
    }

    std::uint64_t height() const { return blocks_.size() - 1; }
    const Block& tip() const { return blocks_.back(); }
    const Hash256& tip_hash() const { return hashes_.back(); }
    const Block& at(std::uint64_t h) const { return blocks_.at(h); }
    const Hash256& hash_at(std::uint64_t h) const { return hashes_.at(h); }
    const vm::LedgerState& state_at(std::uint64_t h) const { return states_.at(h); }
    const vm::LedgerState& tip_state() const { return states_.back(); }
    const std::vector<Receipt>& receipts_at(std::uint64_t h) const { return receipts_by_height_.at(h); }
    const std::vector<Block>& blocks() const { return blocks_; }

    std::optional<Receipt> receipt(const Hash256& tx) const {
        auto it = receipt_index_.find(tx);
        if (it == receipt_index_.end()) return std::nullopt;
        return receipts_by_height_[it->second.first][it->second.second];
    }

    std::optional<std::uint64_t> inclusion_height(const Hash256& tx) const {
        auto it = receipt_index_.find(tx);
        if (it == receipt_index_.end()) return std::nullopt;
        return it->second.first;
    }

    /// Events strictly after `cursor`, in total order.
    std::vector<LoggedEvent> events_since(std::uint64_t cursor) const {
        if (cursor >= events_.size()) return {};
        return std::vector<LoggedEvent>(events_.begin() + static_cast<std::ptrdiff_t>(cursor), events_.end());
    }

    std::uint64_t event_head() const { return events_.size(); }

  private:
    std::vector<Block> blocks_;
    std::vector<Hash256> hashes_;
    std::vector<vm::LedgerState> states_;
    std::vector<std::vector<Receipt>> receipts_by_height_;
    std::map<Hash256, std::pair<std::uint64_t, std::uint32_t>> receipt_index_;
    std::vector<LoggedEvent> events_;
};

} // namespace ledgersim::node
