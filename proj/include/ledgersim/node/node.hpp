#pragma once

#include "ledgersim/consensus/ibft.hpp"
#include "ledgersim/consensus/validate.hpp"
#include "ledgersim/net/byzantine.hpp"
#include "ledgersim/net/network.hpp"
#include "ledgersim/node/chain.hpp"
#include "ledgersim/node/mempool.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

namespace ledgersim::node {

enum class SubmitError : std::uint8_t { InvalidSignature, DuplicateTx, StaleNonce };

inline constexpr std::string_view to_string(SubmitError e) {
    switch (e) {
    case SubmitError::InvalidSignature: return "InvalidSignature";
    case SubmitError::DuplicateTx: return "DuplicateTx";
    case SubmitError::StaleNonce: return "StaleNonce";
    }
    return "?";
}

struct Envelope {
    std::optional<Address> to; // nullopt: every peer
    net::NetMessage message;
};

struct ScheduledTimer {
    net::TimerFire fire;
    net::Time at = 0;
};

/// Side effects of one node step, applied by the simulation driver.
struct NodeOutput {
    std::vector<Envelope> sends;
    std::vector<ScheduledTimer> timers;
    std::vector<std::uint64_t> finalized;
};

struct NodeSetup {
    crypto::KeyPair key;
    consensus::ConsensusConfig consensus;
    std::uint64_t block_gas_limit = kDefaultBlockGasLimit;
    std::shared_ptr<const crypto::SignatureScheme> scheme;
    Block genesis;
    vm::LedgerState genesis_state;
};

/// One validator: mempool, consensus machine, block execution and the
/// finalized chain. Single-owner; driven by the simulation loop.
class Node final : private consensus::ProposalHost, private net::ByzantineContext {
  public:
    static constexpr std::size_t kMaxBufferedFuture = 20000;
    static constexpr std::size_t kMaxSyncBlocks = 64;

    explicit Node(NodeSetup setup)
        : key_(setup.key), gas_limit_(setup.block_gas_limit), scheme_(std::move(setup.scheme)),
          machine_(setup.consensus, setup.key.address), chain_(std::move(setup.genesis), std::move(setup.genesis_state)) {
        if (!scheme_) throw std::invalid_argument("node needs a signature scheme");
    }

    const Address& address() const { return key_.address; }
    const Chain& chain() const { return chain_; }
    const Mempool& mempool() const { return mempool_; }
    const consensus::IbftMachine& machine() const { return machine_; }
    bool faulty() const { return adversary_.has_value(); }
    std::optional<net::Behavior> behavior() const {
        if (!adversary_) return std::nullopt;
        return adversary_->spec().behavior;
    }
    std::uint64_t rejected_messages() const { return rejected_; }

    void set_consensus_trace(std::ostream* out) { consensus_trace_ = out; }

    void make_byzantine(net::Behavior behavior, net::Rng rng) {
        adversary_.emplace(net::ByzantineSpec{key_.address, behavior}, machine_.config(), rng);
    }

    NodeOutput start(net::Time now) {
        NodeOutput out;
        feed(consensus::StartHeight{chain_.height() + 1}, now, out);
        return out;
    }

    /// Admits a client transaction and gossips it to every peer.
    std::optional<SubmitError> submit(const Transaction& tx, NodeOutput& out) {
        auto err = admit(tx);
        if (!err) out.sends.push_back({std::nullopt, net::TxGossip{tx}});
        return err;
    }

    NodeOutput on_deliver(const Address& from, const net::NetMessage& msg, net::Time now) {
        NodeOutput out;
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, consensus::ConsensusMessage>) on_consensus(from, m, now, out);
                else if constexpr (std::is_same_v<T, net::TxGossip>) admit(m.tx);
                else on_sync(m, now, out);
            },
            msg);
        return out;
    }

    NodeOutput on_timer(const net::TimerFire& fire, net::Time now) {
        NodeOutput out;
        if (fire.kind == net::TimerKind::Advance) {
            advance(now, out);
        } else if (fire.height == machine_.height()) {
            feed(consensus::TimerExpiry{fire.height, fire.generation}, now, out);
        }
        return out;
    }

    /// Local read against the latest finalized state.
    Amount get_balance(const Address& caller) const { return vm::get_balance(chain_.tip_state().contract, caller); }

    std::vector<LoggedEvent> poll_events(std::uint64_t since_cursor) const { return chain_.events_since(since_cursor); }

  private:
    std::optional<SubmitError> admit(const Transaction& tx) {
        if (!scheme_->verify_from(tx.sender, tx_hash(tx), tx.signature)) return SubmitError::InvalidSignature;
        if (tx.nonce < chain_.tip_state().next_nonce(tx.sender)) return SubmitError::StaleNonce;
        if (!mempool_.add(tx)) return SubmitError::DuplicateTx;
        return std::nullopt;
    }

    void on_consensus(const Address& from, const consensus::ConsensusMessage& m, net::Time now, NodeOutput& out) {
        if (!scheme_->verify_from(m.sender, consensus::signing_digest(m), m.signature)) {
            ++rejected_;
            return;
        }
        if (m.height <= chain_.height()) {
            if (m.kind == consensus::MessageKind::RoundChange) send_sync(from, m.height, out);
            return;
        }
        if (!machine_.started() || m.height > machine_.height()) {
            if (buffered_ < kMaxBufferedFuture) {
                future_[m.height].push_back(m);
                ++buffered_;
            }
            return;
        }
        feed(m, now, out);
    }

    void send_sync(const Address& to, std::uint64_t from_height, NodeOutput& out) {
        net::BlockSync sync;
        for (auto h = from_height; h <= chain_.height() && sync.blocks.size() < kMaxSyncBlocks; ++h)
            sync.blocks.push_back(chain_.at(h));
        out.sends.push_back({to, std::move(sync)});
    }

    void on_sync(const net::BlockSync& sync, net::Time now, NodeOutput& out) {
        bool appended = false;
        for (const auto& block : sync.blocks) {
            if (block.height != chain_.height() + 1) continue;
            if (!consensus::validate_finalized_block(block, chain_.tip(), machine_.config(), *scheme_)) break;
            auto ex = execute_block(chain_.tip_state(), block, *scheme_, gas_limit_);
            if (!ex.ok()) break;
            commit(block, std::move(ex), out);
            appended = true;
        }
        if (appended) out.timers.push_back({net::TimerFire{net::TimerKind::Advance, chain_.height() + 1, 0}, now + 1});
    }

    void feed(const consensus::Input& input, net::Time now, NodeOutput& out) {
        auto result = machine_.step(input, now, *this);
        if (consensus_trace_) {
            nlohmann::json j{{"node", key_.address.hex()},
                             {"logicalTime", now},
                             {"input", consensus::input_kind(input)},
                             {"height", machine_.height()},
                             {"round", machine_.round()},
                             {"phaseBefore", consensus::to_string(result.phase_before)},
                             {"phaseAfter", consensus::to_string(result.phase_after)},
                             {"outbound", result.outbound.size()}};
            *consensus_trace_ << j.dump() << '\n';
        }
        auto adversary = adversary_ ? &*adversary_ : nullptr;
        for (auto& routed : net::byzantine_transform(adversary, result.outbound, *this))
            out.sends.push_back({routed.recipient, std::move(routed.message)});
        if (result.timer)
            out.timers.push_back({net::TimerFire{net::TimerKind::Round, result.timer->height, result.timer->generation},
                                  result.timer->deadline});
        if (result.finalized) {
            auto block = std::move(*result.finalized);
            auto it = executions_.find(block_hash(block));
            if (it == executions_.end()) throw std::logic_error("finalized block was never executed locally");
            auto ex = std::move(it->second);
            commit(block, std::move(ex), out);
            out.timers.push_back({net::TimerFire{net::TimerKind::Advance, chain_.height() + 1, 0}, now + 1});
        }
    }

    void commit(const Block& block, Execution ex, NodeOutput& out) {
        chain_.append(block, std::move(ex.state), std::move(ex.receipts));
        mempool_.prune(chain_.tip_state());
        executions_.clear();
        out.finalized.push_back(block.height);
    }

    void advance(net::Time now, NodeOutput& out) {
        if (machine_.started() && machine_.height() > chain_.height()) return;
        auto next = chain_.height() + 1;
        feed(consensus::StartHeight{next}, now, out);
        for (auto it = future_.begin(); it != future_.end() && it->first <= next;) {
            auto msgs = std::move(it->second);
            buffered_ -= msgs.size();
            it = future_.erase(it);
            if (msgs.empty() || msgs.front().height != next) continue;
            for (const auto& m : msgs)
                if (machine_.height() == next && chain_.height() < next) feed(m, now, out);
        }
    }

    // ProposalHost

    Block build_proposal(std::uint64_t height, std::uint64_t round) override {
        Block b;
        b.height = height;
        b.round = round;
        b.parent_hash = chain_.tip_hash();
        b.proposer = key_.address;
        b.txs = mempool_.select(chain_.tip_state(), gas_limit_);
        seal_root(b);
        return b;
    }

    bool validate_proposal(const Block& block) override {
        if (block.height != chain_.height() + 1 || block.parent_hash != chain_.tip_hash()) return false;
        auto hash = block_hash(block);
        if (executions_.contains(hash)) return true;
        auto ex = execute_block(chain_.tip_state(), block, *scheme_, gas_limit_);
        if (!ex.ok()) return false;
        executions_.emplace(hash, std::move(ex));
        return true;
    }

    SignatureBytes sign(const Hash256& digest) override { return scheme_->sign(key_, digest); }

    // ByzantineContext

    Block conflicting_variant(const Block& block) override {
        Block alt = block;
        // Reverse the order of the sender groups; per-sender nonce order must
        // survive or honest validators would reject the block outright.
        std::vector<Address> order;
        std::map<Address, std::vector<Transaction>> groups;
        for (const auto& tx : block.txs) {
            if (!groups.contains(tx.sender)) order.push_back(tx.sender);
            groups[tx.sender].push_back(tx);
        }
        if (order.size() > 1) {
            alt.txs.clear();
            for (auto it = order.rbegin(); it != order.rend(); ++it)
                alt.txs.insert(alt.txs.end(), groups[*it].begin(), groups[*it].end());
        } else if (!alt.txs.empty()) {
            alt.txs.pop_back();
        } else {
            auto nonce = chain_.tip_state().next_nonce(key_.address);
            alt.txs.push_back(make_transaction(key_, *scheme_, nonce, payload::AddRecipient{key_.address}));
        }
        seal_root(alt);
        if (block_hash(alt) == block_hash(block) && !alt.txs.empty()) {
            alt.txs.pop_back();
            seal_root(alt);
        }
        return alt;
    }

    std::vector<Address> peers() const override {
        std::vector<Address> out;
        for (const auto& v : machine_.config().validators)
            if (v != key_.address) out.push_back(v);
        return out;
    }

    void seal_root(Block& b) {
        auto ex = execute_block(chain_.tip_state(), b, *scheme_, gas_limit_, /*check_root=*/false);
        if (!ex.ok()) throw std::logic_error("proposal assembled from invalid transactions");
        b.state_root = vm::state_root(ex.state.contract);
        executions_.insert_or_assign(block_hash(b), std::move(ex));
    }

    crypto::KeyPair key_;
    std::uint64_t gas_limit_;
    std::shared_ptr<const crypto::SignatureScheme> scheme_;
    consensus::IbftMachine machine_;
    Chain chain_;
    Mempool mempool_;
    std::optional<net::Adversary> adversary_;
    std::map<Hash256, Execution> executions_;
    std::map<std::uint64_t, std::vector<consensus::ConsensusMessage>> future_;
    std::size_t buffered_ = 0;
    std::uint64_t rejected_ = 0;
    std::ostream* consensus_trace_ = nullptr;
};

} // namespace ledgersim::node
