#pragma once

#include "ledgersim/consensus/messages.hpp"
#include "ledgersim/consensus/quorum.hpp"
#include "ledgersim/net/network.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ledgersim::net {

enum class Behavior : std::uint8_t { Silent, Equivocate, InvalidProposer };

inline constexpr std::string_view to_string(Behavior b) {
    switch (b) {
    case Behavior::Silent: return "SILENT";
    case Behavior::Equivocate: return "EQUIVOCATE";
    case Behavior::InvalidProposer: return "INVALID_PROPOSER";
    }
    return "?";
}

inline Behavior parse_behavior(std::string_view s) {
    if (s == "SILENT") return Behavior::Silent;
    if (s == "EQUIVOCATE") return Behavior::Equivocate;
    if (s == "INVALID_PROPOSER") return Behavior::InvalidProposer;
    throw std::invalid_argument("unknown Byzantine behavior: " + std::string(s));
}

struct ByzantineSpec {
    Address node;
    Behavior behavior = Behavior::Silent;
};

/// A consensus message plus where it goes; no recipient means every peer.
struct Routed {
    consensus::ConsensusMessage message;
    std::optional<Address> recipient;
};

/// Capabilities a misbehaving validator borrows from its own node.
class ByzantineContext {
  public:
    virtual ~ByzantineContext() = default;
    /// Same height, round, parent and proposer; different transactions and a
    /// correctly recomputed state root.
    virtual Block conflicting_variant(const Block& block) = 0;
    virtual Block build_proposal(std::uint64_t height, std::uint64_t round) = 0;
    virtual SignatureBytes sign(const Hash256& digest) = 0;
    virtual std::vector<Address> peers() const = 0;
};

/// Rewrites the outbound consensus traffic of one faulty validator. Stateful
/// because an equivocator has to keep each half of the network on the block
/// it was shown.
class Adversary {
  public:
    Adversary(ByzantineSpec spec, consensus::ConsensusConfig config, Rng rng)
        : spec_(spec), config_(std::move(config)), rng_(rng) {}

    const ByzantineSpec& spec() const { return spec_; }

    std::vector<Routed> transform(const std::vector<consensus::ConsensusMessage>& outbound, ByzantineContext& ctx) {
        std::vector<Routed> out;
        switch (spec_.behavior) {
        case Behavior::Silent: break;
        case Behavior::Equivocate:
            for (const auto& m : outbound) equivocate(m, ctx, out);
            break;
        case Behavior::InvalidProposer:
            for (const auto& m : outbound) {
                inject_proposal(m, ctx, out);
                out.push_back({m, std::nullopt});
            }
            break;
        }
        return out;
    }

  private:
    struct Split {
        consensus::ConsensusMessage alternative;
        std::set<Address> second_half;
    };

    consensus::ConsensusMessage resign(consensus::ConsensusMessage m, const Hash256& hash, ByzantineContext& ctx) {
        m.block_hash = hash;
        m.signature = ctx.sign(consensus::signing_digest(m));
        return m;
    }

    void equivocate(const consensus::ConsensusMessage& m, ByzantineContext& ctx, std::vector<Routed>& out) {
        using consensus::MessageKind;
        if (m.kind == MessageKind::PrePrepare && m.proposal) {
            auto variant = ctx.conflicting_variant(*m.proposal);
            auto alt_hash = block_hash(variant);
            if (alt_hash == m.block_hash) {
                out.push_back({m, std::nullopt});
                return;
            }
            auto alt = resign(m, alt_hash, ctx);
            alt.proposal = std::move(variant);

            auto peers = ctx.peers();
            std::shuffle(peers.begin(), peers.end(), rng_);
            auto first = (peers.size() + 1) / 2;
            Split split{alt, {}};
            for (std::size_t i = 0; i < peers.size(); ++i) {
                if (i < first) {
                    out.push_back({m, peers[i]});
                } else {
                    out.push_back({alt, peers[i]});
                    split.second_half.insert(peers[i]);
                }
            }
            splits_[{m.height, m.block_hash}] = std::move(split);
            return;
        }
        auto it = splits_.find({m.height, m.block_hash});
        if (it == splits_.end() || m.kind == MessageKind::RoundChange) {
            out.push_back({m, std::nullopt});
            return;
        }
        auto alt_vote = resign(m, it->second.alternative.block_hash, ctx);
        for (const auto& peer : ctx.peers())
            out.push_back({it->second.second_half.contains(peer) ? alt_vote : m, peer});
    }

    void inject_proposal(const consensus::ConsensusMessage& m, ByzantineContext& ctx, std::vector<Routed>& out) {
        if (m.kind == consensus::MessageKind::PrePrepare) return;
        if (config_.proposer_for(m.height, m.round) == spec_.node) return;
        if (!injected_.insert({m.height, m.round}).second) return;

        consensus::ConsensusMessage fake;
        fake.kind = consensus::MessageKind::PrePrepare;
        fake.height = m.height;
        fake.round = m.round;
        fake.sender = spec_.node;
        fake.proposal = ctx.build_proposal(m.height, m.round);
        fake.block_hash = block_hash(*fake.proposal);
        fake.signature = ctx.sign(consensus::signing_digest(fake));
        out.push_back({std::move(fake), std::nullopt});
    }

    ByzantineSpec spec_;
    consensus::ConsensusConfig config_;
    Rng rng_;
    std::map<std::pair<std::uint64_t, Hash256>, Split> splits_;
    std::set<std::pair<std::uint64_t, std::uint64_t>> injected_;
};

/// Honest validators (no spec) pass their traffic through unchanged.
inline std::vector<Routed> byzantine_transform(Adversary* adversary,
                                               const std::vector<consensus::ConsensusMessage>& outbound,
                                               ByzantineContext& ctx) {
    if (adversary) return adversary->transform(outbound, ctx);
    std::vector<Routed> out;
    out.reserve(outbound.size());
    for (const auto& m : outbound) out.push_back({m, std::nullopt});
    return out;
}

} // namespace ledgersim::net
