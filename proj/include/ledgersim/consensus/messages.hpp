#pragma once

#include "ledgersim/core/model.hpp"

#include <optional>
#include <string_view>

namespace ledgersim::consensus {

enum class MessageKind : std::uint8_t { PrePrepare = 0, Prepare = 1, Commit = 2, RoundChange = 3 };

inline constexpr std::string_view to_string(MessageKind k) {
    switch (k) {
    case MessageKind::PrePrepare: return "PRE_PREPARE";
    case MessageKind::Prepare: return "PREPARE";
    case MessageKind::Commit: return "COMMIT";
    case MessageKind::RoundChange: return "ROUND_CHANGE";
    }
    return "?";
}

/// For COMMIT, `round` is the round the committed block was first proposed
/// in, so the message signature doubles as the block's commit seal. For
/// ROUND_CHANGE, `block_hash` carries the sender's locked hash (zero if none).
struct ConsensusMessage {
    MessageKind kind = MessageKind::PrePrepare;
    std::uint64_t height = 0;
    std::uint64_t round = 0;
    Hash256 block_hash;
    Address sender;
    SignatureBytes signature;
    std::optional<Block> proposal;

    friend bool operator==(const ConsensusMessage&, const ConsensusMessage&) = default;
};

inline Hash256 signing_digest(MessageKind kind, std::uint64_t height, std::uint64_t round, const Hash256& hash) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(kind));
    w.u64(height);
    w.u64(round);
    w.fixed(hash);
    return crypto::keccak256(w.data());
}

inline Hash256 signing_digest(const ConsensusMessage& m) {
    return signing_digest(m.kind, m.height, m.round, m.block_hash);
}

/// Digest a commit seal signs for a given block.
inline Hash256 seal_digest(const Block& b) {
    return signing_digest(MessageKind::Commit, b.height, b.round, block_hash(b));
}

} // namespace ledgersim::consensus
