#pragma once

#include "ledgersim/consensus/messages.hpp"
#include "ledgersim/consensus/quorum.hpp"

#include <set>
#include <string>

namespace ledgersim::consensus {

/// Empty string means the block is acceptable as finalized.
inline std::string finalized_block_problem(const Block& block, const Block& parent, const ConsensusConfig& config,
                                           const crypto::SignatureScheme& scheme) {
    if (block.height != parent.height + 1) return "height does not follow parent";
    if (block.parent_hash != block_hash(parent)) return "parent hash mismatch";
    if (block.commit_seals.size() < config.quorum()) return "commit seals below quorum";

    auto digest = seal_digest(block);
    std::set<Address> signers;
    for (const auto& seal : block.commit_seals) {
        if (!config.is_validator(seal.signer)) return "seal signer is not a validator";
        if (!signers.insert(seal.signer).second) return "duplicate seal signer";
        if (!scheme.verify_from(seal.signer, digest, seal.signature)) return "seal signature does not verify";
    }
    return {};
}

inline bool validate_finalized_block(const Block& block, const Block& parent, const ConsensusConfig& config,
                                     const crypto::SignatureScheme& scheme) {
    return finalized_block_problem(block, parent, config, scheme).empty();
}

} // namespace ledgersim::consensus
