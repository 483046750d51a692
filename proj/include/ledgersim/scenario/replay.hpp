#pragma once

#include "ledgersim/config/genesis.hpp"
#include "ledgersim/consensus/validate.hpp"
#include "ledgersim/io/json.hpp"
#include "ledgersim/node/chain.hpp"

#include <istream>
#include <memory>
#include <optional>
#include <string>

namespace ledgersim::scenario {

struct ReplayVerdict {
    bool ok = true;
    /// First divergent height (line number for lines that do not decode).
    std::optional<std::uint64_t> height;
    std::string reason;
    std::uint64_t blocks = 0;
};

struct ReplayResult {
    ReplayVerdict verdict;
    /// Everything up to (excluding) the first divergence.
    node::Chain chain;
};

/// Re-executes a chain dump from genesis: parent links, commit seals, every
/// transaction and every state root.
inline ReplayResult replay_chain(std::istream& dump, const config::GenesisConfig& genesis) {
    auto scheme = std::make_shared<crypto::KeyedHashScheme>();
    for (const auto& k : config::validator_keys(genesis)) scheme->register_key(k);
    for (const auto& s : genesis.key_provider.private_keys) scheme->register_key(crypto::KeyPair::from_seed(s));
    auto consensus = config::consensus_config(genesis);

    auto expected_genesis = sim::make_genesis();
    ReplayResult out{{}, node::Chain(expected_genesis, vm::LedgerState{})};
    auto corrupt = [&](std::uint64_t h, std::string why) {
        out.verdict.ok = false;
        out.verdict.height = h;
        out.verdict.reason = std::move(why);
        return std::move(out);
    };

    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(dump, line)) {
        auto expected_height = lineno++;
        if (line.empty()) return corrupt(expected_height, "empty line");
        Block block;
        try {
            auto j = jsonio::json::parse(line);
            block = jsonio::block_from_json(j);
            if (j.contains("hash") && j.at("hash") != block_hash(block).hex())
                return corrupt(block.height, "stored block hash does not match contents");
            const auto& txs = j.at("txs");
            for (std::size_t i = 0; i < block.txs.size(); ++i)
                if (txs[i].contains("hash") && txs[i].at("hash") != tx_hash(block.txs[i]).hex())
                    return corrupt(block.height, "stored hash of tx " + std::to_string(i) + " does not match contents");
        } catch (const std::exception& e) {
            return corrupt(expected_height, std::string("undecodable block: ") + e.what());
        }

        if (block.height != expected_height) return corrupt(expected_height, "unexpected height");
        if (expected_height == 0) {
            if (block != expected_genesis) return corrupt(0, "genesis block differs from the configured genesis");
            out.verdict.blocks = 1;
            continue;
        }
        const auto& chain = out.chain;
        auto problem = consensus::finalized_block_problem(block, chain.tip(), consensus, *scheme);
        if (!problem.empty()) return corrupt(block.height, problem);
        auto ex = node::execute_block(chain.tip_state(), block, *scheme, genesis.block_gas_limit);
        if (!ex.ok()) {
            auto why = std::string(node::to_string(*ex.error));
            if (*ex.error != node::ExecError::StateRootMismatch) why += " at tx " + std::to_string(ex.tx_index.value_or(0));
            return corrupt(block.height, why);
        }
        out.chain.append(std::move(block), std::move(ex.state), std::move(ex.receipts));
        ++out.verdict.blocks;
    }
    if (lineno == 0) return corrupt(0, "empty dump");
    return out;
}

} // namespace ledgersim::scenario
