#pragma once

#include "ledgersim/node/chain.hpp"
#include "ledgersim/sim/simulation.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace ledgersim::config {

/// Last 20 bytes of keccak256(deployer || nonce), nonce as u64 big-endian.
inline Address contract_address(const Address& deployer, std::uint64_t nonce) {
    Writer w;
    w.fixed(deployer);
    w.u64(nonce);
    auto h = crypto::keccak256(w.data());
    return Address::from_span(ByteView(h.bytes).subspan(12));
}

struct Deployment {
    Address deployer;
    std::uint64_t nonce = 0;
    std::uint64_t height = 0;
    Hash256 tx_hash;

    Address address() const { return contract_address(deployer, nonce); }
};

/// The successful Deploy on a finalized chain, if any. There can be at most
/// one: later attempts fail with AlreadyDeployed.
inline std::optional<Deployment> find_deployment(const node::Chain& chain) {
    for (std::uint64_t h = 1; h <= chain.height(); ++h) {
        const auto& block = chain.at(h);
        const auto& receipts = chain.receipts_at(h);
        for (std::size_t i = 0; i < block.txs.size(); ++i) {
            const auto& tx = block.txs[i];
            if (std::holds_alternative<payload::Deploy>(tx.payload) && receipts[i].ok())
                return Deployment{tx.sender, tx.nonce, h, receipts[i].tx_hash};
        }
    }
    return std::nullopt;
}

enum class MigrationErrorKind : std::uint8_t { Timeout, AlreadyDeployedByOther };

class MigrationError : public std::runtime_error {
  public:
    MigrationError(MigrationErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    MigrationErrorKind kind() const { return kind_; }

  private:
    MigrationErrorKind kind_;
};

struct MigrationResult {
    Address contract;
    bool submitted = false;
};

/// Idempotent deployment through `via`: returns the existing instance if a
/// Deploy is already final, otherwise submits one and drives the simulation
/// until it is final or `timeout` logical time units pass.
inline MigrationResult migrate_deploy(sim::Simulation& sim, const crypto::KeyPair& deployer, std::size_t via,
                                      net::Time timeout) {
    const auto& chain = sim.node(via).chain();
    auto resolve = [&](const Deployment& d) {
        if (d.deployer != deployer.address)
            throw MigrationError(MigrationErrorKind::AlreadyDeployedByOther,
                                 "contract already deployed by " + d.deployer.hex());
        return d.address();
    };
    if (auto existing = find_deployment(chain)) return {resolve(*existing), false};

    auto nonce = chain.tip_state().next_nonce(deployer.address);
    auto tx = make_transaction(deployer, sim.scheme(), nonce, payload::Deploy{});
    auto hash = tx_hash(tx);
    sim.submit(via, tx);
    auto deadline = sim.now() + timeout;
    bool done = sim.run_while_not([&] { return sim.node(via).chain().receipt(hash).has_value(); }, deadline);
    if (!done) throw MigrationError(MigrationErrorKind::Timeout, "deployment not finalized before the deadline");

    auto found = find_deployment(sim.node(via).chain());
    if (!found) throw std::logic_error("deploy receipt present but no successful deployment on chain");
    return {resolve(*found), true};
}

} // namespace ledgersim::config
