#pragma once

#include "ledgersim/node/chain.hpp"

#include <optional>
#include <string>

namespace ledgersim::node {

struct AuditFinding {
    std::uint64_t height = 0;
    std::string problem;
};

/// Re-derives the contract invariants from a finalized chain:
///  - the organization balance equals successful AddFunds minus successful
///    AllowanceSent at every height, from receipts and from the event log;
///  - no FAILED receipt coincides with a state root change;
///  - stored snapshots match a sequential re-execution.
inline std::optional<AuditFinding> audit_chain(const Chain& chain) {
    vm::LedgerState state = chain.state_at(0);
    uint128 credited = 0;
    uint128 debited = 0;
    uint128 event_credit = 0;
    uint128 event_debit = 0;

    for (std::uint64_t h = 1; h <= chain.height(); ++h) {
        const auto& block = chain.at(h);
        const auto& receipts = chain.receipts_at(h);
        for (std::size_t i = 0; i < block.txs.size(); ++i) {
            auto before = vm::state_root(state.contract);
            auto receipt = vm::apply_in_place(state, block.txs[i]);
            if (receipt != receipts[i]) return AuditFinding{h, "stored receipt differs from re-execution"};
            if (!receipt.ok()) {
                if (vm::state_root(state.contract) != before)
                    return AuditFinding{h, "failed transaction changed the state root"};
                continue;
            }
            if (const auto* f = std::get_if<payload::AddFunds>(&block.txs[i].payload)) credited += f->amt.value();
            if (const auto* s = std::get_if<payload::SendAllowance>(&block.txs[i].payload)) debited += s->amount.value();
            for (const auto& ev : receipt.events) {
                if (const auto* f = std::get_if<event::FundsAdded>(&ev)) event_credit += f->value.value();
                if (const auto* a = std::get_if<event::AllowanceSent>(&ev)) event_debit += a->amount.value();
            }
        }
        if (state != chain.state_at(h)) return AuditFinding{h, "stored state differs from re-execution"};
        if (vm::state_root(state.contract) != block.state_root) return AuditFinding{h, "state root mismatch"};

        const auto& contract = state.contract;
        if (contract.deployed) {
            auto balance = contract.balance_of(contract.organization).value();
            if (debited > credited || balance != credited - debited)
                return AuditFinding{h, "organization balance violates conservation"};
            if (event_debit > event_credit || balance != event_credit - event_debit)
                return AuditFinding{h, "event log does not reproduce the organization balance"};
        }
    }
    return std::nullopt;
}

} // namespace ledgersim::node
