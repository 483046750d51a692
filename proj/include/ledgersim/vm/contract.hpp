#pragma once

#include "ledgersim/core/model.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ledgersim::vm {

/// Storage of the distribution contract. Maps hold only non-default
/// entries: an absent key reads as false / no account / zero.
struct ContractState {
    Address organization;
    std::map<Address, bool> recipients;
    std::map<Address, Hash256> bank_accounts;
    std::map<Address, Amount> balances;
    bool deployed = false;

    bool is_recipient(const Address& a) const { return recipients.contains(a); }

    Amount balance_of(const Address& a) const {
        auto it = balances.find(a);
        return it == balances.end() ? Amount{} : it->second;
    }

    friend bool operator==(const ContractState&, const ContractState&) = default;
};

/// Contract storage plus per-sender nonces. Nonces are consumed by every
/// executed transaction, failed or not, so they stay out of the state root.
struct LedgerState {
    ContractState contract;
    std::map<Address, std::uint64_t> nonces;

    std::uint64_t next_nonce(const Address& a) const {
        auto it = nonces.find(a);
        return it == nonces.end() ? 0 : it->second;
    }

    friend bool operator==(const LedgerState&, const LedgerState&) = default;
};

inline void encode(Writer& w, const ContractState& s) {
    w.fixed(s.organization);
    w.length(s.recipients.size());
    for (const auto& [addr, active] : s.recipients) {
        w.fixed(addr);
        w.boolean(active);
    }
    w.length(s.bank_accounts.size());
    for (const auto& [addr, hash] : s.bank_accounts) {
        w.fixed(addr);
        w.fixed(hash);
    }
    w.length(s.balances.size());
    for (const auto& [addr, amount] : s.balances) {
        w.fixed(addr);
        w.amount(amount);
    }
    w.boolean(s.deployed);
}

inline void read(Reader& r, ContractState& s) {
    s.organization = r.fixed<Address>();
    for (auto n = r.length(); n > 0; --n) {
        auto addr = r.fixed<Address>();
        s.recipients[addr] = r.boolean();
    }
    for (auto n = r.length(); n > 0; --n) {
        auto addr = r.fixed<Address>();
        s.bank_accounts[addr] = r.fixed<Hash256>();
    }
    for (auto n = r.length(); n > 0; --n) {
        auto addr = r.fixed<Address>();
        s.balances[addr] = r.amount();
    }
    s.deployed = r.boolean();
}

inline Hash256 state_root(const ContractState& s) {
    Writer w;
    encode(w, s);
    return crypto::keccak256(w.data());
}

/// Outcome of one contract call before it is wrapped in a receipt.
struct Effect {
    std::optional<TxError> error;
    std::vector<Event> events;

    bool ok() const { return !error; }
    static Effect fail(TxError e) { return Effect{e, {}}; }
};

// Each operation checks its guards in the order the contract states them and
// only touches `s` once every guard has passed.

inline Effect deploy(ContractState& s, const Address& sender) {
    if (s.deployed) return Effect::fail(TxError::AlreadyDeployed);
    s = ContractState{};
    s.organization = sender;
    s.deployed = true;
    return {};
}

inline Effect add_recipient(ContractState& s, const Address& sender, const Address& recipient) {
    if (!s.deployed) return Effect::fail(TxError::NotDeployed);
    if (sender != s.organization) return Effect::fail(TxError::Unauthorized);
    s.recipients[recipient] = true;
    return {};
}

inline Effect remove_recipient(ContractState& s, const Address& sender, const Address& recipient) {
    if (!s.deployed) return Effect::fail(TxError::NotDeployed);
    if (sender != s.organization) return Effect::fail(TxError::Unauthorized);
    s.recipients.erase(recipient);
    return {};
}

inline Effect register_bank_account(ContractState& s, const Address& sender, const Address& recipient,
                                    std::string_view account) {
    if (!s.deployed) return Effect::fail(TxError::NotDeployed);
    if (sender != s.organization) return Effect::fail(TxError::Unauthorized);
    if (!s.is_recipient(recipient)) return Effect::fail(TxError::UnknownRecipient);
    if (account.empty()) return Effect::fail(TxError::EmptyAccountString);
    auto hash = crypto::keccak256(account);
    s.bank_accounts[recipient] = hash;
    return Effect{std::nullopt, {event::BankAccountRegistered{recipient, hash}}};
}

/// The event carries the amount actually credited.
inline Effect add_funds(ContractState& s, const Address& sender, Amount amt) {
    if (!s.deployed) return Effect::fail(TxError::NotDeployed);
    if (sender != s.organization) return Effect::fail(TxError::Unauthorized);
    auto next = s.balance_of(s.organization).checked_add(amt);
    if (!next) return Effect::fail(TxError::Overflow);
    if (*next == Amount{})
        s.balances.erase(s.organization);
    else
        s.balances[s.organization] = *next;
    return Effect{std::nullopt, {event::FundsAdded{amt}}};
}

/// Debits the organization only; the payout itself happens off-ledger and is
/// signalled by AllowanceSent.
inline Effect send_allowance(ContractState& s, const Address& sender, const Address& recipient, Amount amount) {
    if (!s.deployed) return Effect::fail(TxError::NotDeployed);
    if (sender != s.organization) return Effect::fail(TxError::Unauthorized);
    if (!s.is_recipient(recipient)) return Effect::fail(TxError::UnknownRecipient);
    auto next = s.balance_of(s.organization).checked_sub(amount);
    if (!next) return Effect::fail(TxError::InsufficientFunds);
    if (*next == Amount{})
        s.balances.erase(s.organization);
    else
        s.balances[s.organization] = *next;
    return Effect{std::nullopt, {event::AllowanceSent{recipient, amount}}};
}

class NotDeployedError : public std::logic_error {
  public:
    NotDeployedError() : std::logic_error("contract is not deployed") {}
};

/// Local read; never goes through consensus.
inline Amount get_balance(const ContractState& s, const Address& caller) {
    if (!s.deployed) throw NotDeployedError();
    return s.balance_of(caller);
}

inline Effect dispatch(ContractState& s, const Address& sender, const TxPayload& p) {
    return std::visit(
        [&](const auto& v) -> Effect {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, payload::Deploy>) return deploy(s, sender);
            else if constexpr (std::is_same_v<T, payload::AddRecipient>) return add_recipient(s, sender, v.recipient);
            else if constexpr (std::is_same_v<T, payload::RemoveRecipient>)
                return remove_recipient(s, sender, v.recipient);
            else if constexpr (std::is_same_v<T, payload::RegisterBankAccount>)
                return register_bank_account(s, sender, v.recipient, v.account);
            else if constexpr (std::is_same_v<T, payload::AddFunds>) return add_funds(s, sender, v.amt);
            else return send_allowance(s, sender, v.recipient, v.amount);
        },
        p);
}

/// In-place transition. The signature must already have been checked by the
/// caller. Gas is charged from the flat table whatever the outcome.
inline Receipt apply_in_place(LedgerState& state, const Transaction& tx) {
    auto hash = tx_hash(tx);
    auto cost = gas_cost(tx.payload);
    if (tx.nonce != state.next_nonce(tx.sender)) return Receipt::failure(hash, TxError::BadNonce, cost);
    state.nonces[tx.sender] = tx.nonce + 1;
    if (tx.gas_limit < cost) return Receipt::failure(hash, TxError::OutOfGas, tx.gas_limit);

    auto effect = dispatch(state.contract, tx.sender, tx.payload);
    if (!effect.ok()) return Receipt::failure(hash, *effect.error, cost);
    return Receipt::success(hash, cost, std::move(effect.events));
}

inline std::pair<LedgerState, Receipt> apply_transaction(const LedgerState& state, const Transaction& tx) {
    auto next = state;
    auto receipt = apply_in_place(next, tx);
    return {std::move(next), std::move(receipt)};
}

} // namespace ledgersim::vm
