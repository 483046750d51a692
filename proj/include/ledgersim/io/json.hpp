#pragma once

#include "ledgersim/core/model.hpp"
#include "ledgersim/node/chain.hpp"
#include "ledgersim/vm/contract.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

// JSON views of the ledger types. Output uses insertion-ordered objects so
// dumps are stable byte for byte; amounts are decimal strings, everything
// binary is 0x-prefixed lowercase hex.
namespace ledgersim::jsonio {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

class JsonDecodeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const json& field(const json& j, const char* key) {
    if (!j.is_object()) throw JsonDecodeError("expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw JsonDecodeError(std::string("missing field ") + key);
    return *it;
}

inline std::string text(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw JsonDecodeError(std::string(key) + " must be a string");
    return v.get<std::string>();
}

inline std::uint64_t u64(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_unsigned()) throw JsonDecodeError(std::string(key) + " must be an unsigned integer");
    return v.get<std::uint64_t>();
}

template <class Fixed>
Fixed fixed(const json& j, const char* key) {
    try {
        return Fixed::from_hex(text(j, key));
    } catch (const std::invalid_argument& e) {
        throw JsonDecodeError(std::string(key) + ": " + e.what());
    }
}

inline Bytes bytes(const json& j, const char* key) {
    try {
        return from_hex(text(j, key));
    } catch (const HexError& e) {
        throw JsonDecodeError(std::string(key) + ": " + e.what());
    }
}

inline Amount amount(const json& j, const char* key) {
    try {
        return Amount::parse(text(j, key));
    } catch (const std::invalid_argument& e) {
        throw JsonDecodeError(std::string(key) + ": " + e.what());
    }
}

inline const json& array(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_array()) throw JsonDecodeError(std::string(key) + " must be an array");
    return v;
}

} // namespace detail

// Payloads -----------------------------------------------------------------

inline ojson to_json(const TxPayload& p) {
    ojson j;
    j["type"] = payload_name(p);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, payload::AddRecipient> || std::is_same_v<T, payload::RemoveRecipient>) {
                j["recipient"] = v.recipient.hex();
            } else if constexpr (std::is_same_v<T, payload::RegisterBankAccount>) {
                j["recipient"] = v.recipient.hex();
                j["account"] = v.account;
            } else if constexpr (std::is_same_v<T, payload::AddFunds>) {
                j["amt"] = v.amt.to_string();
            } else if constexpr (std::is_same_v<T, payload::SendAllowance>) {
                j["recipient"] = v.recipient.hex();
                j["amount"] = v.amount.to_string();
            }
        },
        p);
    return j;
}

inline TxPayload payload_from_json(const json& j) {
    using namespace detail;
    auto type = text(j, "type");
    if (type == "Deploy") return payload::Deploy{};
    if (type == "AddRecipient") return payload::AddRecipient{fixed<Address>(j, "recipient")};
    if (type == "RemoveRecipient") return payload::RemoveRecipient{fixed<Address>(j, "recipient")};
    if (type == "RegisterBankAccount")
        return payload::RegisterBankAccount{fixed<Address>(j, "recipient"), text(j, "account")};
    if (type == "AddFunds") return payload::AddFunds{amount(j, "amt")};
    if (type == "SendAllowance") return payload::SendAllowance{fixed<Address>(j, "recipient"), amount(j, "amount")};
    throw JsonDecodeError("unknown payload type " + type);
}

// Transactions and blocks --------------------------------------------------

inline ojson to_json(const Transaction& tx) {
    return ojson{{"hash", tx_hash(tx).hex()},
                 {"sender", tx.sender.hex()},
                 {"nonce", tx.nonce},
                 {"payload", to_json(tx.payload)},
                 {"gasLimit", tx.gas_limit},
                 {"gasPrice", tx.gas_price},
                 {"signature", to_hex(tx.signature)}};
}

inline Transaction tx_from_json(const json& j) {
    using namespace detail;
    Transaction tx;
    tx.sender = fixed<Address>(j, "sender");
    tx.nonce = u64(j, "nonce");
    tx.payload = payload_from_json(field(j, "payload"));
    tx.gas_limit = u64(j, "gasLimit");
    tx.gas_price = u64(j, "gasPrice");
    tx.signature = bytes(j, "signature");
    return tx;
}

inline ojson to_json(const Block& b) {
    auto txs = ojson::array();
    for (const auto& tx : b.txs) txs.push_back(to_json(tx));
    auto seals = ojson::array();
    for (const auto& s : b.commit_seals) seals.push_back({{"signer", s.signer.hex()}, {"signature", to_hex(s.signature)}});
    return ojson{{"height", b.height},
                 {"round", b.round},
                 {"hash", block_hash(b).hex()},
                 {"parentHash", b.parent_hash.hex()},
                 {"proposer", b.proposer.hex()},
                 {"stateRoot", b.state_root.hex()},
                 {"txs", std::move(txs)},
                 {"commitSeals", std::move(seals)}};
}

/// The "hash" fields are derived data; they are not trusted on input.
inline Block block_from_json(const json& j) {
    using namespace detail;
    Block b;
    b.height = u64(j, "height");
    b.round = u64(j, "round");
    b.parent_hash = fixed<Hash256>(j, "parentHash");
    b.proposer = fixed<Address>(j, "proposer");
    b.state_root = fixed<Hash256>(j, "stateRoot");
    for (const auto& tx : array(j, "txs")) b.txs.push_back(tx_from_json(tx));
    for (const auto& s : array(j, "commitSeals"))
        b.commit_seals.push_back({fixed<Address>(s, "signer"), bytes(s, "signature")});
    return b;
}

// Receipts and events ------------------------------------------------------

inline ojson to_json(const Event& e) {
    ojson j;
    j["type"] = event_name(e);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, event::FundsAdded>) {
                j["value"] = v.value.to_string();
            } else if constexpr (std::is_same_v<T, event::AllowanceSent>) {
                j["recipient"] = v.recipient.hex();
                j["amount"] = v.amount.to_string();
            } else {
                j["recipient"] = v.recipient.hex();
                j["accountHash"] = v.account_hash.hex();
            }
        },
        e);
    return j;
}

inline ojson to_json(const Receipt& r) {
    auto events = ojson::array();
    for (const auto& e : r.events) events.push_back(to_json(e));
    ojson j{{"txHash", r.tx_hash.hex()}, {"status", r.ok() ? "SUCCESS" : "FAILED"}};
    j["error"] = r.error ? ojson(to_string(*r.error)) : ojson(nullptr);
    j["gasUsed"] = r.gas_used;
    j["events"] = std::move(events);
    return j;
}

inline ojson to_json(const node::LoggedEvent& e) {
    return ojson{{"cursor", e.cursor},       {"height", e.height},        {"txIndex", e.tx_index},
                 {"logIndex", e.log_index},  {"txHash", e.tx_hash.hex()}, {"event", to_json(e.event)}};
}

// State ---------------------------------------------------------------------

inline ojson to_json(const vm::LedgerState& s) {
    const auto& c = s.contract;
    auto recipients = ojson::array();
    for (const auto& [addr, active] : c.recipients) recipients.push_back(addr.hex());
    auto accounts = ojson::object();
    for (const auto& [addr, hash] : c.bank_accounts) accounts[addr.hex()] = hash.hex();
    auto balances = ojson::object();
    for (const auto& [addr, amount] : c.balances) balances[addr.hex()] = amount.to_string();
    auto nonces = ojson::object();
    for (const auto& [addr, n] : s.nonces) nonces[addr.hex()] = n;
    ojson j;
    j["deployed"] = c.deployed;
    j["organization"] = c.deployed ? ojson(c.organization.hex()) : ojson(nullptr);
    j["recipients"] = std::move(recipients);
    j["bankAccounts"] = std::move(accounts);
    j["balances"] = std::move(balances);
    j["nonces"] = std::move(nonces);
    j["stateRoot"] = vm::state_root(c).hex();
    return j;
}

} // namespace ledgersim::jsonio
