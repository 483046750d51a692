#pragma once

#include "ledgersim/core/amount.hpp"
#include "ledgersim/core/bytes.hpp"
#include "ledgersim/core/codec.hpp"
#include "ledgersim/crypto/keccak.hpp"
#include "ledgersim/crypto/signature.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ledgersim {

// ---------------------------------------------------------------------------
// Transaction payloads
// ---------------------------------------------------------------------------

namespace payload {

struct Deploy {
    friend bool operator==(const Deploy&, const Deploy&) = default;
};
struct AddRecipient {
    Address recipient;
    friend bool operator==(const AddRecipient&, const AddRecipient&) = default;
};
struct RemoveRecipient {
    Address recipient;
    friend bool operator==(const RemoveRecipient&, const RemoveRecipient&) = default;
};
struct RegisterBankAccount {
    Address recipient;
    std::string account;
    friend bool operator==(const RegisterBankAccount&, const RegisterBankAccount&) = default;
};
struct AddFunds {
    Amount amt;
    friend bool operator==(const AddFunds&, const AddFunds&) = default;
};
struct SendAllowance {
    Address recipient;
    Amount amount;
    friend bool operator==(const SendAllowance&, const SendAllowance&) = default;
};

} // namespace payload

/// Variant index doubles as the wire tag, so the alternative order is fixed.
using TxPayload = std::variant<payload::Deploy, payload::AddRecipient, payload::RemoveRecipient,
                               payload::RegisterBankAccount, payload::AddFunds, payload::SendAllowance>;

inline constexpr std::string_view payload_name(const TxPayload& p) {
    constexpr std::string_view names[] = {"Deploy",    "AddRecipient", "RemoveRecipient",
                                          "RegisterBankAccount", "AddFunds", "SendAllowance"};
    return names[p.index()];
}

// Flat gas table: the deployment is expensive, everything else costs the
// base transaction price.
inline constexpr std::uint64_t kDeployGas = 200000;
inline constexpr std::uint64_t kCallGas = 21000;
inline constexpr std::uint64_t kDefaultBlockGasLimit = 4500000;

inline constexpr std::uint64_t gas_cost(const TxPayload& p) {
    return std::holds_alternative<payload::Deploy>(p) ? kDeployGas : kCallGas;
}

struct Transaction {
    Address sender;
    std::uint64_t nonce = 0;
    TxPayload payload;
    std::uint64_t gas_limit = 0;
    std::uint64_t gas_price = 0;
    SignatureBytes signature;

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

// ---------------------------------------------------------------------------
// Events and receipts
// ---------------------------------------------------------------------------

namespace event {

struct FundsAdded {
    Amount value;
    friend bool operator==(const FundsAdded&, const FundsAdded&) = default;
};
struct AllowanceSent {
    Address recipient;
    Amount amount;
    friend bool operator==(const AllowanceSent&, const AllowanceSent&) = default;
};
struct BankAccountRegistered {
    Address recipient;
    Hash256 account_hash;
    friend bool operator==(const BankAccountRegistered&, const BankAccountRegistered&) = default;
};

} // namespace event

using Event = std::variant<event::FundsAdded, event::AllowanceSent, event::BankAccountRegistered>;

inline constexpr std::string_view event_name(const Event& e) {
    constexpr std::string_view names[] = {"FundsAdded", "AllowanceSent", "BankAccountRegistered"};
    return names[e.index()];
}

enum class TxError : std::uint8_t {
    AlreadyDeployed = 1,
    NotDeployed,
    Unauthorized,
    UnknownRecipient,
    EmptyAccountString,
    InsufficientFunds,
    Overflow,
    BadNonce,
    InvalidSignature,
    OutOfGas,
};

inline constexpr std::string_view to_string(TxError e) {
    switch (e) {
    case TxError::AlreadyDeployed: return "AlreadyDeployed";
    case TxError::NotDeployed: return "NotDeployed";
    case TxError::Unauthorized: return "Unauthorized";
    case TxError::UnknownRecipient: return "UnknownRecipient";
    case TxError::EmptyAccountString: return "EmptyAccountString";
    case TxError::InsufficientFunds: return "InsufficientFunds";
    case TxError::Overflow: return "Overflow";
    case TxError::BadNonce: return "BadNonce";
    case TxError::InvalidSignature: return "InvalidSignature";
    case TxError::OutOfGas: return "OutOfGas";
    }
    return "Unknown";
}

enum class TxStatus : std::uint8_t { Success = 0, Failed = 1 };

struct Receipt {
    Hash256 tx_hash;
    TxStatus status = TxStatus::Success;
    std::optional<TxError> error;
    std::uint64_t gas_used = 0;
    std::vector<Event> events;

    static Receipt success(const Hash256& tx, std::uint64_t gas, std::vector<Event> events = {}) {
        return Receipt{tx, TxStatus::Success, std::nullopt, gas, std::move(events)};
    }
    static Receipt failure(const Hash256& tx, TxError err, std::uint64_t gas) {
        return Receipt{tx, TxStatus::Failed, err, gas, {}};
    }

    bool ok() const { return status == TxStatus::Success; }

    friend bool operator==(const Receipt&, const Receipt&) = default;
};

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

struct CommitSeal {
    Address signer;
    SignatureBytes signature;
    friend bool operator==(const CommitSeal&, const CommitSeal&) = default;
};

struct Block {
    std::uint64_t height = 0;
    std::uint64_t round = 0;
    Hash256 parent_hash;
    Address proposer;
    std::vector<Transaction> txs;
    Hash256 state_root;
    std::vector<CommitSeal> commit_seals;

    friend bool operator==(const Block&, const Block&) = default;
};

// ---------------------------------------------------------------------------
// Canonical encoding
// ---------------------------------------------------------------------------

inline void encode(Writer& w, const TxPayload& p) {
    w.u8(static_cast<std::uint8_t>(p.index()));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, payload::AddRecipient> || std::is_same_v<T, payload::RemoveRecipient>) {
                w.fixed(v.recipient);
            } else if constexpr (std::is_same_v<T, payload::RegisterBankAccount>) {
                w.fixed(v.recipient);
                w.text(v.account);
            } else if constexpr (std::is_same_v<T, payload::AddFunds>) {
                w.amount(v.amt);
            } else if constexpr (std::is_same_v<T, payload::SendAllowance>) {
                w.fixed(v.recipient);
                w.amount(v.amount);
            }
        },
        p);
}

inline void read(Reader& r, TxPayload& p) {
    switch (r.u8()) {
    case 0: p = payload::Deploy{}; break;
    case 1: p = payload::AddRecipient{r.fixed<Address>()}; break;
    case 2: p = payload::RemoveRecipient{r.fixed<Address>()}; break;
    case 3: {
        auto who = r.fixed<Address>();
        p = payload::RegisterBankAccount{who, r.text()};
        break;
    }
    case 4: p = payload::AddFunds{r.amount()}; break;
    case 5: {
        auto who = r.fixed<Address>();
        p = payload::SendAllowance{who, r.amount()};
        break;
    }
    default: throw DecodeError("unknown payload tag");
    }
}

inline void encode_unsigned(Writer& w, const Transaction& tx) {
    w.fixed(tx.sender);
    w.u64(tx.nonce);
    encode(w, tx.payload);
    w.u64(tx.gas_limit);
    w.u64(tx.gas_price);
}

inline void encode(Writer& w, const Transaction& tx) {
    encode_unsigned(w, tx);
    w.bytes(tx.signature);
}

inline void read(Reader& r, Transaction& tx) {
    tx.sender = r.fixed<Address>();
    tx.nonce = r.u64();
    read(r, tx.payload);
    tx.gas_limit = r.u64();
    tx.gas_price = r.u64();
    tx.signature = r.bytes();
}

inline void encode(Writer& w, const Event& e) {
    w.u8(static_cast<std::uint8_t>(e.index()));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, event::FundsAdded>) {
                w.amount(v.value);
            } else if constexpr (std::is_same_v<T, event::AllowanceSent>) {
                w.fixed(v.recipient);
                w.amount(v.amount);
            } else {
                w.fixed(v.recipient);
                w.fixed(v.account_hash);
            }
        },
        e);
}

inline void read(Reader& r, Event& e) {
    switch (r.u8()) {
    case 0: e = event::FundsAdded{r.amount()}; break;
    case 1: {
        auto who = r.fixed<Address>();
        e = event::AllowanceSent{who, r.amount()};
        break;
    }
    case 2: {
        auto who = r.fixed<Address>();
        e = event::BankAccountRegistered{who, r.fixed<Hash256>()};
        break;
    }
    default: throw DecodeError("unknown event tag");
    }
}

inline void encode(Writer& w, const Receipt& rc) {
    w.fixed(rc.tx_hash);
    w.u8(static_cast<std::uint8_t>(rc.status));
    w.u8(rc.error ? static_cast<std::uint8_t>(*rc.error) : 0);
    w.u64(rc.gas_used);
    w.length(rc.events.size());
    for (const auto& e : rc.events) encode(w, e);
}

inline void read(Reader& r, Receipt& rc) {
    rc.tx_hash = r.fixed<Hash256>();
    auto status = r.u8();
    if (status > 1) throw DecodeError("receipt status out of range");
    rc.status = static_cast<TxStatus>(status);
    auto err = r.u8();
    if (err > static_cast<std::uint8_t>(TxError::OutOfGas)) throw DecodeError("receipt error code out of range");
    rc.error = err == 0 ? std::nullopt : std::optional<TxError>(static_cast<TxError>(err));
    if ((rc.status == TxStatus::Failed) != rc.error.has_value())
        throw DecodeError("receipt status and error code disagree");
    rc.gas_used = r.u64();
    rc.events.resize(r.length());
    for (auto& e : rc.events) read(r, e);
}

inline void encode_unsealed(Writer& w, const Block& b) {
    w.u64(b.height);
    w.u64(b.round);
    w.fixed(b.parent_hash);
    w.fixed(b.proposer);
    w.length(b.txs.size());
    for (const auto& tx : b.txs) encode(w, tx);
    w.fixed(b.state_root);
}

inline void encode(Writer& w, const Block& b) {
    encode_unsealed(w, b);
    w.length(b.commit_seals.size());
    for (const auto& s : b.commit_seals) {
        w.fixed(s.signer);
        w.bytes(s.signature);
    }
}

inline void read(Reader& r, Block& b) {
    b.height = r.u64();
    b.round = r.u64();
    b.parent_hash = r.fixed<Hash256>();
    b.proposer = r.fixed<Address>();
    b.txs.resize(r.length());
    for (auto& tx : b.txs) read(r, tx);
    b.state_root = r.fixed<Hash256>();
    b.commit_seals.resize(r.length());
    for (auto& s : b.commit_seals) {
        s.signer = r.fixed<Address>();
        s.signature = r.bytes();
    }
}

inline void encode(Writer& w, const Amount& a) { w.amount(a); }
inline void read(Reader& r, Amount& a) { a = r.amount(); }

template <std::size_t N, class Tag>
void encode(Writer& w, const FixedBytes<N, Tag>& b) {
    w.fixed(b);
}
template <std::size_t N, class Tag>
void read(Reader& r, FixedBytes<N, Tag>& b) {
    b = r.fixed<FixedBytes<N, Tag>>();
}

template <class T>
Bytes serialize(const T& value) {
    Writer w;
    encode(w, value);
    return std::move(w).take();
}

/// Strict: trailing bytes are an error.
template <class T>
T deserialize(ByteView data) {
    Reader r(data);
    T value{};
    read(r, value);
    r.expect_end();
    return value;
}

inline Hash256 tx_hash(const Transaction& tx) {
    Writer w;
    encode_unsigned(w, tx);
    return crypto::keccak256(w.data());
}

/// Commit seals are excluded, so sealing a block never changes its hash.
inline Hash256 block_hash(const Block& b) {
    Writer w;
    encode_unsealed(w, b);
    return crypto::keccak256(w.data());
}

inline Block genesis_block(const Hash256& state_root) {
    Block g;
    g.state_root = state_root;
    return g;
}

inline Transaction make_transaction(const crypto::KeyPair& key, const crypto::SignatureScheme& scheme,
                                    std::uint64_t nonce, TxPayload p, std::uint64_t gas_price = 0) {
    Transaction tx;
    tx.sender = key.address;
    tx.nonce = nonce;
    tx.gas_limit = gas_cost(p);
    tx.payload = std::move(p);
    tx.gas_price = gas_price;
    tx.signature = scheme.sign(key, tx_hash(tx));
    return tx;
}

} // namespace ledgersim
