#pragma once

#include "ledgersim/core/model.hpp"
#include "ledgersim/net/byzantine.hpp"
#include "ledgersim/net/network.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ledgersim::scenario {

class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// "key:N" names the N-th active client key, "validator:N" a validator,
/// anything else must be a literal 0x address.
struct AddressRef {
    enum class Kind : std::uint8_t { Client, Validator, Literal } kind = Kind::Literal;
    std::size_t index = 0;
    Address literal;

    friend bool operator==(const AddressRef&, const AddressRef&) = default;
};

namespace action {

struct Deploy {};
struct AddRecipient {
    AddressRef recipient;
};
struct RemoveRecipient {
    AddressRef recipient;
};
struct RegisterBankAccount {
    AddressRef recipient;
    std::string account;
};
struct AddFunds {
    Amount amt;
};
struct SendAllowance {
    AddressRef recipient;
    Amount amount;
};
/// Balance of `address` (default: the actor) read on every node.
struct GetBalance {
    std::optional<AddressRef> address;
};
struct InjectFault {
    std::size_t validator = 0;
    net::Behavior behavior = net::Behavior::Silent;
};
struct SetGstNow {};

} // namespace action

using Action = std::variant<action::Deploy, action::AddRecipient, action::RemoveRecipient, action::RegisterBankAccount,
                            action::AddFunds, action::SendAllowance, action::GetBalance, action::InjectFault,
                            action::SetGstNow>;

inline constexpr std::string_view action_name(const Action& a) {
    constexpr std::string_view names[] = {"Deploy",        "AddRecipient", "RemoveRecipient",
                                          "RegisterBankAccount", "AddFunds", "SendAllowance",
                                          "GetBalance",    "InjectFault",  "SetGstNow"};
    return names[a.index()];
}

inline bool is_transaction(const Action& a) { return a.index() <= 5; }

struct Command {
    net::Time at_time = 0;
    std::size_t actor = 0;
    /// Submission node; defaults to the lowest-index honest validator.
    std::optional<std::size_t> node;
    /// Overrides for exercising the nonce and gas rules.
    std::optional<std::uint64_t> nonce;
    std::optional<std::uint64_t> gas_limit;
    Action action;
};

enum class ExpectKind : std::uint8_t { OrgBalance, EventKinds, TxStatus, Query, MinHeight, MaxHeight, Safety, Liveness };

struct Expectation {
    ExpectKind kind = ExpectKind::Safety;
    std::optional<std::size_t> command;
    nlohmann::json value;
};

struct Scenario {
    std::string name;
    net::Time horizon = 0;
    std::vector<Command> commands;
    std::vector<Expectation> expectations;
};

namespace detail {

using json = nlohmann::json;

inline void only_fields(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw ScenarioError(where + " must be an object");
    for (const auto& [key, v] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ScenarioError("unknown field " + where + "." + key);
    }
}

inline const json& need(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ScenarioError("missing field " + where + "." + key);
    return *it;
}

inline std::uint64_t need_u64(const json& j, const char* key, const std::string& where) {
    const auto& v = need(j, key, where);
    if (!v.is_number_unsigned()) throw ScenarioError(where + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::optional<std::uint64_t> opt_u64(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) return std::nullopt;
    return need_u64(j, key, where);
}

inline std::string need_text(const json& j, const char* key, const std::string& where) {
    const auto& v = need(j, key, where);
    if (!v.is_string()) throw ScenarioError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

inline Amount need_amount(const json& j, const char* key, const std::string& where) {
    const auto& v = need(j, key, where);
    try {
        if (v.is_number_unsigned()) return Amount(v.get<std::uint64_t>());
        if (v.is_string()) return Amount::parse(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(where + "." + key + ": " + e.what());
    }
    throw ScenarioError(where + "." + key + " must be a decimal string or unsigned integer");
}

inline std::size_t parse_index(std::string_view digits, const std::string& where) {
    if (digits.empty() || digits.size() > 9) throw ScenarioError(where + ": bad index");
    std::size_t n = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') throw ScenarioError(where + ": bad index");
        n = n * 10 + static_cast<std::size_t>(c - '0');
    }
    return n;
}

inline AddressRef need_ref(const json& j, const char* key, const std::string& where) {
    auto s = need_text(j, key, where);
    std::string_view v = s;
    if (v.starts_with("key:")) return {AddressRef::Kind::Client, parse_index(v.substr(4), where), {}};
    if (v.starts_with("validator:")) return {AddressRef::Kind::Validator, parse_index(v.substr(10), where), {}};
    try {
        return {AddressRef::Kind::Literal, 0, Address::from_hex(v)};
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(where + "." + key + ": " + e.what());
    }
}

inline Action parse_action(const json& j, const std::string& where) {
    auto type = need_text(j, "type", where);
    if (type == "Deploy") {
        only_fields(j, {"type"}, where);
        return action::Deploy{};
    }
    if (type == "AddRecipient" || type == "RemoveRecipient") {
        only_fields(j, {"type", "recipient"}, where);
        auto r = need_ref(j, "recipient", where);
        return type == "AddRecipient" ? Action(action::AddRecipient{r}) : Action(action::RemoveRecipient{r});
    }
    if (type == "RegisterBankAccount") {
        only_fields(j, {"type", "recipient", "account"}, where);
        return action::RegisterBankAccount{need_ref(j, "recipient", where), need_text(j, "account", where)};
    }
    if (type == "AddFunds") {
        only_fields(j, {"type", "amt"}, where);
        return action::AddFunds{need_amount(j, "amt", where)};
    }
    if (type == "SendAllowance") {
        only_fields(j, {"type", "recipient", "amount"}, where);
        return action::SendAllowance{need_ref(j, "recipient", where), need_amount(j, "amount", where)};
    }
    if (type == "GetBalance") {
        only_fields(j, {"type", "address"}, where);
        action::GetBalance q;
        if (j.contains("address")) q.address = need_ref(j, "address", where);
        return q;
    }
    if (type == "InjectFault") {
        only_fields(j, {"type", "validator", "behavior"}, where);
        try {
            return action::InjectFault{need_u64(j, "validator", where),
                                       net::parse_behavior(need_text(j, "behavior", where))};
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(where + ": " + e.what());
        }
    }
    if (type == "SetGstNow") {
        only_fields(j, {"type"}, where);
        return action::SetGstNow{};
    }
    throw ScenarioError(where + ": unknown action type " + type);
}

inline ExpectKind parse_kind(const std::string& s, const std::string& where) {
    static const std::pair<std::string_view, ExpectKind> table[] = {
        {"orgBalance", ExpectKind::OrgBalance}, {"eventKinds", ExpectKind::EventKinds},
        {"txStatus", ExpectKind::TxStatus},     {"query", ExpectKind::Query},
        {"minHeight", ExpectKind::MinHeight},   {"maxHeight", ExpectKind::MaxHeight},
        {"safety", ExpectKind::Safety},         {"liveness", ExpectKind::Liveness}};
    for (const auto& [name, kind] : table)
        if (name == s) return kind;
    throw ScenarioError(where + ": unknown expectation kind " + s);
}

} // namespace detail

inline constexpr std::string_view to_string(ExpectKind k) {
    switch (k) {
    case ExpectKind::OrgBalance: return "orgBalance";
    case ExpectKind::EventKinds: return "eventKinds";
    case ExpectKind::TxStatus: return "txStatus";
    case ExpectKind::Query: return "query";
    case ExpectKind::MinHeight: return "minHeight";
    case ExpectKind::MaxHeight: return "maxHeight";
    case ExpectKind::Safety: return "safety";
    case ExpectKind::Liveness: return "liveness";
    }
    return "?";
}

/// Strict parse. Actor and validator indices are resolved later against the
/// genesis, since only it knows how many keys exist.
inline Scenario parse_scenario(std::string_view text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("malformed scenario: ") + e.what());
    }
    detail::only_fields(j, {"name", "horizon", "commands", "expectations"}, "scenario");

    Scenario s;
    s.name = detail::need_text(j, "name", "scenario");
    s.horizon = detail::need_u64(j, "horizon", "scenario");
    const auto& cmds = detail::need(j, "commands", "scenario");
    if (!cmds.is_array()) throw ScenarioError("scenario.commands must be an array");

    for (std::size_t i = 0; i < cmds.size(); ++i) {
        auto where = "commands[" + std::to_string(i) + "]";
        const auto& c = cmds[i];
        detail::only_fields(c, {"atTime", "actor", "node", "nonce", "gasLimit", "action"}, where);
        Command cmd;
        cmd.at_time = detail::need_u64(c, "atTime", where);
        cmd.action = detail::parse_action(detail::need(c, "action", where), where + ".action");
        const auto* query = std::get_if<action::GetBalance>(&cmd.action);
        if (c.contains("actor") || is_transaction(cmd.action) || (query && !query->address))
            cmd.actor = detail::need_u64(c, "actor", where);
        cmd.node = detail::opt_u64(c, "node", where);
        cmd.nonce = detail::opt_u64(c, "nonce", where);
        cmd.gas_limit = detail::opt_u64(c, "gasLimit", where);
        if (!is_transaction(cmd.action) && (cmd.nonce || cmd.gas_limit))
            throw ScenarioError(where + ": nonce and gasLimit apply to transactions only");
        if (!s.commands.empty() && cmd.at_time < s.commands.back().at_time)
            throw ScenarioError(where + ": atTime must be non-decreasing");
        if (cmd.at_time > s.horizon) throw ScenarioError(where + ": atTime lies beyond the horizon");
        s.commands.push_back(std::move(cmd));
    }

    if (j.contains("expectations")) {
        const auto& exps = j.at("expectations");
        if (!exps.is_array()) throw ScenarioError("scenario.expectations must be an array");
        for (std::size_t i = 0; i < exps.size(); ++i) {
            auto where = "expectations[" + std::to_string(i) + "]";
            const auto& e = exps[i];
            detail::only_fields(e, {"kind", "command", "value"}, where);
            Expectation x;
            x.kind = detail::parse_kind(detail::need_text(e, "kind", where), where);
            x.command = detail::opt_u64(e, "command", where);
            x.value = detail::need(e, "value", where);
            bool needs_command = x.kind == ExpectKind::TxStatus || x.kind == ExpectKind::Query;
            if (needs_command != x.command.has_value())
                throw ScenarioError(where + ": 'command' is required for txStatus and query and invalid otherwise");
            if (x.command && *x.command >= s.commands.size())
                throw ScenarioError(where + ": command index out of range");
            if (x.kind == ExpectKind::TxStatus && !is_transaction(s.commands[*x.command].action))
                throw ScenarioError(where + ": txStatus must point at a transaction command");
            if (x.kind == ExpectKind::Query &&
                !std::holds_alternative<action::GetBalance>(s.commands[*x.command].action))
                throw ScenarioError(where + ": query must point at a GetBalance command");
            s.expectations.push_back(std::move(x));
        }
    }
    return s;
}

} // namespace ledgersim::scenario
