#pragma once

#include "ledgersim/consensus/quorum.hpp"
#include "ledgersim/crypto/signature.hpp"
#include "ledgersim/net/network.hpp"
#include "ledgersim/sim/simulation.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ledgersim::config {

enum class ConfigErrorKind : std::uint8_t { MalformedConfig, MissingField, UnknownField, InvalidValue, InvalidRange };

inline constexpr std::string_view to_string(ConfigErrorKind k) {
    switch (k) {
    case ConfigErrorKind::MalformedConfig: return "MalformedConfig";
    case ConfigErrorKind::MissingField: return "MissingField";
    case ConfigErrorKind::UnknownField: return "UnknownField";
    case ConfigErrorKind::InvalidValue: return "InvalidValue";
    case ConfigErrorKind::InvalidRange: return "InvalidRange";
    }
    return "?";
}

class ConfigError : public std::runtime_error {
  public:
    ConfigError(ConfigErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ConfigErrorKind kind() const { return kind_; }

  private:
    ConfigErrorKind kind_;
};

/// Private key provider: the client keys at indices [min, max] (inclusive)
/// are the active signing accounts. `rpc_url` is an opaque label.
struct KeyProvider {
    std::vector<Secret> private_keys;
    std::string rpc_url;
    std::uint64_t min = 0;
    std::uint64_t max = 0;

    friend bool operator==(const KeyProvider&, const KeyProvider&) = default;
};

struct GenesisConfig {
    std::uint64_t network_id = 1337;
    /// Validator key seeds, in proposer-rotation order.
    std::vector<Secret> validators;
    std::uint64_t block_gas_limit = kDefaultBlockGasLimit;
    std::uint64_t gas_price = 0;
    net::NetworkParams network;
    std::uint64_t base_round_timeout = 20;
    KeyProvider key_provider;

    friend bool operator==(const GenesisConfig&, const GenesisConfig&) = default;
};

inline std::vector<crypto::KeyPair> active_keys(const KeyProvider& p) {
    std::vector<crypto::KeyPair> out;
    for (auto i = p.min; i <= p.max && i < p.private_keys.size(); ++i)
        out.push_back(crypto::KeyPair::from_seed(p.private_keys[i]));
    return out;
}

inline std::vector<crypto::KeyPair> validator_keys(const GenesisConfig& g) {
    std::vector<crypto::KeyPair> out;
    for (const auto& s : g.validators) out.push_back(crypto::KeyPair::from_seed(s));
    return out;
}

inline consensus::ConsensusConfig consensus_config(const GenesisConfig& g) {
    std::vector<Address> addrs;
    for (const auto& k : validator_keys(g)) addrs.push_back(k.address);
    return consensus::ConsensusConfig(std::move(addrs), g.base_round_timeout);
}

inline sim::SimulationSetup simulation_setup(const GenesisConfig& g) {
    sim::SimulationSetup s;
    s.validators = validator_keys(g);
    s.clients = active_keys(g.key_provider);
    s.base_round_timeout = g.base_round_timeout;
    s.block_gas_limit = g.block_gas_limit;
    s.network = g.network;
    return s;
}

namespace detail {

inline constexpr std::string_view kTopFields[] = {"networkId",      "validators", "blockGasLimit",  "gasPrice",
                                                  "gst",            "delta",      "preGstMaxDelay", "preGstLossProb",
                                                  "seed",           "baseRoundTimeout", "keyProvider"};
inline constexpr std::string_view kProviderFields[] = {"privateKeys", "rpcUrl", "min", "max"};

template <std::size_t N>
void check_fields(const nlohmann::json& obj, const std::string_view (&allowed)[N], std::string_view where) {
    if (!obj.is_object()) throw ConfigError(ConfigErrorKind::MalformedConfig, std::string(where) + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw ConfigError(ConfigErrorKind::UnknownField, std::string(where) + "." + key);
    }
    for (auto a : allowed)
        if (!obj.contains(a)) throw ConfigError(ConfigErrorKind::MissingField, std::string(where) + "." + std::string(a));
}

inline std::uint64_t get_u64(const nlohmann::json& obj, std::string_view key) {
    const auto& v = obj.at(std::string(key));
    if (!v.is_number_unsigned())
        throw ConfigError(ConfigErrorKind::InvalidValue, std::string(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline Secret get_seed(const nlohmann::json& v, std::string_view what) {
    if (!v.is_string()) throw ConfigError(ConfigErrorKind::InvalidValue, std::string(what) + " must be a hex string");
    const auto& s = v.get_ref<const std::string&>();
    bool canonical = s.size() == 66 && s.starts_with("0x") &&
                     std::all_of(s.begin() + 2, s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
    if (!canonical)
        throw ConfigError(ConfigErrorKind::InvalidValue, std::string(what) + " must be 0x followed by 64 lowercase hex digits");
    return Secret::from_hex(s);
}

inline std::vector<Secret> get_seeds(const nlohmann::json& v, std::string_view what) {
    if (!v.is_array()) throw ConfigError(ConfigErrorKind::InvalidValue, std::string(what) + " must be an array");
    std::vector<Secret> out;
    for (const auto& e : v) out.push_back(get_seed(e, what));
    return out;
}

} // namespace detail

/// Checks every cross-field invariant. Throws ConfigError.
inline void validate(const GenesisConfig& g) {
    using K = ConfigErrorKind;
    if (g.network_id == 0) throw ConfigError(K::InvalidValue, "networkId must be positive");
    if (g.validators.empty()) throw ConfigError(K::InvalidValue, "validators must not be empty");
    std::set<Address> addrs;
    for (const auto& k : validator_keys(g))
        if (!addrs.insert(k.address).second) throw ConfigError(K::InvalidValue, "validators must be distinct");
    if (g.block_gas_limit == 0) throw ConfigError(K::InvalidValue, "blockGasLimit must be positive");
    if (g.base_round_timeout == 0) throw ConfigError(K::InvalidValue, "baseRoundTimeout must be positive");
    if (g.network.delta < 1) throw ConfigError(K::InvalidValue, "delta must be at least 1");
    if (g.network.pre_gst_max_delay < 1) throw ConfigError(K::InvalidValue, "preGstMaxDelay must be at least 1");
    if (!(g.network.pre_gst_loss_prob >= 0.0 && g.network.pre_gst_loss_prob <= 1.0))
        throw ConfigError(K::InvalidValue, "preGstLossProb must lie in [0, 1]");
    const auto& kp = g.key_provider;
    if (kp.rpc_url.empty()) throw ConfigError(K::InvalidValue, "keyProvider.rpcUrl must not be empty");
    if (kp.private_keys.empty()) throw ConfigError(K::InvalidValue, "keyProvider.privateKeys must not be empty");
    if (kp.min > kp.max || kp.max >= kp.private_keys.size())
        throw ConfigError(K::InvalidRange, "keyProvider requires 0 <= min <= max < |privateKeys|");
}

inline GenesisConfig parse_genesis(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(ConfigErrorKind::MalformedConfig, e.what());
    }
    detail::check_fields(j, detail::kTopFields, "genesis");
    const auto& kp = j.at("keyProvider");
    detail::check_fields(kp, detail::kProviderFields, "keyProvider");

    GenesisConfig g;
    g.network_id = detail::get_u64(j, "networkId");
    g.validators = detail::get_seeds(j.at("validators"), "validators");
    g.block_gas_limit = detail::get_u64(j, "blockGasLimit");
    g.gas_price = detail::get_u64(j, "gasPrice");
    g.network.gst = detail::get_u64(j, "gst");
    g.network.delta = detail::get_u64(j, "delta");
    g.network.pre_gst_max_delay = detail::get_u64(j, "preGstMaxDelay");
    const auto& loss = j.at("preGstLossProb");
    if (!loss.is_number()) throw ConfigError(ConfigErrorKind::InvalidValue, "preGstLossProb must be a number");
    g.network.pre_gst_loss_prob = loss.get<double>();
    g.network.seed = detail::get_u64(j, "seed");
    g.base_round_timeout = detail::get_u64(j, "baseRoundTimeout");

    g.key_provider.private_keys = detail::get_seeds(kp.at("privateKeys"), "keyProvider.privateKeys");
    if (!kp.at("rpcUrl").is_string()) throw ConfigError(ConfigErrorKind::InvalidValue, "keyProvider.rpcUrl must be a string");
    g.key_provider.rpc_url = kp.at("rpcUrl").get<std::string>();
    g.key_provider.min = detail::get_u64(kp, "min");
    g.key_provider.max = detail::get_u64(kp, "max");

    validate(g);
    return g;
}

inline std::string emit_genesis(const GenesisConfig& g) {
    auto seeds = [](const std::vector<Secret>& v) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& s : v) arr.push_back(s.hex());
        return arr;
    };
    nlohmann::ordered_json j;
    j["networkId"] = g.network_id;
    j["validators"] = seeds(g.validators);
    j["blockGasLimit"] = g.block_gas_limit;
    j["gasPrice"] = g.gas_price;
    j["gst"] = g.network.gst;
    j["delta"] = g.network.delta;
    j["preGstMaxDelay"] = g.network.pre_gst_max_delay;
    j["preGstLossProb"] = g.network.pre_gst_loss_prob;
    j["seed"] = g.network.seed;
    j["baseRoundTimeout"] = g.base_round_timeout;
    j["keyProvider"] = {{"privateKeys", seeds(g.key_provider.private_keys)},
                        {"rpcUrl", g.key_provider.rpc_url},
                        {"min", g.key_provider.min},
                        {"max", g.key_provider.max}};
    return j.dump(2) + "\n";
}

/// Seed whose bytes are all `fill`, handy for fixtures.
inline Secret fill_seed(std::uint8_t fill) {
    Secret s;
    s.bytes.fill(fill);
    return s;
}

/// Four validators, network 1337, 4.5M block gas, zero gas price.
inline GenesisConfig reference_genesis() {
    GenesisConfig g;
    g.network_id = 1337;
    for (std::uint8_t i = 1; i <= 4; ++i) g.validators.push_back(fill_seed(i));
    g.block_gas_limit = 4500000;
    g.gas_price = 0;
    g.network = net::NetworkParams{100, 5, 50, 0.1, 1};
    g.base_round_timeout = 20;
    for (std::uint8_t i = 0; i < 4; ++i) g.key_provider.private_keys.push_back(fill_seed(0xa0 + i));
    g.key_provider.rpc_url = "http://127.0.0.1:8545";
    g.key_provider.min = 0;
    g.key_provider.max = 3;
    return g;
}

} // namespace ledgersim::config
