#pragma once

#include "ledgersim/config/genesis.hpp"
#include "ledgersim/io/json.hpp"
#include "ledgersim/node/audit.hpp"
#include "ledgersim/scenario/scenario.hpp"
#include "ledgersim/sim/simulation.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ledgersim::scenario {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitExpectation = 3;
inline constexpr int kExitInvariant = 4;

struct RunOptions {
    /// Replaces the genesis seed when set.
    std::optional<std::uint64_t> seed;
    std::ostream* network_trace = nullptr;
    std::ostream* consensus_trace = nullptr;
};

struct Artifacts {
    std::string chain_jsonl;
    std::string events_jsonl;
    std::string state_json;
    std::string report_json;
};

struct RunResult {
    int exit_code = kExitOk;
    bool safety = true;
    bool liveness = true;
    bool conservation = true;
    bool expectations_met = true;
    std::uint64_t min_honest_height = 0;
    std::uint64_t max_height = 0;
    std::vector<std::string> invariant_problems;
    Artifacts artifacts;
};

namespace detail {

using jsonio::ojson;

struct CommandRecord {
    std::optional<Hash256> tx;
    std::optional<std::size_t> node;
    std::string submit; // ACCEPTED or the rejection reason
    std::optional<std::size_t> validator;
    std::optional<Address> query_address;
    std::vector<std::optional<Amount>> query_results;
};

class Resolver {
  public:
    Resolver(const sim::SimulationSetup& setup) : setup_(setup) {}

    Address address(const AddressRef& ref, const std::string& where) const {
        switch (ref.kind) {
        case AddressRef::Kind::Client:
            if (ref.index >= setup_.clients.size()) throw ScenarioError(where + ": key index out of range");
            return setup_.clients[ref.index].address;
        case AddressRef::Kind::Validator:
            if (ref.index >= setup_.validators.size()) throw ScenarioError(where + ": validator index out of range");
            return setup_.validators[ref.index].address;
        case AddressRef::Kind::Literal: return ref.literal;
        }
        return {};
    }

    TxPayload payload(const Action& a, const std::string& where) const {
        return std::visit(
            [&](const auto& v) -> TxPayload {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, action::Deploy>) return payload::Deploy{};
                else if constexpr (std::is_same_v<T, action::AddRecipient>)
                    return payload::AddRecipient{address(v.recipient, where)};
                else if constexpr (std::is_same_v<T, action::RemoveRecipient>)
                    return payload::RemoveRecipient{address(v.recipient, where)};
                else if constexpr (std::is_same_v<T, action::RegisterBankAccount>)
                    return payload::RegisterBankAccount{address(v.recipient, where), v.account};
                else if constexpr (std::is_same_v<T, action::AddFunds>) return payload::AddFunds{v.amt};
                else if constexpr (std::is_same_v<T, action::SendAllowance>)
                    return payload::SendAllowance{address(v.recipient, where), v.amount};
                else throw std::logic_error("not a transaction action");
            },
            a);
    }

    /// Index checks done before the run, so a bad scenario never produces
    /// partial artifacts.
    void check(const Scenario& s) const {
        auto n = setup_.validators.size();
        for (std::size_t i = 0; i < s.commands.size(); ++i) {
            const auto& c = s.commands[i];
            auto where = "commands[" + std::to_string(i) + "]";
            bool uses_actor = is_transaction(c.action);
            if (const auto* q = std::get_if<action::GetBalance>(&c.action)) {
                if (q->address) address(*q->address, where);
                else uses_actor = true;
            }
            if (uses_actor && c.actor >= setup_.clients.size())
                throw ScenarioError(where + ": actor is not an active key");
            if (c.node && *c.node >= n) throw ScenarioError(where + ": node index out of range");
            if (const auto* f = std::get_if<action::InjectFault>(&c.action); f && f->validator >= n)
                throw ScenarioError(where + ": validator index out of range");
            if (is_transaction(c.action)) payload(c.action, where);
        }
    }

  private:
    const sim::SimulationSetup& setup_;
};

inline std::optional<Amount> json_amount(const nlohmann::json& v) {
    try {
        if (v.is_number_unsigned()) return Amount(v.get<std::uint64_t>());
        if (v.is_string()) return Amount::parse(v.get<std::string>());
    } catch (const std::invalid_argument&) {
    }
    return std::nullopt;
}

inline ojson amount_or_error(const std::optional<Amount>& a) {
    return a ? ojson(a->to_string()) : ojson("NotDeployed");
}

} // namespace detail

inline RunResult run_scenario(const config::GenesisConfig& genesis, const Scenario& sc, const RunOptions& opt = {}) {
    using detail::ojson;
    auto g = genesis;
    if (opt.seed) g.network.seed = *opt.seed;
    auto setup = config::simulation_setup(g);
    detail::Resolver resolve(setup);
    resolve.check(sc);

    sim::Simulation sim(setup);
    sim.set_traces(opt.network_trace, opt.consensus_trace);
    const auto n = sim.size();

    std::vector<std::uint64_t> next_nonce(setup.clients.size(), 0);
    std::vector<detail::CommandRecord> records(sc.commands.size());

    for (std::size_t i = 0; i < sc.commands.size(); ++i) {
        const auto& cmd = sc.commands[i];
        auto& rec = records[i];
        auto where = "commands[" + std::to_string(i) + "]";
        sim.advance_to(cmd.at_time);

        if (is_transaction(cmd.action)) {
            const auto& key = setup.clients[cmd.actor];
            auto honest = sim.honest();
            rec.node = cmd.node.value_or(honest.empty() ? 0 : honest.front());
            Transaction tx;
            tx.sender = key.address;
            tx.nonce = cmd.nonce.value_or(next_nonce[cmd.actor]);
            tx.payload = resolve.payload(cmd.action, where);
            tx.gas_limit = cmd.gas_limit.value_or(gas_cost(tx.payload));
            tx.gas_price = g.gas_price;
            tx.signature = sim.scheme().sign(key, tx_hash(tx));
            rec.tx = tx_hash(tx);
            auto err = sim.submit(*rec.node, tx);
            rec.submit = err ? std::string(node::to_string(*err)) : "ACCEPTED";
            if (!err && !cmd.nonce) ++next_nonce[cmd.actor];
        } else if (const auto* q = std::get_if<action::GetBalance>(&cmd.action)) {
            rec.query_address = q->address ? resolve.address(*q->address, where) : setup.clients[cmd.actor].address;
            for (std::size_t j = 0; j < n; ++j) {
                try {
                    rec.query_results.push_back(sim.node(j).get_balance(*rec.query_address));
                } catch (const vm::NotDeployedError&) {
                    rec.query_results.push_back(std::nullopt);
                }
            }
        } else if (const auto* f = std::get_if<action::InjectFault>(&cmd.action)) {
            rec.validator = f->validator;
            sim.inject_fault(f->validator, f->behavior);
        } else {
            sim.set_gst_now();
        }
    }
    sim.advance_to(sc.horizon);

    RunResult result;
    auto honest = sim.honest();
    std::size_t ref = honest.empty() ? 0 : honest.front();
    const auto& chain = sim.node(ref).chain();

    // Invariants ------------------------------------------------------------
    auto safety_problems = ojson::array();
    for (const auto& v : sim.safety_violations())
        safety_problems.push_back({{"height", v.height},
                                   {"nodes", {v.first_node, v.second_node}},
                                   {"hashes", {v.first_hash.hex(), v.second_hash.hex()}}});
    for (std::size_t a = 0; a < honest.size(); ++a) {
        for (std::size_t b = a + 1; b < honest.size(); ++b) {
            const auto& ca = sim.node(honest[a]).chain();
            const auto& cb = sim.node(honest[b]).chain();
            for (std::uint64_t h = 0; h <= std::min(ca.height(), cb.height()); ++h) {
                if (ca.hash_at(h) != cb.hash_at(h)) {
                    safety_problems.push_back({{"height", h},
                                               {"nodes", {honest[a], honest[b]}},
                                               {"hashes", {ca.hash_at(h).hex(), cb.hash_at(h).hex()}}});
                    break;
                }
                if (ca.state_at(h) != cb.state_at(h))
                    result.invariant_problems.push_back("replicated state diverged at height " + std::to_string(h));
            }
        }
    }
    result.safety = safety_problems.empty();
    if (!result.safety) result.invariant_problems.push_back("honest nodes finalized different blocks");

    auto audit = ojson::array();
    for (auto i : honest) {
        if (auto finding = node::audit_chain(sim.node(i).chain())) {
            audit.push_back({{"node", i}, {"height", finding->height}, {"problem", finding->problem}});
            result.invariant_problems.push_back("audit on node " + std::to_string(i) + ": " + finding->problem);
        }
    }
    result.conservation = audit.empty();

    std::uint64_t pending = 0;
    for (const auto& rec : records)
        if (rec.tx && rec.submit == "ACCEPTED" && !chain.receipt(*rec.tx)) ++pending;
    result.min_honest_height = sim.min_honest_height();
    result.max_height = sim.max_height();
    result.liveness = result.min_honest_height > 0 && pending == 0;

    // Commands ---------------------------------------------------------------
    auto commands = ojson::array();
    auto queries = ojson::array();
    std::vector<std::string> tx_status(sc.commands.size());
    std::vector<std::string> tx_error(sc.commands.size());
    for (std::size_t i = 0; i < sc.commands.size(); ++i) {
        const auto& cmd = sc.commands[i];
        const auto& rec = records[i];
        ojson c{{"index", i}, {"atTime", cmd.at_time}, {"type", action_name(cmd.action)}};
        if (rec.tx) {
            c["actor"] = cmd.actor;
            c["node"] = *rec.node;
            c["txHash"] = rec.tx->hex();
            c["submit"] = rec.submit;
            auto receipt = chain.receipt(*rec.tx);
            if (rec.submit != "ACCEPTED") tx_status[i] = "REJECTED";
            else if (!receipt) tx_status[i] = "PENDING";
            else tx_status[i] = receipt->ok() ? "SUCCESS" : "FAILED";
            if (receipt && receipt->error) tx_error[i] = std::string(to_string(*receipt->error));
            if (rec.submit != "ACCEPTED") tx_error[i] = rec.submit;
            c["status"] = tx_status[i];
            c["error"] = tx_error[i].empty() ? ojson(nullptr) : ojson(tx_error[i]);
            c["height"] = receipt ? ojson(*chain.inclusion_height(*rec.tx)) : ojson(nullptr);
        } else if (rec.query_address) {
            c["address"] = rec.query_address->hex();
            auto results = ojson::array();
            std::optional<std::optional<Amount>> first;
            bool consistent = true;
            for (std::size_t j = 0; j < n; ++j) {
                results.push_back({{"node", j}, {"faulty", sim.node(j).faulty()},
                                   {"balance", detail::amount_or_error(rec.query_results[j])}});
                if (sim.node(j).faulty()) continue;
                if (!first) first = rec.query_results[j];
                else consistent = consistent && *first == rec.query_results[j];
            }
            queries.push_back({{"command", i}, {"address", rec.query_address->hex()}, {"atTime", cmd.at_time},
                               {"consistent", consistent}, {"results", std::move(results)}});
        } else if (rec.validator) {
            c["validator"] = *rec.validator;
            c["behavior"] = net::to_string(std::get<action::InjectFault>(cmd.action).behavior);
        }
        commands.push_back(std::move(c));
    }

    // Expectations -----------------------------------------------------------
    const auto& tip = chain.tip_state().contract;
    std::vector<std::string> event_kinds;
    for (const auto& e : chain.events_since(0)) event_kinds.emplace_back(event_name(e.event));

    auto expectations = ojson::array();
    for (std::size_t i = 0; i < sc.expectations.size(); ++i) {
        const auto& x = sc.expectations[i];
        bool ok = false;
        ojson actual;
        switch (x.kind) {
        case ExpectKind::OrgBalance: {
            auto want = detail::json_amount(x.value);
            ok = want.has_value();
            for (auto j : honest) {
                const auto& st = sim.node(j).chain().tip_state().contract;
                ok = ok && st.deployed && st.balance_of(st.organization) == *want;
            }
            actual = tip.deployed ? ojson(tip.balance_of(tip.organization).to_string()) : ojson("NotDeployed");
            break;
        }
        case ExpectKind::EventKinds:
            actual = event_kinds;
            ok = x.value.is_array() && x.value == nlohmann::json(event_kinds);
            break;
        case ExpectKind::TxStatus: {
            auto c = *x.command;
            auto full = tx_error[c].empty() ? tx_status[c] : tx_status[c] + ":" + tx_error[c];
            actual = full;
            ok = x.value.is_string() && (x.value == tx_status[c] || (!tx_error[c].empty() && x.value == tx_error[c]) ||
                                         x.value == full);
            break;
        }
        case ExpectKind::Query: {
            // A balance, or "NotDeployed" for a read before deployment.
            const auto& rec = records[*x.command];
            bool not_deployed = x.value == "NotDeployed";
            auto want = detail::json_amount(x.value);
            ok = not_deployed || want.has_value();
            for (auto j : honest) ok = ok && rec.query_results[j] == (not_deployed ? std::nullopt : want);
            actual = detail::amount_or_error(rec.query_results[ref]);
            break;
        }
        case ExpectKind::MinHeight:
            actual = result.min_honest_height;
            ok = x.value.is_number_unsigned() && result.min_honest_height >= x.value.get<std::uint64_t>();
            break;
        case ExpectKind::MaxHeight:
            actual = result.max_height;
            ok = x.value.is_number_unsigned() && result.max_height <= x.value.get<std::uint64_t>();
            break;
        case ExpectKind::Safety:
            actual = result.safety;
            ok = x.value.is_boolean() && x.value.get<bool>() == result.safety;
            break;
        case ExpectKind::Liveness:
            actual = result.liveness;
            ok = x.value.is_boolean() && x.value.get<bool>() == result.liveness;
            break;
        }
        result.expectations_met = result.expectations_met && ok;
        ojson e{{"index", i}, {"kind", to_string(x.kind)}};
        if (x.command) e["command"] = *x.command;
        e["expected"] = ojson::parse(x.value.dump());
        e["actual"] = std::move(actual);
        e["ok"] = ok;
        expectations.push_back(std::move(e));
    }

    if (!result.invariant_problems.empty()) result.exit_code = kExitInvariant;
    else if (!result.expectations_met) result.exit_code = kExitExpectation;

    // Artifacts --------------------------------------------------------------
    auto& art = result.artifacts;
    for (const auto& block : chain.blocks()) art.chain_jsonl += jsonio::to_json(block).dump() + "\n";
    for (const auto& e : chain.events_since(0)) art.events_jsonl += jsonio::to_json(e).dump() + "\n";
    ojson state{{"node", ref}, {"height", chain.height()}, {"tipHash", chain.tip_hash().hex()},
                {"state", jsonio::to_json(chain.tip_state())}};
    art.state_json = state.dump(2) + "\n";

    const auto& cfg = sim.config();
    auto nodes = ojson::array();
    for (std::size_t j = 0; j < n; ++j) {
        const auto& nd = sim.node(j);
        auto behavior = nd.behavior();
        nodes.push_back({{"index", j},
                         {"address", nd.address().hex()},
                         {"behavior", behavior ? ojson(net::to_string(*behavior)) : ojson("HONEST")},
                         {"height", nd.chain().height()},
                         {"tipHash", nd.chain().tip_hash().hex()},
                         {"stateRoot", vm::state_root(nd.chain().tip_state().contract).hex()}});
    }
    auto problems = ojson::array();
    for (const auto& p : result.invariant_problems) problems.push_back(p);

    ojson report;
    report["scenario"] = sc.name;
    report["seed"] = g.network.seed;
    report["networkId"] = g.network_id;
    report["blockGasLimit"] = g.block_gas_limit;
    report["gasPrice"] = g.gas_price;
    report["validators"] = cfg.n();
    report["faultTolerance"] = cfg.f();
    report["quorum"] = cfg.quorum();
    report["network"] = {{"gst", g.network.gst},
                         {"delta", g.network.delta},
                         {"preGstMaxDelay", g.network.pre_gst_max_delay},
                         {"preGstLossProb", g.network.pre_gst_loss_prob}};
    report["horizon"] = sc.horizon;
    report["eventsProcessed"] = sim.events_processed();
    report["referenceNode"] = ref;
    report["nodes"] = std::move(nodes);
    report["safety"] = {{"ok", result.safety}, {"violations", std::move(safety_problems)}};
    report["liveness"] = {{"ok", result.liveness},
                          {"minHonestHeight", result.min_honest_height},
                          {"maxHeight", result.max_height},
                          {"pendingTxs", pending}};
    report["conservation"] = {{"ok", result.conservation}, {"findings", std::move(audit)}};
    report["invariantProblems"] = std::move(problems);
    report["commands"] = std::move(commands);
    report["queries"] = std::move(queries);
    report["expectations"] = std::move(expectations);
    report["exitCode"] = result.exit_code;
    art.report_json = report.dump(2) + "\n";
    return result;
}

inline void write_artifacts(const std::filesystem::path& dir, const Artifacts& art) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& body) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        out << body;
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    };
    put("chain.jsonl", art.chain_jsonl);
    put("events.jsonl", art.events_jsonl);
    put("state.json", art.state_json);
    put("report.json", art.report_json);
}

} // namespace ledgersim::scenario
