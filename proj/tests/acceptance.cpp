// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "support/differential.hpp"
#include "support/fixtures.hpp"
#include "support/keccak_oracle.hpp"
#include "support/keccak_vectors.hpp"

#include "ledgersim/config/genesis.hpp"
#include "ledgersim/config/migrate.hpp"
#include "ledgersim/consensus/quorum.hpp"
#include "ledgersim/crypto/keccak.hpp"
#include "ledgersim/scenario/runner.hpp"
#include "ledgersim/sim/simulation.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ledgersim;
using nlohmann::json;

namespace {

// Pinned parameters.
constexpr double kQuorumBudget = 1.0;
constexpr double kSafetyBudget = 60.0;
constexpr double kSilentBudget = 20.0;
constexpr double kOracleBudget = 120.0;

constexpr std::uint64_t kSafetyRuns = 200;
constexpr std::uint64_t kSafetyMinBlocks = 50;
constexpr net::Time kSafetyLimit = 20000;
constexpr std::uint64_t kSilentRuns = 50;
constexpr net::Time kSilentHorizon = 1000;
constexpr std::uint64_t kLivenessRuns = 100;
constexpr net::Time kLivenessHorizon = 1000;
constexpr std::uint64_t kLivenessMinBlocks = 30;
constexpr std::size_t kExhaustiveDepth = 7;
constexpr std::size_t kRandomSequences = 1000;
constexpr std::size_t kRandomLength = 100;
constexpr int kMigrateCalls = 5;
constexpr std::uint64_t kMigrateSeeds = 10;

const std::string kScenarioDir = LEDGERSIM_SCENARIO_DIR;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

struct Report {
    int failures = 0;

    void line(int id, const char* name, const Verdict& v, double seconds, std::optional<double> budget) {
        bool pass = v.pass && (!budget || seconds < *budget);
        if (!pass) ++failures;
        std::printf("%s %2d %-22s %7.2fs", pass ? "PASS" : "FAIL", id, name, seconds);
        if (budget) std::printf(" (<%gs)", *budget);
        else std::printf("        ");
        std::printf("  %s\n", v.detail.c_str());
        std::fflush(stdout);
    }

    template <class F>
    void check(int id, const char* name, std::optional<double> budget, F body) {
        auto start = Clock::now();
        Verdict v;
        try {
            v = body();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        line(id, name, v, std::chrono::duration<double>(Clock::now() - start).count(), budget);
    }
};

// Conservation ---------------------------------------------------------------

/// Replays every transaction of `chain` one at a time: stored receipts and
/// states must match, a failed receipt must leave the state root unchanged,
/// and the organization balance must equal successful AddFunds minus
/// successful AllowanceSent.
std::optional<std::string> conservation_problem(const node::Chain& chain) {
    vm::LedgerState st = chain.state_at(0);
    uint128 added = 0, sent = 0;
    for (std::uint64_t h = 1; h <= chain.height(); ++h) {
        const auto& block = chain.at(h);
        const auto& receipts = chain.receipts_at(h);
        if (receipts.size() != block.txs.size()) return "receipt count differs at height " + std::to_string(h);
        for (std::size_t i = 0; i < block.txs.size(); ++i) {
            const auto& tx = block.txs[i];
            auto before = vm::state_root(st.contract);
            auto rc = vm::apply_in_place(st, tx);
            if (rc != receipts[i]) return "stored receipt differs at height " + std::to_string(h);
            if (!rc.ok()) {
                if (vm::state_root(st.contract) != before)
                    return "failed receipt changed the state root at height " + std::to_string(h);
                continue;
            }
            if (const auto* p = std::get_if<payload::AddFunds>(&tx.payload)) added += p->amt.value();
            if (const auto* p = std::get_if<payload::SendAllowance>(&tx.payload)) sent += p->amount.value();
        }
        if (st != chain.state_at(h)) return "stored state differs at height " + std::to_string(h);
    }
    const auto& c = st.contract;
    auto org = c.deployed ? c.balance_of(c.organization).value() : 0;
    if (added < sent || org != added - sent) return "organization balance is not AddFunds - AllowanceSent";
    return std::nullopt;
}

struct Conservation {
    std::uint64_t chains = 0;
    std::uint64_t transactions = 0;
    std::vector<std::string> problems;

    void audit(const sim::Simulation& sim, const std::string& run) {
        for (auto i : sim.honest()) {
            const auto& chain = sim.node(i).chain();
            ++chains;
            for (const auto& b : chain.blocks()) transactions += b.txs.size();
            if (auto p = conservation_problem(chain)) problems.push_back(run + " node " + std::to_string(i) + ": " + *p);
        }
    }
};

Conservation g_conservation;

// Workloads ------------------------------------------------------------------

sim::SimulationSetup reference_setup(std::uint64_t seed) {
    auto g = config::reference_genesis();
    g.network.seed = seed;
    return config::simulation_setup(g);
}

/// Deploy followed by random contract calls from two senders, submitted to
/// randomly chosen honest nodes every `spacing` time units.
void drive_workload(sim::Simulation& sim, std::uint64_t seed, std::size_t calls, net::Time spacing) {
    const auto& clients = sim.setup().clients;
    std::mt19937_64 rng(seed ^ 0x5eed);
    std::vector<Address> recipients{clients[2].address, clients[3].address};
    std::vector<std::uint64_t> nonce(2, 0);
    auto submit = [&](std::size_t who, TxPayload p) {
        auto honest = sim.honest();
        auto tx = make_transaction(clients[who], sim.scheme(), nonce[who], std::move(p));
        if (!sim.submit(honest[rng() % honest.size()], tx)) ++nonce[who];
    };
    submit(0, payload::Deploy{});
    for (std::size_t k = 0; k < calls; ++k) {
        sim.advance_to(sim.now() + spacing);
        auto who = rng() % 10 < 8 ? 0 : 1;
        auto r = recipients[rng() % 2];
        switch (rng() % 5) {
        case 0: submit(who, payload::AddRecipient{r}); break;
        case 1: submit(who, payload::RemoveRecipient{r}); break;
        case 2: submit(who, payload::RegisterBankAccount{r, "x"}); break;
        case 3: submit(who, payload::AddFunds{Amount(rng() % 50)}); break;
        default: submit(who, payload::SendAllowance{r, Amount(rng() % 30)}); break;
        }
    }
}

/// Pairwise comparison of honest chains: same hash at every shared height.
std::size_t forks(const sim::Simulation& sim) {
    std::size_t bad = 0;
    auto honest = sim.honest();
    for (std::size_t a = 0; a < honest.size(); ++a)
        for (std::size_t b = a + 1; b < honest.size(); ++b) {
            const auto& x = sim.node(honest[a]).chain();
            const auto& y = sim.node(honest[b]).chain();
            for (std::uint64_t h = 0; h <= std::min(x.height(), y.height()); ++h) bad += x.hash_at(h) != y.hash_at(h);
        }
    return bad;
}

// Criteria -------------------------------------------------------------------

Verdict quorum_math() {
    auto rows = consensus::quorum_table(100);
    if (rows.size() != 100) return {false, "table size"};
    if (rows[3].n != 4 || rows[3].f != 1 || rows[3].q != 3) return {false, "F(4)/Q(4) wrong"};
    for (const auto& r : rows) {
        std::size_t q = 0;
        while (3 * q <= 2 * r.n) ++q;
        if (r.q != q) return {false, "Q(" + std::to_string(r.n) + ")=" + std::to_string(r.q) + ", expected " + std::to_string(q)};
        if (r.f != (r.n - 1) / 3) return {false, "F(" + std::to_string(r.n) + ") wrong"};
    }
    return {true, "F(4)=1 Q(4)=3, N=1..100 match brute force"};
}

Verdict safety_with_equivocator() {
    std::size_t forked_runs = 0, root_mismatch = 0, short_runs = 0;
    std::uint64_t min_blocks = UINT64_MAX;
    for (std::uint64_t seed = 1; seed <= kSafetyRuns; ++seed) {
        sim::Simulation sim(reference_setup(seed));
        sim.inject_fault(seed % 4, net::Behavior::Equivocate);
        drive_workload(sim, seed, 40, 10);
        auto settled = [&] {
            auto honest = sim.honest();
            auto h = sim.node(honest[0]).chain().height();
            if (h < kSafetyMinBlocks) return false;
            for (auto i : honest)
                if (sim.node(i).chain().height() != h) return false;
            return true;
        };
        if (!sim.run_while_not(settled, kSafetyLimit)) ++short_runs;
        min_blocks = std::min(min_blocks, sim.min_honest_height());
        if (!sim.safety_violations().empty() || forks(sim) != 0) ++forked_runs;
        std::set<Hash256> roots;
        for (auto i : sim.honest()) roots.insert(vm::state_root(sim.node(i).chain().tip_state().contract));
        root_mismatch += roots.size() != 1;
        g_conservation.audit(sim, "safety seed " + std::to_string(seed));
    }
    std::ostringstream d;
    d << kSafetyRuns << " runs, forks " << forked_runs << ", root mismatches " << root_mismatch << ", short runs "
      << short_runs << ", min blocks " << min_blocks;
    return {forked_runs == 0 && root_mismatch == 0 && short_runs == 0, d.str()};
}

Verdict halt_with_two_silent() {
    const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    std::size_t halted = 0, violations = 0;
    for (std::uint64_t seed = 1; seed <= kSilentRuns; ++seed) {
        sim::Simulation sim(reference_setup(seed));
        auto [a, b] = pairs[seed % 6];
        sim.inject_fault(a, net::Behavior::Silent);
        sim.inject_fault(b, net::Behavior::Silent);
        drive_workload(sim, seed, 10, 20);
        sim.advance_to(kSilentHorizon);
        halted += sim.max_height() == 0;
        violations += sim.safety_violations().size() + forks(sim);
        g_conservation.audit(sim, "silent seed " + std::to_string(seed));
    }
    std::ostringstream d;
    d << halted << "/" << kSilentRuns << " halted at height 0, safety violations " << violations;
    return {halted == kSilentRuns && violations == 0, d.str()};
}

Verdict post_gst_liveness() {
    std::size_t ok = 0;
    std::uint64_t worst = UINT64_MAX;
    for (std::uint64_t seed = 1; seed <= kLivenessRuns; ++seed) {
        auto setup = reference_setup(seed);
        setup.network.gst = 100;
        setup.network.delta = 5;
        sim::Simulation sim(setup);
        drive_workload(sim, seed, 30, 15);
        sim.advance_to(kLivenessHorizon);
        auto h = sim.min_honest_height();
        worst = std::min(worst, h);
        ok += h >= kLivenessMinBlocks && sim.safety_violations().empty();
        g_conservation.audit(sim, "liveness seed " + std::to_string(seed));
    }
    std::ostringstream d;
    d << ok << "/" << kLivenessRuns << " runs reached " << kLivenessMinBlocks << " blocks by t=" << kLivenessHorizon
      << ", fewest " << worst;
    return {ok == kLivenessRuns, d.str()};
}

std::vector<oracle::Letter> oracle_alphabet(const std::vector<Address>& recipients) {
    std::vector<oracle::Letter> out;
    for (std::size_t s = 0; s < 2; ++s)
        for (const auto& r : recipients) {
            out.push_back({s, payload::AddRecipient{r}});
            out.push_back({s, payload::RemoveRecipient{r}});
            out.push_back({s, payload::RegisterBankAccount{r, "x"}});
            out.push_back({s, payload::AddFunds{Amount(5)}});
            out.push_back({s, payload::SendAllowance{r, Amount(3)}});
        }
    return out;
}

/// Submits deploy + `letters` to one node, waits for every honest node to
/// finalize all of them, then walks each honest chain against the reference.
std::optional<std::string> replicated_sequence(std::uint64_t seed, const std::vector<oracle::Letter>& alphabet,
                                               std::size_t length) {
    auto setup = fixtures::setup(4, seed, 0);
    setup.network.pre_gst_loss_prob = 0;
    sim::Simulation sim(setup);
    std::vector<crypto::KeyPair> senders{setup.clients[0], setup.clients[1]};
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> nonce(2, 0);
    std::set<Hash256> submitted;
    std::vector<Hash256> last(2);
    auto via = seed % 4;
    auto send = [&](std::size_t who, TxPayload p) {
        auto tx = make_transaction(senders[who], sim.scheme(), nonce[who]++, std::move(p));
        submitted.insert(tx_hash(tx));
        last[who] = tx_hash(tx);
        if (sim.submit(via, tx)) throw std::logic_error("submission rejected");
    };
    send(0, payload::Deploy{});
    for (std::size_t k = 0; k < length; ++k) {
        const auto& l = alphabet[rng() % alphabet.size()];
        send(l.sender, l.payload);
    }
    auto all_final = [&] {
        for (auto i : sim.honest())
            for (std::size_t who = 0; who < 2; ++who)
                if (nonce[who] && !sim.node(i).chain().receipt(last[who])) return false;
        return true;
    };
    if (!sim.run_while_not(all_final, 5000)) return "transactions not finalized";

    for (auto i : sim.honest()) {
        const auto& chain = sim.node(i).chain();
        oracle::ReferenceContract ref;
        std::set<Hash256> seen;
        for (std::uint64_t h = 1; h <= chain.height(); ++h) {
            const auto& block = chain.at(h);
            for (std::size_t t = 0; t < block.txs.size(); ++t) {
                seen.insert(tx_hash(block.txs[t]));
                if (oracle::to_ref(chain.receipts_at(h)[t]) != ref.apply(oracle::to_ref(block.txs[t])))
                    return "receipt mismatch at node " + std::to_string(i) + " height " + std::to_string(h);
            }
            if (oracle::to_ref(chain.state_at(h)) != ref.state())
                return "state mismatch at node " + std::to_string(i) + " height " + std::to_string(h);
        }
        if (seen != submitted) return "node " + std::to_string(i) + " finalized a different transaction set";
    }
    if (forks(sim) != 0) return "honest chains diverge";
    g_conservation.audit(sim, "oracle seed " + std::to_string(seed));
    return std::nullopt;
}

Verdict contract_oracle() {
    auto setup = fixtures::setup(4, 1, 0);
    std::vector<crypto::KeyPair> senders{setup.clients[0], setup.clients[1]};
    std::vector<Address> recipients{setup.clients[2].address, fixtures::key(0xb1).address};
    auto alphabet = oracle_alphabet(recipients);

    auto deploy_first = [&](vm::LedgerState& st, oracle::ReferenceContract& ref) {
        Transaction tx;
        tx.sender = senders[0].address;
        tx.payload = payload::Deploy{};
        tx.gas_limit = kDeployGas;
        vm::apply_in_place(st, tx);
        ref.apply(oracle::to_ref(tx));
    };
    auto ex = oracle::exhaustive_check(senders, alphabet, kExhaustiveDepth, deploy_first);
    std::uint64_t expected = 0, p = 1;
    for (std::size_t d = 0; d <= kExhaustiveDepth; ++d, p *= alphabet.size()) expected += p;
    if (!ex.mismatch.empty()) return {false, "exhaustive: " + ex.mismatch};
    if (ex.sequences != expected) return {false, "exhaustive: sequence count " + std::to_string(ex.sequences)};

    for (std::uint64_t seed = 1; seed <= kRandomSequences; ++seed)
        if (auto problem = replicated_sequence(seed, alphabet, kRandomLength))
            return {false, "random seed " + std::to_string(seed) + ": " + *problem};

    std::ostringstream d;
    d << alphabet.size() << " letters, " << ex.sequences << " sequences of length <=" << kExhaustiveDepth << " ("
      << ex.distinct_states << " states), " << kRandomSequences << "x" << kRandomLength << " replicated on 4 nodes";
    return {true, d.str()};
}

Verdict allowance_flow() {
    auto genesis = config::parse_genesis(read_file(kScenarioDir + "/genesis.json"));
    auto r = scenario::run_scenario(genesis, scenario::parse_scenario(read_file(kScenarioDir + "/allowance_flow.json")));
    auto report = json::parse(r.artifacts.report_json);
    for (const auto& e : report["expectations"])
        if (!e["ok"].get<bool>()) return {false, "scenario expectation failed: " + e.dump()};
    auto state = json::parse(r.artifacts.state_json)["state"];
    auto org = state["organization"].get<std::string>();
    if (state["balances"][org] != "700") return {false, "artifact balance " + state["balances"][org].dump()};
    std::vector<std::string> kinds;
    std::istringstream events(r.artifacts.events_jsonl);
    for (std::string line; std::getline(events, line);) kinds.push_back(json::parse(line)["event"]["type"]);
    if (kinds != std::vector<std::string>{"BankAccountRegistered", "FundsAdded", "AllowanceSent"})
        return {false, "events out of order"};
    if (!r.conservation || r.exit_code != 0) return {false, "run exit " + std::to_string(r.exit_code)};

    // Same flow driven directly; getBalance answered by every node.
    sim::Simulation sim(config::simulation_setup(genesis));
    const auto& org_key = sim.setup().clients[0];
    const auto& bob = sim.setup().clients[1];
    std::vector<TxPayload> flow = {payload::Deploy{}, payload::AddRecipient{bob.address},
                                   payload::RegisterBankAccount{bob.address, "IBAN-001"},
                                   payload::AddFunds{Amount(1000)}, payload::SendAllowance{bob.address, Amount(300)}};
    Hash256 last;
    for (std::uint64_t n = 0; n < flow.size(); ++n) {
        auto tx = make_transaction(org_key, sim.scheme(), n, flow[n]);
        last = tx_hash(tx);
        sim.submit(0, tx);
        sim.advance_to(sim.now() + 10);
    }
    auto everywhere = [&] {
        for (std::size_t i = 0; i < sim.size(); ++i)
            if (!sim.node(i).chain().receipt(last)) return false;
        return true;
    };
    if (!sim.run_while_not(everywhere, 2000)) return {false, "direct flow did not finalize on all nodes"};
    for (std::size_t i = 0; i < sim.size(); ++i) {
        if (sim.node(i).get_balance(org_key.address) != Amount(700))
            return {false, "node " + std::to_string(i) + " org balance " + sim.node(i).get_balance(org_key.address).to_string()};
        if (sim.node(i).get_balance(bob.address) != sim.node(0).get_balance(bob.address))
            return {false, "recipient balance differs across nodes"};
    }
    g_conservation.audit(sim, "allowance flow");
    return {true, "balance 700 on 4/4 nodes, events BankAccountRegistered, FundsAdded, AllowanceSent"};
}

Verdict conservation() {
    std::ostringstream d;
    d << g_conservation.chains << " honest chains, " << g_conservation.transactions << " transactions replayed";
    if (!g_conservation.problems.empty())
        return {false, d.str() + "; first problem: " + g_conservation.problems.front()};
    return {g_conservation.chains > 0, d.str()};
}

Verdict keccak_vectors() {
    std::size_t matched = 0;
    bool empty_seen = false;
    for (const auto& v : oracle::kVectors) {
        auto lib = crypto::keccak256(std::string_view(v.input)).hex();
        auto ref = oracle::hex(oracle::keccak256(v.input));
        if (lib != v.digest || ref != v.digest) return {false, "mismatch on a " + std::to_string(v.input.size()) + "-byte input"};
        ++matched;
        empty_seen = empty_seen || v.input.empty();
    }
    return {matched >= 5 && empty_seen, std::to_string(matched) + " vectors incl. empty string"};
}

Verdict idempotent_migration() {
    for (std::uint64_t seed = 1; seed <= kMigrateSeeds; ++seed) {
        sim::Simulation sim(reference_setup(seed));
        const auto& deployer = sim.setup().clients[0];
        std::set<Address> addresses;
        int submitted = 0;
        for (int k = 0; k < kMigrateCalls; ++k) {
            auto r = config::migrate_deploy(sim, deployer, 0, 2000);
            addresses.insert(r.contract);
            submitted += r.submitted;
            sim.advance_to(sim.now() + 25);
        }
        sim.advance_to(sim.now() + 500);
        for (auto i : sim.honest()) {
            std::size_t deploys = 0;
            for (const auto& b : sim.node(i).chain().blocks())
                for (const auto& tx : b.txs) deploys += std::holds_alternative<payload::Deploy>(tx.payload);
            if (deploys != 1) return {false, "seed " + std::to_string(seed) + ": " + std::to_string(deploys) + " deploys"};
        }
        if (addresses.size() != 1 || submitted != 1)
            return {false, "seed " + std::to_string(seed) + ": " + std::to_string(addresses.size()) + " addresses"};
    }
    return {true, std::to_string(kMigrateCalls) + " calls x " + std::to_string(kMigrateSeeds) +
                      " seeds: 1 Deploy tx, 1 address"};
}

Verdict determinism() {
    auto genesis = config::parse_genesis(read_file(kScenarioDir + "/genesis.json"));
    std::size_t runs = 0;
    for (const char* name : {"allowance_flow.json", "equivocation.json", "two_silent.json", "non_org_allowance.json"}) {
        auto sc = scenario::parse_scenario(read_file(kScenarioDir + "/" + name));
        for (std::uint64_t seed : {1ull, 7ull, 2024ull}) {
            scenario::RunOptions opt;
            opt.seed = seed;
            auto a = scenario::run_scenario(genesis, sc, opt);
            auto b = scenario::run_scenario(genesis, sc, opt);
            if (a.artifacts.chain_jsonl != b.artifacts.chain_jsonl || a.artifacts.events_jsonl != b.artifacts.events_jsonl ||
                a.artifacts.report_json != b.artifacts.report_json || a.artifacts.state_json != b.artifacts.state_json)
                return {false, std::string(name) + " seed " + std::to_string(seed) + " differs"};
            ++runs;
        }
    }
    return {true, std::to_string(runs) + " scenario/seed pairs byte-identical"};
}

Verdict config_fidelity() {
    auto genesis = config::parse_genesis(read_file(kScenarioDir + "/genesis.json"));
    if (genesis.network_id != 1337 || genesis.block_gas_limit != 4500000 || genesis.gas_price != 0 ||
        genesis.validators.size() != 4)
        return {false, "parsed values differ"};
    auto r = scenario::run_scenario(genesis, scenario::parse_scenario(read_file(kScenarioDir + "/allowance_flow.json")));
    auto report = json::parse(r.artifacts.report_json);
    bool echoed = report["networkId"] == 1337 && report["blockGasLimit"] == 4500000 && report["gasPrice"] == 0 &&
                  report["validators"] == 4;
    if (!echoed) return {false, "report echo: " + report.dump()};
    return {r.exit_code == 0, "networkId 1337, blockGasLimit 4500000, gasPrice 0, 4 validators echoed"};
}

} // namespace

int main() {
    Report rep;
    rep.check(1, "quorum-math", kQuorumBudget, quorum_math);
    rep.check(2, "safety-equivocator", kSafetyBudget, safety_with_equivocator);
    rep.check(3, "halt-two-silent", kSilentBudget, halt_with_two_silent);
    rep.check(4, "post-gst-liveness", std::nullopt, post_gst_liveness);
    rep.check(5, "contract-oracle", kOracleBudget, contract_oracle);
    rep.check(6, "allowance-flow", std::nullopt, allowance_flow);
    rep.check(7, "conservation", std::nullopt, conservation);
    rep.check(8, "keccak-vectors", std::nullopt, keccak_vectors);
    rep.check(9, "idempotent-migration", std::nullopt, idempotent_migration);
    rep.check(10, "determinism", std::nullopt, determinism);
    rep.check(11, "config-fidelity", std::nullopt, config_fidelity);
    std::printf("%d/11 criteria passed\n", 11 - rep.failures);
    return rep.failures == 0 ? 0 : 1;
}
