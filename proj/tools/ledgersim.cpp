#include "ledgersim/config/genesis.hpp"
#include "ledgersim/consensus/quorum.hpp"
#include "ledgersim/io/json.hpp"
#include "ledgersim/scenario/replay.hpp"
#include "ledgersim/scenario/runner.hpp"
#include "ledgersim/scenario/scenario.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace ledgersim;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("SIM_SEED");
    if (!raw || !*raw) return std::nullopt;
    std::string s(raw);
    if (s.find_first_not_of("0123456789") != std::string::npos || s.size() > 20)
        throw std::runtime_error("SIM_SEED must be an unsigned integer");
    try {
        return std::stoull(s);
    } catch (const std::out_of_range&) {
        throw std::runtime_error("SIM_SEED does not fit in 64 bits");
    }
}

int cmd_run(const std::string& genesis_path, const std::string& scenario_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, bool traces) {
    config::GenesisConfig genesis;
    scenario::Scenario sc;
    scenario::RunOptions opt;
    try {
        genesis = config::parse_genesis(read_file(genesis_path));
        sc = scenario::parse_scenario(read_file(scenario_path));
        opt.seed = seed;
        if (auto e = env_seed()) opt.seed = e;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return scenario::kExitConfig;
    }

    std::filesystem::path dir(out_dir);
    std::ofstream net_trace;
    std::ofstream consensus_trace;
    try {
        std::filesystem::create_directories(dir);
        if (traces) {
            net_trace.open(dir / "network.jsonl", std::ios::binary | std::ios::trunc);
            consensus_trace.open(dir / "consensus.jsonl", std::ios::binary | std::ios::trunc);
            opt.network_trace = &net_trace;
            opt.consensus_trace = &consensus_trace;
        }
        auto result = scenario::run_scenario(genesis, sc, opt);
        scenario::write_artifacts(dir, result.artifacts);
        std::cout << "scenario " << sc.name << ": height " << result.min_honest_height << ", safety "
                  << (result.safety ? "ok" : "VIOLATED") << ", liveness " << (result.liveness ? "ok" : "lost")
                  << ", expectations " << (result.expectations_met ? "met" : "FAILED") << " -> exit "
                  << result.exit_code << '\n';
        for (const auto& p : result.invariant_problems) std::cerr << "invariant: " << p << '\n';
        return result.exit_code;
    } catch (const scenario::ScenarioError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return scenario::kExitConfig;
    }
}

int cmd_quorum_table(std::size_t max_n) {
    std::cout << "N\tF\tQ\n";
    for (const auto& row : consensus::quorum_table(max_n)) std::cout << row.n << '\t' << row.f << '\t' << row.q << '\n';
    return 0;
}

int cmd_replay(const std::string& chain_path, const std::string& genesis_path) {
    config::GenesisConfig genesis;
    std::ifstream dump(chain_path, std::ios::binary);
    try {
        genesis = config::parse_genesis(read_file(genesis_path));
        if (!dump) throw std::runtime_error("cannot open " + chain_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    auto result = scenario::replay_chain(dump, genesis);
    const auto& v = result.verdict;
    if (v.ok) {
        std::cout << "OK blocks=" << v.blocks << " height=" << result.chain.height()
                  << " stateRoot=" << vm::state_root(result.chain.tip_state().contract).hex() << '\n';
        return 0;
    }
    std::cout << "CORRUPT height=" << *v.height << " reason=" << v.reason << '\n';
    return 1;
}

int cmd_receipt(const std::string& chain_path, const std::string& genesis_path, const std::string& tx) {
    config::GenesisConfig genesis;
    Hash256 hash;
    std::ifstream dump(chain_path, std::ios::binary);
    try {
        genesis = config::parse_genesis(read_file(genesis_path));
        hash = Hash256::from_hex(tx);
        if (!dump) throw std::runtime_error("cannot open " + chain_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    auto result = scenario::replay_chain(dump, genesis);
    if (!result.verdict.ok) {
        std::cerr << "chain dump is corrupt at height " << *result.verdict.height << ": " << result.verdict.reason
                  << '\n';
        return 1;
    }
    auto receipt = result.chain.receipt(hash);
    if (!receipt) {
        std::cerr << "no receipt for " << hash.hex() << '\n';
        return 1;
    }
    auto j = jsonio::to_json(*receipt);
    j["height"] = *result.chain.inclusion_height(hash);
    std::cout << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic consortium ledger simulator"};
    app.require_subcommand(1);

    std::string genesis_path, scenario_path, out_dir = "out", chain_path, tx;
    std::optional<std::uint64_t> seed;
    bool traces = false;
    std::size_t max_n = 10;

    auto* run = app.add_subcommand("run", "Run a scenario and write chain.jsonl, events.jsonl, state.json, report.json");
    run->add_option("--genesis", genesis_path, "Genesis file")->required();
    run->add_option("--scenario", scenario_path, "Scenario file")->required();
    run->add_option("--seed", seed, "Network seed (SIM_SEED overrides)");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_flag("--trace", traces, "Also write network.jsonl and consensus.jsonl");

    auto* table = app.add_subcommand("quorum-table", "Print N, F and Q");
    table->add_option("--max-n", max_n, "Largest validator count")->check(CLI::PositiveNumber)->capture_default_str();

    auto* replay = app.add_subcommand("replay", "Re-execute and verify a chain dump");
    replay->add_option("--chain", chain_path, "chain.jsonl")->required();
    replay->add_option("--genesis", genesis_path, "Genesis file")->required();

    auto* receipt = app.add_subcommand("receipt", "Look up a receipt by transaction hash");
    receipt->add_option("--chain", chain_path, "chain.jsonl")->required();
    receipt->add_option("--genesis", genesis_path, "Genesis file")->required();
    receipt->add_option("--tx", tx, "Transaction hash")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(genesis_path, scenario_path, seed, out_dir, traces);
        if (*table) return cmd_quorum_table(max_n);
        if (*replay) return cmd_replay(chain_path, genesis_path);
        if (*receipt) return cmd_receipt(chain_path, genesis_path, tx);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return scenario::kExitInvariant;
    }
    return 0;
}
