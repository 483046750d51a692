#pragma once

#include "ledgersim/net/byzantine.hpp"
#include "ledgersim/net/network.hpp"
#include "ledgersim/node/node.hpp"

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ledgersim::sim {

struct SimulationSetup {
    std::vector<crypto::KeyPair> validators;
    /// Client accounts allowed to sign transactions.
    std::vector<crypto::KeyPair> clients;
    std::uint64_t base_round_timeout = 20;
    std::uint64_t block_gas_limit = kDefaultBlockGasLimit;
    net::NetworkParams network;
    std::shared_ptr<crypto::SignatureScheme> scheme;
};

struct SafetyViolation {
    std::uint64_t height = 0;
    std::size_t first_node = 0;
    std::size_t second_node = 0;
    Hash256 first_hash;
    Hash256 second_hash;
};

/// Genesis shared by every node: empty contract state, zero parent, no seals.
inline Block make_genesis() {
    return genesis_block(vm::state_root(vm::ContractState{}));
}

/// Deterministic single-threaded run of N validators over the simulated
/// network. (seed, setup, inputs) fully determine every event.
class Simulation {
  public:
    explicit Simulation(SimulationSetup setup)
        : setup_(std::move(setup)), network_(setup_.network, setup_.validators.size()) {
        if (setup_.validators.empty()) throw std::invalid_argument("simulation needs at least one validator");
        if (!setup_.scheme) setup_.scheme = std::make_shared<crypto::KeyedHashScheme>();
        for (const auto& k : setup_.validators) setup_.scheme->register_key(k);
        for (const auto& k : setup_.clients) setup_.scheme->register_key(k);

        std::vector<Address> addrs;
        for (const auto& k : setup_.validators) addrs.push_back(k.address);
        config_ = consensus::ConsensusConfig(addrs, setup_.base_round_timeout);

        for (std::size_t i = 0; i < setup_.validators.size(); ++i) {
            index_[addrs[i]] = i;
            nodes_.emplace_back(node::NodeSetup{setup_.validators[i], config_, setup_.block_gas_limit, setup_.scheme,
                                                make_genesis(), vm::LedgerState{}});
        }
        last_finalized_at_.assign(nodes_.size(), std::nullopt);
    }

    std::size_t size() const { return nodes_.size(); }
    const node::Node& node(std::size_t i) const { return nodes_.at(i); }
    const consensus::ConsensusConfig& config() const { return config_; }
    const crypto::SignatureScheme& scheme() const { return *setup_.scheme; }
    const SimulationSetup& setup() const { return setup_; }
    const net::NetworkParams& params() const { return network_.params(); }
    net::Time now() const { return now_; }
    std::uint64_t events_processed() const { return events_; }

    void set_traces(std::ostream* network_trace, std::ostream* consensus_trace) {
        network_.set_trace(network_trace, config_.validators);
        for (auto& n : nodes_) n.set_consensus_trace(consensus_trace);
    }

    void inject_fault(std::size_t i, net::Behavior behavior) {
        nodes_.at(i).make_byzantine(behavior, net::derive_stream(setup_.network.seed, "byzantine:" + std::to_string(i)));
    }

    void set_gst_now() {
        if (now_ < network_.params().gst) network_.set_gst(now_);
    }

    std::vector<std::size_t> honest() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (!nodes_[i].faulty()) out.push_back(i);
        return out;
    }

    std::optional<node::SubmitError> submit(std::size_t i, const Transaction& tx) {
        ensure_started();
        node::NodeOutput out;
        auto err = nodes_.at(i).submit(tx, out);
        apply(i, out);
        return err;
    }

    /// Processes every event strictly before `t`, then sets the clock to `t`.
    void advance_to(net::Time t) {
        ensure_started();
        auto& q = network_.queue();
        while (!q.empty() && q.peek_time() < t) step();
        now_ = std::max(now_, t);
    }

    /// Runs until `done()` holds (checked after each event) or the clock would
    /// pass `limit`. Returns whether `done()` held.
    template <class Pred>
    bool run_while_not(Pred done, net::Time limit) {
        ensure_started();
        auto& q = network_.queue();
        if (done()) return true;
        while (!q.empty() && q.peek_time() <= limit) {
            step();
            if (done()) return true;
        }
        now_ = std::max(now_, limit);
        return done();
    }

    std::uint64_t min_honest_height() const {
        std::optional<std::uint64_t> h;
        for (auto i : honest()) h = std::min(h.value_or(UINT64_MAX), nodes_[i].chain().height());
        return h.value_or(0);
    }

    std::uint64_t max_height() const {
        std::uint64_t h = 0;
        for (const auto& n : nodes_) h = std::max(h, n.chain().height());
        return h;
    }

    /// Honest-vs-honest disagreements observed at finalization time.
    const std::vector<SafetyViolation>& safety_violations() const { return violations_; }

    std::optional<net::Time> last_finalized_at(std::size_t i) const { return last_finalized_at_.at(i); }

  private:
    void ensure_started() {
        if (started_) return;
        started_ = true;
        for (std::size_t i = 0; i < nodes_.size(); ++i) apply(i, nodes_[i].start(now_));
    }

    void step() {
        auto ev = network_.queue().pop();
        now_ = ev.time;
        ++events_;
        auto& target = nodes_[ev.target];
        node::NodeOutput out;
        if (const auto* d = std::get_if<net::Delivery>(&ev.payload))
            out = target.on_deliver(config_.validators[d->from], d->message, now_);
        else
            out = target.on_timer(std::get<net::TimerFire>(ev.payload), now_);
        apply(ev.target, out);
    }

    void apply(std::size_t from, const node::NodeOutput& out) {
        const auto& sender = nodes_[from];
        bool silent = sender.behavior() == net::Behavior::Silent;
        if (!silent) {
            for (const auto& env : out.sends) {
                if (env.to) {
                    network_.send(from, index_.at(*env.to), env.message, now_);
                } else {
                    for (std::size_t j = 0; j < nodes_.size(); ++j)
                        if (j != from) network_.send(from, j, env.message, now_);
                }
            }
        }
        for (const auto& t : out.timers) network_.schedule_timer(from, t.fire, t.at);
        for (auto h : out.finalized) record_finalized(from, h);
    }

    void record_finalized(std::size_t i, std::uint64_t h) {
        last_finalized_at_[i] = now_;
        if (nodes_[i].faulty()) return;
        const auto& hash = nodes_[i].chain().hash_at(h);
        auto [it, fresh] = first_final_.try_emplace(h, i, hash);
        if (!fresh && it->second.second != hash)
            violations_.push_back({h, it->second.first, i, it->second.second, hash});
    }

    SimulationSetup setup_;
    net::Network network_;
    consensus::ConsensusConfig config_;
    std::vector<node::Node> nodes_;
    std::map<Address, std::size_t> index_;
    std::map<std::uint64_t, std::pair<std::size_t, Hash256>> first_final_;
    std::vector<SafetyViolation> violations_;
    std::vector<std::optional<net::Time>> last_finalized_at_;
    net::Time now_ = 0;
    std::uint64_t events_ = 0;
    bool started_ = false;
};

} // namespace ledgersim::sim
