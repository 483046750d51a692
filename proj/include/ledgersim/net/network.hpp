#pragma once

#include "ledgersim/consensus/messages.hpp"
#include "ledgersim/crypto/keccak.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace ledgersim::net {

using Time = std::uint64_t;
using Rng = std::mt19937_64;

/// Independent generator for a named stream. Streams are keyed by label, so
/// adding a node never shifts the draws of another stream.
inline Rng derive_stream(std::uint64_t master_seed, std::string_view label) {
    Writer w;
    w.u64(master_seed);
    w.text(label);
    auto h = crypto::keccak256(w.data());
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | h.bytes[i];
    return Rng(seed);
}

/// Eventually-synchronous network model. Before GST messages may be lost
/// and are delayed up to `pre_gst_max_delay` (a finite stand-in for an
/// unbounded delay); from GST on nothing is lost and delay is at most `delta`.
struct NetworkParams {
    Time gst = 100;
    Time delta = 5;
    Time pre_gst_max_delay = 50;
    double pre_gst_loss_prob = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (delta < 1) throw std::invalid_argument("delta must be at least 1");
        if (pre_gst_max_delay < 1) throw std::invalid_argument("preGstMaxDelay must be at least 1");
        if (!(pre_gst_loss_prob >= 0.0 && pre_gst_loss_prob <= 1.0))
            throw std::invalid_argument("preGstLossProb must lie in [0, 1]");
    }

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Delay for a message sent at `now`, or nullopt if it is lost.
inline std::optional<Time> sample_delay(Time now, const NetworkParams& p, Rng& rng) {
    if (now >= p.gst) return std::uniform_int_distribution<Time>(1, p.delta)(rng);
    if (p.pre_gst_loss_prob > 0.0 && std::bernoulli_distribution(p.pre_gst_loss_prob)(rng)) return std::nullopt;
    return std::uniform_int_distribution<Time>(1, p.pre_gst_max_delay)(rng);
}

struct TxGossip {
    Transaction tx;
};

/// Finalized blocks pushed to a validator that is still working on an
/// older height.
struct BlockSync {
    std::vector<Block> blocks;
};

using NetMessage = std::variant<consensus::ConsensusMessage, TxGossip, BlockSync>;

inline std::string_view message_kind(const NetMessage& m) {
    if (const auto* c = std::get_if<consensus::ConsensusMessage>(&m)) return consensus::to_string(c->kind);
    if (std::holds_alternative<TxGossip>(m)) return "TX";
    return "BLOCK_SYNC";
}

enum class TimerKind : std::uint8_t { Round, Advance };

struct TimerFire {
    TimerKind kind = TimerKind::Round;
    std::uint64_t height = 0;
    std::uint64_t generation = 0;
};

struct Delivery {
    std::size_t from = 0;
    NetMessage message;
};

enum class EventKind : std::uint8_t { Deliver, Timer };

struct SimEvent {
    Time time = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Deliver;
    std::size_t target = 0;
    std::variant<Delivery, TimerFire> payload;
};

class EmptyQueue : public std::logic_error {
  public:
    EmptyQueue() : std::logic_error("event queue is empty") {}
};

/// Min-queue on (time, seq). Sequence numbers are handed out at scheduling
/// time and strictly increase, which makes ties deterministic.
class EventQueue {
  public:
    std::uint64_t next_seq() { return seq_++; }

    void push(SimEvent ev) { heap_.push(std::move(ev)); }

    SimEvent pop() {
        if (heap_.empty()) throw EmptyQueue();
        SimEvent ev = heap_.top();
        heap_.pop();
        if (ev.time < now_) throw std::logic_error("event scheduled in the past");
        now_ = ev.time;
        return ev;
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    Time peek_time() const {
        if (heap_.empty()) throw EmptyQueue();
        return heap_.top().time;
    }
    Time now() const { return now_; }

  private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::uint64_t seq_ = 0;
    Time now_ = 0;
};

/// Message transport between a fixed set of nodes, with an optional JSONL
/// trace of every send attempt.
class Network {
  public:
    Network(NetworkParams params, std::size_t node_count)
        : params_(params), node_count_(node_count), rng_(derive_stream(params.seed, "network")) {
        params_.validate();
    }

    void set_trace(std::ostream* out, std::vector<Address> names) {
        trace_ = out;
        names_ = std::move(names);
    }

    const NetworkParams& params() const { return params_; }
    void set_gst(Time gst) { params_.gst = gst; }

    /// Returns false if the message was dropped.
    bool send(std::size_t from, std::size_t to, NetMessage msg, Time now) {
        if (from >= node_count_ || to >= node_count_) throw std::out_of_range("unknown node index");
        auto seq = queue_.next_seq();
        auto delay = sample_delay(now, params_, rng_);
        if (delay && now >= params_.gst && *delay > params_.delta)
            throw std::logic_error("post-GST delay exceeds delta");
        trace_send(now, seq, from, to, msg, delay);
        if (!delay) return false;
        queue_.push(SimEvent{now + *delay, seq, EventKind::Deliver, to, Delivery{from, std::move(msg)}});
        return true;
    }

    void schedule_timer(std::size_t node, TimerFire fire, Time at) {
        if (node >= node_count_) throw std::out_of_range("unknown node index");
        auto seq = queue_.next_seq();
        if (trace_) {
            nlohmann::json j{{"time", at},      {"seq", seq},   {"kind", "TIMER"},
                             {"from", name(node)}, {"to", name(node)}, {"msgKind", fire.kind == TimerKind::Round ? "ROUND" : "ADVANCE"},
                             {"dropped", false}};
            *trace_ << j.dump() << '\n';
        }
        queue_.push(SimEvent{at, seq, EventKind::Timer, node, fire});
    }

    EventQueue& queue() { return queue_; }
    const EventQueue& queue() const { return queue_; }
    std::size_t node_count() const { return node_count_; }

  private:
    std::string name(std::size_t i) const { return i < names_.size() ? names_[i].hex() : std::to_string(i); }

    void trace_send(Time now, std::uint64_t seq, std::size_t from, std::size_t to, const NetMessage& msg,
                    std::optional<Time> delay) {
        if (!trace_) return;
        nlohmann::json j{{"time", delay ? now + *delay : now},
                         {"seq", seq},
                         {"kind", "DELIVER"},
                         {"from", name(from)},
                         {"to", name(to)},
                         {"msgKind", message_kind(msg)},
                         {"dropped", !delay.has_value()}};
        *trace_ << j.dump() << '\n';
    }

    NetworkParams params_;
    std::size_t node_count_;
    Rng rng_;
    EventQueue queue_;
    std::ostream* trace_ = nullptr;
    std::vector<Address> names_;
};

} // namespace ledgersim::net
