#pragma once

#include "ledgersim/consensus/messages.hpp"
#include "ledgersim/consensus/quorum.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

namespace ledgersim::consensus {

enum class Phase : std::uint8_t { AwaitingProposal = 0, Prepared = 1, Committed = 2, Finalized = 3 };

inline constexpr std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::AwaitingProposal: return "AWAITING_PROPOSAL";
    case Phase::Prepared: return "PREPARED";
    case Phase::Committed: return "COMMITTED";
    case Phase::Finalized: return "FINALIZED";
    }
    return "?";
}

struct StartHeight {
    std::uint64_t height = 0;
};

/// `generation` identifies which armed timer fired; superseded timers are
/// ignored.
struct TimerExpiry {
    std::uint64_t height = 0;
    std::uint64_t generation = 0;
};

using Input = std::variant<ConsensusMessage, TimerExpiry, StartHeight>;

inline constexpr std::string_view input_kind(const Input& in) {
    if (const auto* m = std::get_if<ConsensusMessage>(&in)) return to_string(m->kind);
    if (std::holds_alternative<TimerExpiry>(in)) return "TIMER";
    return "START_HEIGHT";
}

enum class Discard : std::uint8_t {
    InvalidProposer,
    DuplicateMessage,
    StaleRound,
    LockConflict,
    InvalidBlock,
    Malformed,
    NotValidator,
    WrongHeight,
    AfterFinality,
};

inline constexpr std::string_view to_string(Discard d) {
    switch (d) {
    case Discard::InvalidProposer: return "InvalidProposer";
    case Discard::DuplicateMessage: return "DuplicateMessage";
    case Discard::StaleRound: return "StaleRound";
    case Discard::LockConflict: return "LockConflict";
    case Discard::InvalidBlock: return "InvalidBlock";
    case Discard::Malformed: return "Malformed";
    case Discard::NotValidator: return "NotValidator";
    case Discard::WrongHeight: return "WrongHeight";
    case Discard::AfterFinality: return "AfterFinality";
    }
    return "?";
}

struct TimerRequest {
    std::uint64_t height = 0;
    std::uint64_t generation = 0;
    std::uint64_t deadline = 0;
};

struct StepResult {
    Phase phase_before = Phase::AwaitingProposal;
    Phase phase_after = Phase::AwaitingProposal;
    std::vector<ConsensusMessage> outbound;
    std::optional<Block> finalized;
    std::optional<TimerRequest> timer;
    std::vector<Discard> discards;
};

/// What the state machine needs from its node: block assembly, proposal
/// validation (execution + state root check) and signing.
class ProposalHost {
  public:
    virtual ~ProposalHost() = default;
    virtual Block build_proposal(std::uint64_t height, std::uint64_t round) = 0;
    virtual bool validate_proposal(const Block& block) = 0;
    virtual SignatureBytes sign(const Hash256& digest) = 0;
};

/// Read-only snapshot of the current round.
struct RoundState {
    std::uint64_t height = 0;
    std::uint64_t round = 0;
    Phase phase = Phase::AwaitingProposal;
    std::set<Address> prepares;
    std::vector<CommitSeal> commits;
    std::optional<Hash256> locked_hash;
    std::uint64_t timer_deadline = 0;
};

/// Round-based BFT state machine for one validator. It only sees inputs for
/// its current height; the owning node buffers future heights and handles
/// catch-up for past ones.
///
/// Locking: once a node sees a prepare quorum for a block it locks on that
/// block for the rest of the height, only prepares proposals with the same
/// hash, and re-proposes it when it becomes proposer. Commits are counted per
/// block hash across rounds, and a seal covers the round the block was first
/// proposed in, so a re-proposed block keeps its hash.
class IbftMachine {
  public:
    IbftMachine(ConsensusConfig config, Address self) : config_(std::move(config)), self_(self) {}

    StepResult step(const Input& input, std::uint64_t now, ProposalHost& host) {
        StepResult out;
        Ctx ctx{now, host, out};
        out.phase_before = phase_;
        std::visit(
            [&](const auto& in) {
                using T = std::decay_t<decltype(in)>;
                if constexpr (std::is_same_v<T, StartHeight>) start_height(ctx, in.height);
                else if constexpr (std::is_same_v<T, TimerExpiry>) on_timer(ctx, in);
                else on_message(ctx, in);
            },
            input);
        out.phase_after = phase_;
        for (auto d : out.discards) ++discard_counts_[d];
        return out;
    }

    RoundState state() const {
        RoundState s;
        s.height = height_;
        s.round = round_;
        s.phase = phase_;
        s.locked_hash = locked_hash_;
        s.timer_deadline = timer_deadline_;
        if (auto it = rounds_.find(round_); it != rounds_.end()) {
            for (const auto& [sender, hash] : it->second.prepares)
                if (!it->second.accepted || hash == it->second.proposal_hash) s.prepares.insert(sender);
        }
        std::optional<Hash256> focus = locked_hash_;
        if (!focus)
            if (auto it = rounds_.find(round_); it != rounds_.end() && it->second.accepted)
                focus = it->second.proposal_hash;
        if (focus)
            if (auto it = commits_.find(*focus); it != commits_.end())
                for (const auto& [sender, vote] : it->second) s.commits.push_back({sender, vote.signature});
        return s;
    }

    std::uint64_t height() const { return height_; }
    std::uint64_t round() const { return round_; }
    Phase phase() const { return phase_; }
    bool started() const { return started_; }
    const ConsensusConfig& config() const { return config_; }
    const Address& self() const { return self_; }
    const std::map<Discard, std::uint64_t>& discard_counts() const { return discard_counts_; }

  private:
    struct Ctx {
        std::uint64_t now;
        ProposalHost& host;
        StepResult& out;
    };

    struct RoundVotes {
        std::optional<Block> proposal;
        Hash256 proposal_hash;
        bool accepted = false;
        bool rejected = false;
        std::map<Address, Hash256> prepares;
    };

    struct CommitVote {
        std::uint64_t round = 0;
        SignatureBytes signature;
    };

    void start_height(Ctx& ctx, std::uint64_t h) {
        height_ = h;
        round_ = 0;
        rc_target_ = 0;
        started_ = true;
        rounds_.clear();
        commits_.clear();
        rc_highest_.clear();
        rc_hint_.clear();
        known_.clear();
        seen_.clear();
        locked_hash_.reset();
        locked_block_.reset();
        enter_round(ctx, 0);
    }

    void enter_round(Ctx& ctx, std::uint64_t r) {
        round_ = r;
        phase_ = Phase::AwaitingProposal;
        rc_target_ = std::max(rc_target_, r);
        arm_timer(ctx, config_.round_timeout(r));
        if (config_.proposer_for(height_, r) == self_) propose(ctx);
        else try_accept(ctx);
    }

    void arm_timer(Ctx& ctx, std::uint64_t duration) {
        ++timer_generation_;
        timer_deadline_ = ctx.now + duration;
        ctx.out.timer = TimerRequest{height_, timer_generation_, timer_deadline_};
    }

    ConsensusMessage make(Ctx& ctx, MessageKind kind, std::uint64_t round, const Hash256& hash) {
        ConsensusMessage m;
        m.kind = kind;
        m.height = height_;
        m.round = round;
        m.block_hash = hash;
        m.sender = self_;
        m.signature = ctx.host.sign(signing_digest(m));
        return m;
    }

    void propose(Ctx& ctx) {
        Block block;
        if (locked_block_) {
            block = *locked_block_;
        } else if (auto hinted = hinted_block()) {
            block = *hinted;
        } else {
            block = ctx.host.build_proposal(height_, round_);
        }
        auto hash = block_hash(block);
        auto msg = make(ctx, MessageKind::PrePrepare, round_, hash);
        msg.proposal = block;
        ctx.out.outbound.push_back(std::move(msg));
        seen_.insert({MessageKind::PrePrepare, round_, self_, hash});

        auto& votes = rounds_[round_];
        votes.proposal = std::move(block);
        votes.proposal_hash = hash;
        try_accept(ctx);
    }

    /// A block some peer reported as locked in its ROUND_CHANGE and that this
    /// node has already validated. Highest original round wins.
    std::optional<Block> hinted_block() const {
        const Block* best = nullptr;
        for (const auto& [sender, hash] : rc_hint_) {
            auto it = known_.find(hash);
            if (it == known_.end()) continue;
            const Block& b = it->second;
            if (!best || b.round > best->round || (b.round == best->round && hash < block_hash(*best))) best = &b;
        }
        if (!best) return std::nullopt;
        return *best;
    }

    void try_accept(Ctx& ctx) {
        auto& votes = rounds_[round_];
        if (!votes.proposal || votes.accepted || votes.rejected) return;
        const Block& b = *votes.proposal;
        const auto& hash = votes.proposal_hash;

        if (b.height != height_ || b.round > round_ || b.proposer != config_.proposer_for(height_, b.round)) {
            votes.rejected = true;
            ctx.out.discards.push_back(Discard::InvalidBlock);
            return;
        }
        if (locked_hash_ && *locked_hash_ != hash) {
            votes.rejected = true;
            ctx.out.discards.push_back(Discard::LockConflict);
            return;
        }
        if (!known_.contains(hash) && !ctx.host.validate_proposal(b)) {
            votes.rejected = true;
            ctx.out.discards.push_back(Discard::InvalidBlock);
            return;
        }
        votes.accepted = true;
        known_.emplace(hash, b);
        ctx.out.outbound.push_back(make(ctx, MessageKind::Prepare, round_, hash));
        votes.prepares[self_] = hash;
        check_prepared(ctx);
        check_commit(ctx, hash);
    }

    void check_prepared(Ctx& ctx) {
        auto& votes = rounds_[round_];
        if (!votes.accepted || phase_ != Phase::AwaitingProposal) return;
        auto count = std::count_if(votes.prepares.begin(), votes.prepares.end(),
                                   [&](const auto& kv) { return kv.second == votes.proposal_hash; });
        if (static_cast<std::size_t>(count) < config_.quorum()) return;

        phase_ = Phase::Prepared;
        if (!locked_hash_) {
            locked_hash_ = votes.proposal_hash;
            locked_block_ = votes.proposal;
        }
        const Block& b = *votes.proposal;
        auto commit = make(ctx, MessageKind::Commit, b.round, votes.proposal_hash);
        commits_[votes.proposal_hash].try_emplace(self_, CommitVote{b.round, commit.signature});
        ctx.out.outbound.push_back(std::move(commit));
        check_commit(ctx, votes.proposal_hash);
    }

    void check_commit(Ctx& ctx, const Hash256& hash) {
        if (phase_ == Phase::Finalized) return;
        auto votes_it = commits_.find(hash);
        if (votes_it == commits_.end()) return;
        const auto& votes = votes_it->second;

        auto known_it = known_.find(hash);
        if (known_it == known_.end()) {
            if (votes.size() >= config_.quorum() && phase_ < Phase::Committed) phase_ = Phase::Committed;
            return;
        }
        const Block& block = known_it->second;
        std::vector<CommitSeal> seals;
        for (const auto& v : config_.validators) {
            auto it = votes.find(v);
            if (it != votes.end() && it->second.round == block.round) seals.push_back({v, it->second.signature});
        }
        if (seals.size() < config_.quorum()) return;
        seals.resize(config_.quorum());

        phase_ = Phase::Finalized;
        ++timer_generation_;
        Block finalized = block;
        finalized.commit_seals = std::move(seals);
        ctx.out.finalized = std::move(finalized);
    }

    void on_message(Ctx& ctx, const ConsensusMessage& m) {
        if (!started_ || m.height != height_) return ctx.out.discards.push_back(Discard::WrongHeight);
        if (!config_.is_validator(m.sender)) return ctx.out.discards.push_back(Discard::NotValidator);
        if (phase_ == Phase::Finalized) return ctx.out.discards.push_back(Discard::AfterFinality);
        if (!seen_.insert({m.kind, m.round, m.sender, m.block_hash}).second)
            return ctx.out.discards.push_back(Discard::DuplicateMessage);

        switch (m.kind) {
        case MessageKind::PrePrepare: return on_pre_prepare(ctx, m);
        case MessageKind::Prepare: return on_prepare(ctx, m);
        case MessageKind::Commit: return on_commit(ctx, m);
        case MessageKind::RoundChange: return on_round_change(ctx, m);
        }
    }

    void on_pre_prepare(Ctx& ctx, const ConsensusMessage& m) {
        if (m.round < round_) return ctx.out.discards.push_back(Discard::StaleRound);
        if (m.sender != config_.proposer_for(height_, m.round))
            return ctx.out.discards.push_back(Discard::InvalidProposer);
        if (!m.proposal || block_hash(*m.proposal) != m.block_hash)
            return ctx.out.discards.push_back(Discard::Malformed);
        auto& votes = rounds_[m.round];
        if (votes.proposal) return ctx.out.discards.push_back(Discard::DuplicateMessage);
        votes.proposal = *m.proposal;
        votes.proposal_hash = m.block_hash;
        if (m.round == round_) try_accept(ctx);
    }

    void on_prepare(Ctx& ctx, const ConsensusMessage& m) {
        if (m.round < round_) return ctx.out.discards.push_back(Discard::StaleRound);
        auto& votes = rounds_[m.round];
        if (!votes.prepares.try_emplace(m.sender, m.block_hash).second)
            return ctx.out.discards.push_back(Discard::DuplicateMessage);
        if (m.round == round_) check_prepared(ctx);
    }

    void on_commit(Ctx& ctx, const ConsensusMessage& m) {
        auto& votes = commits_[m.block_hash];
        if (!votes.try_emplace(m.sender, CommitVote{m.round, m.signature}).second)
            return ctx.out.discards.push_back(Discard::DuplicateMessage);
        check_commit(ctx, m.block_hash);
    }

    void on_round_change(Ctx& ctx, const ConsensusMessage& m) {
        auto [it, inserted] = rc_highest_.try_emplace(m.sender, m.round);
        if (!inserted) {
            if (it->second >= m.round) return ctx.out.discards.push_back(Discard::StaleRound);
            it->second = m.round;
        }
        if (!m.block_hash.is_zero()) rc_hint_[m.sender] = m.block_hash;
        check_round_change(ctx);
    }

    void on_timer(Ctx& ctx, const TimerExpiry& t) {
        if (!started_ || t.height != height_ || t.generation != timer_generation_ || phase_ == Phase::Finalized)
            return;
        send_round_change(ctx, std::max(round_, rc_target_) + 1);
        check_round_change(ctx);
    }

    void send_round_change(Ctx& ctx, std::uint64_t target) {
        rc_target_ = target;
        auto& mine = rc_highest_[self_];
        mine = std::max(mine, target);
        ctx.out.outbound.push_back(make(ctx, MessageKind::RoundChange, target, locked_hash_.value_or(Hash256{})));
        seen_.insert({MessageKind::RoundChange, target, self_, locked_hash_.value_or(Hash256{})});
        arm_timer(ctx, config_.round_timeout(target));
    }

    std::vector<std::uint64_t> round_change_rounds() const {
        std::vector<std::uint64_t> rounds;
        for (const auto& [sender, r] : rc_highest_) rounds.push_back(r);
        std::sort(rounds.begin(), rounds.end(), std::greater<>{});
        return rounds;
    }

    void check_round_change(Ctx& ctx) {
        // F+1 validators ahead of us cannot all be faulty: follow them.
        auto rounds = round_change_rounds();
        auto floor = std::max(round_, rc_target_);
        auto weak = config_.f() + 1;
        if (rounds.size() >= weak && rounds[weak - 1] > floor) {
            send_round_change(ctx, rounds[weak - 1]);
            rounds = round_change_rounds();
        }
        auto q = config_.quorum();
        if (rounds.size() >= q && rounds[q - 1] > round_) enter_round(ctx, rounds[q - 1]);
    }

    ConsensusConfig config_;
    Address self_;

    std::uint64_t height_ = 0;
    std::uint64_t round_ = 0;
    Phase phase_ = Phase::AwaitingProposal;
    bool started_ = false;

    std::map<std::uint64_t, RoundVotes> rounds_;
    std::map<Hash256, std::map<Address, CommitVote>> commits_;
    std::map<Address, std::uint64_t> rc_highest_;
    std::map<Address, Hash256> rc_hint_;
    std::map<Hash256, Block> known_;
    std::set<std::tuple<MessageKind, std::uint64_t, Address, Hash256>> seen_;

    std::optional<Hash256> locked_hash_;
    std::optional<Block> locked_block_;
    std::uint64_t rc_target_ = 0;
    std::uint64_t timer_generation_ = 0;
    std::uint64_t timer_deadline_ = 0;
    std::map<Discard, std::uint64_t> discard_counts_;
};

} // namespace ledgersim::consensus
