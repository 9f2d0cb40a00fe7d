#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "scrip/mechanism.hpp"

namespace scrip {

enum class PopulationEventKind { Join, Leave, DetectedLeave, Rescale };

struct PopulationEvent {
    int64_t round = 0;
    PopulationEventKind kind = PopulationEventKind::Join;
    uint64_t agent = 0;  // stable external id
};

inline const char* to_string(PopulationEventKind k) {
    switch (k) {
        case PopulationEventKind::Join: return "join";
        case PopulationEventKind::Leave: return "leave";
        case PopulationEventKind::DetectedLeave: return "detected-leave";
        case PopulationEventKind::Rescale: return "rescale";
    }
    return "?";
}

// Open-system wrapper around the inadvertent mechanism. Agents carry stable
// external ids (the ledger's dense internal ids shuffle on removal). A join
// adds an agent with zero tokens; a leave removes the agent's tokens from
// circulation immediately but keeps a silent "ghost" in the poster and payer
// lotteries at its last balance - nobody knows the agent left until a draw
// expects an action from it. A ghost drawn as poster wastes the round; a
// ghost drawn as payer triggers a redraw. Both synthesize a DetectedLeave and
// purge the ghost.
class OpenSystem {
  public:
    OpenSystem(const GameParams& params, std::vector<long long> holdings_units)
        : params_(params), ledger_(params.unit(), params.cap_units(), std::move(holdings_units)) {
        if (params_.strategic()) throw RangeError("open-system runs support the inadvertent setting");
        ext_of_int_.resize(static_cast<size_t>(ledger_.n()));
        for (AgentId a = 0; a < ledger_.n(); ++a) {
            ext_of_int_[static_cast<size_t>(a)] = next_ext_id_;
            int_of_ext_[next_ext_id_++] = a;
        }
    }

    const TokenLedger& ledger() const { return ledger_; }
    const GameParams& params() const { return params_; }
    int population() const { return ledger_.n(); }
    size_t ghost_count() const { return ghosts_.size(); }
    const std::vector<PopulationEvent>& events() const { return events_; }
    long long detected_leaves() const { return detected_leaves_; }
    long long rescale_count() const { return rescale_count_; }

    double average_tokens() const {
        if (ledger_.n() == 0) throw ZeroAverage("no agents");
        return static_cast<double>(ledger_.total_units()) /
               (static_cast<double>(ledger_.n()) * params_.unit());
    }

    uint64_t external_id(AgentId a) const { return ext_of_int_[static_cast<size_t>(a)]; }

    long long holdings_of(uint64_t ext_id) const {
        auto it = int_of_ext_.find(ext_id);
        if (it == int_of_ext_.end()) throw UnknownAgent("no agent " + std::to_string(ext_id));
        return ledger_.holdings_units(it->second);
    }

    // New agent, zero tokens. Total in circulation is unchanged.
    uint64_t apply_join(int64_t round = 0) {
        AgentId a = ledger_.add_agent(0);
        uint64_t ext = next_ext_id_++;
        if (ext_of_int_.size() < static_cast<size_t>(ledger_.n())) ext_of_int_.resize(ledger_.n());
        ext_of_int_[static_cast<size_t>(a)] = ext;
        int_of_ext_[ext] = a;
        events_.push_back({round, PopulationEventKind::Join, ext});
        return ext;
    }

    // Departure: tokens leave circulation now; the ghost lingers in the
    // lotteries until detected.
    void apply_leave(uint64_t ext_id, int64_t round = 0) {
        auto it = int_of_ext_.find(ext_id);
        if (it == int_of_ext_.end()) throw UnknownAgent("no agent " + std::to_string(ext_id));
        AgentId a = it->second;
        ghosts_.push_back({ext_id, ledger_.holdings_units(a)});
        remove_internal(a);
        int_of_ext_.erase(it);
        events_.push_back({round, PopulationEventKind::Leave, ext_id});
    }

    // One inadvertent round over the live population plus ghosts.
    template <class R>
    RoundOutcome step(const ThresholdPolicy& policy, R& rng, int64_t round = 0) {
        RoundOutcome out;
        out.round = round;
        if (ledger_.n() == 0) return out;

        uint64_t lots = static_cast<uint64_t>(ledger_.n()) + ghosts_.size();
        uint64_t pick = rng.below(lots);
        if (pick >= static_cast<uint64_t>(ledger_.n())) {
            detect_ghost(pick - static_cast<uint64_t>(ledger_.n()), round);
            return out;  // round wasted on an absent poster
        }
        AgentId poster = static_cast<AgentId>(pick);
        out.poster = poster;
        out.poster_had_token = ledger_.holdings_units(poster) >= params_.unit();
        if (!out.poster_had_token) return out;

        out.violation = rng.bernoulli(params_.violation_prob());
        AgentId recipient = ledger_.draw_recipient(poster, rng);
        if (recipient == -1) {
            out.frozen = true;
            return out;
        }
        AgentId monitor = draw_monitor(ledger_, policy, poster, rng);

        ledger_.transfer(poster, recipient, params_.unit());
        out.recipient = recipient;
        out.paid_token = true;
        out.posted = true;
        out.monitor = monitor;
        out.monitored = monitor != -1;

        if (monitor != -1 && out.violation) {
            out.discarded = true;
            collect_reward_with_ghosts(monitor, rng, out, round);
        } else {
            out.utilities.emplace_back(poster, 1.0);
        }
        if (monitor != -1) out.utilities.emplace_back(monitor, -params_.alpha());
        return out;
    }

    // Multiplies every live balance by F = target / current average, rounds
    // half-to-even, clips anything at or above the cap (redistributing the
    // clipped units one at a time), then corrects by single units to land on
    // the rescaled total exactly.
    template <class R>
    void rescale(double target_avg_tokens, R& rng, int64_t round = 0) {
        if (ledger_.total_units() == 0) throw ZeroAverage("cannot rescale an empty economy");
        const int n = ledger_.n();
        const double factor = target_avg_tokens / average_tokens();
        long long target_total = llround_even(static_cast<double>(ledger_.total_units()) * factor);
        target_total = std::min(target_total, static_cast<long long>(n) * params_.max_attainable_units());

        std::vector<long long> scaled(static_cast<size_t>(n));
        long long excess = 0, sum = 0;
        for (AgentId a = 0; a < n; ++a) {
            long long v = llround_even(static_cast<double>(ledger_.holdings_units(a)) * factor);
            if (v > params_.max_attainable_units()) {
                excess += v - params_.max_attainable_units();
                v = params_.max_attainable_units();
            }
            scaled[static_cast<size_t>(a)] = v;
            sum += v;
        }
        // Redistribute clipped units one at a time to uniformly chosen agents
        // below the attainable maximum.
        while (excess > 0) {
            std::vector<AgentId> room;
            for (AgentId a = 0; a < n; ++a)
                if (scaled[static_cast<size_t>(a)] < params_.max_attainable_units()) room.push_back(a);
            if (room.empty()) break;
            AgentId a = room[static_cast<size_t>(rng.below(room.size()))];
            scaled[static_cast<size_t>(a)] += 1;
            sum += 1;
            excess -= 1;
        }
        // +-1 unit correction to hit the target total.
        while (sum != target_total) {
            long long dir = sum < target_total ? 1 : -1;
            std::vector<AgentId> pool;
            for (AgentId a = 0; a < n; ++a) {
                long long v = scaled[static_cast<size_t>(a)];
                if (dir > 0 ? v < params_.max_attainable_units() : v > 0) pool.push_back(a);
            }
            if (pool.empty()) break;
            AgentId a = pool[static_cast<size_t>(rng.below(pool.size()))];
            scaled[static_cast<size_t>(a)] += dir;
            sum += dir;
        }
        for (AgentId a = 0; a < n; ++a) ledger_.set_holdings(a, scaled[static_cast<size_t>(a)]);
        rescale_count_ += 1;
        events_.push_back({round, PopulationEventKind::Rescale, 0});
    }

    // Rescales when the live average has drifted more than `drift_fraction`
    // from the target. Returns true when a rescale ran.
    template <class R>
    bool maybe_rescale(double target_avg_tokens, double drift_fraction, R& rng, int64_t round = 0) {
        if (ledger_.n() == 0 || target_avg_tokens <= 0.0) return false;
        double avg = average_tokens();
        if (std::abs(avg - target_avg_tokens) / target_avg_tokens <= drift_fraction) return false;
        if (ledger_.total_units() == 0) return false;
        rescale(target_avg_tokens, rng, round);
        return true;
    }

  private:
    struct Ghost {
        uint64_t ext_id;
        long long last_units;
    };

    static long long llround_even(double x) {
        double r = std::nearbyint(x);  // default FE_TONEAREST rounds half to even
        return static_cast<long long>(r);
    }

    void remove_internal(AgentId a) {
        AgentId moved = ledger_.remove_agent(a);
        uint64_t moved_ext = ext_of_int_[static_cast<size_t>(moved)];
        if (moved != a) {
            ext_of_int_[static_cast<size_t>(a)] = moved_ext;
            int_of_ext_[moved_ext] = a;
        }
        ext_of_int_.pop_back();
    }

    void detect_ghost(size_t ghost_index, int64_t round) {
        events_.push_back({round, PopulationEventKind::DetectedLeave, ghosts_[ghost_index].ext_id});
        ghosts_[ghost_index] = ghosts_.back();
        ghosts_.pop_back();
        detected_leaves_ += 1;
    }

    // Reward collection where the single-payer lottery also contains ghosts
    // whose frozen balance qualified; drawing one reveals the departure and
    // the payer is redrawn.
    template <class R>
    void collect_reward_with_ghosts(AgentId monitor, R& rng, RoundOutcome& out, int64_t round) {
        if (params_.variant() == PaymentVariant::SinglePayer) {
            const long long reward = params_.reward_units();
            while (true) {
                long long live = ledger_.count_at_least(reward) -
                                 (ledger_.holdings_units(monitor) >= reward ? 1 : 0);
                long long ghostly = 0;
                for (const Ghost& g : ghosts_)
                    if (g.last_units >= reward) ++ghostly;
                if (live + ghostly == 0) break;
                uint64_t pick = rng.below(static_cast<uint64_t>(live + ghostly));
                if (pick < static_cast<uint64_t>(live)) {
                    AgentId payer = ledger_.draw_at_least(reward, monitor, rng);
                    long long delivered = detail::pay_monitor(ledger_, payer, monitor, reward, out);
                    out.shortfall_units += reward - delivered;
                    return;
                }
                // Locate and purge the picked ghost, then redraw.
                uint64_t skip = pick - static_cast<uint64_t>(live);
                for (size_t g = 0; g < ghosts_.size(); ++g) {
                    if (ghosts_[g].last_units < reward) continue;
                    if (skip == 0) {
                        detect_ghost(g, round);
                        break;
                    }
                    --skip;
                }
            }
        }
        detail::collect_reward(ledger_, params_, monitor, rng, out);
    }

    GameParams params_;
    TokenLedger ledger_;
    std::vector<uint64_t> ext_of_int_;
    std::unordered_map<uint64_t, AgentId> int_of_ext_;
    std::vector<Ghost> ghosts_;
    std::vector<PopulationEvent> events_;
    uint64_t next_ext_id_ = 0;
    long long detected_leaves_ = 0;
    long long rescale_count_ = 0;
};

}  // namespace scrip
