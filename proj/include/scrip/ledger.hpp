#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "scrip/distribution.hpp"
#include "scrip/error.hpp"
#include "scrip/params.hpp"
#include "scrip/rng.hpp"

namespace scrip {

using AgentId = int32_t;

// Per-agent balances in integer base units, grouped by exact level so the
// mechanism can draw uniformly from pools like "holdings < k" or
// "holdings >= reward" in O(levels) without scanning agents. The grouped index
// is what keeps 1e8-round runs cheap.
//
// Invariants: every balance stays in [0, cap_units]; the tracked total changes
// only through mint/burn (population churn and rescaling), never through
// transfer.
class TokenLedger {
  public:
    TokenLedger(long long unit, long long cap_units, std::vector<long long> holdings)
        : unit_(unit), cap_units_(cap_units), holdings_(std::move(holdings)) {
        levels_.resize(static_cast<size_t>(cap_units_) + 1);
        pos_.resize(holdings_.size());
        for (AgentId a = 0; a < static_cast<AgentId>(holdings_.size()); ++a) {
            long long h = holdings_[a];
            if (h < 0 || h > cap_units_) throw RangeError("initial holding outside [0, cap]");
            total_ += h;
            pos_[a] = static_cast<int32_t>(levels_[h].size());
            levels_[h].push_back(a);
        }
    }

    static TokenLedger from_params(const GameParams& p, std::vector<long long> holdings_units) {
        return TokenLedger(p.unit(), p.cap_units(), std::move(holdings_units));
    }

    int n() const { return static_cast<int>(holdings_.size()); }
    long long unit() const { return unit_; }
    long long cap_units() const { return cap_units_; }
    long long total_units() const { return total_; }
    long long holdings_units(AgentId a) const { return holdings_[a]; }
    const std::vector<long long>& holdings() const { return holdings_; }

    // Eligible to receive the posting token: one more token keeps the agent
    // strictly below the cap. Holdings therefore never reach cap_units in
    // play, which is what makes the reward payment exactly reversible (a
    // payer always lands back below the volunteering threshold).
    bool recipient_eligible(AgentId a) const { return holdings_[a] + unit_ < cap_units_; }

    void transfer(AgentId from, AgentId to, long long amount_units) {
        if (from == to) throw RangeError("self transfer");
        remove_units(from, amount_units);
        add_units(to, amount_units);
    }

    void add_units(AgentId a, long long amount) {
        long long h = holdings_[a] + amount;
        if (h > cap_units_) throw RangeError("transfer would exceed the holdings cap");
        move_level(a, h);
        total_ += amount;
    }

    void remove_units(AgentId a, long long amount) {
        long long h = holdings_[a] - amount;
        if (h < 0) throw RangeError("transfer would overdraw an agent");
        move_level(a, h);
        total_ -= amount;
    }

    // Sets a balance directly (rescaling); total is adjusted accordingly.
    void set_holdings(AgentId a, long long units) {
        if (units < 0 || units > cap_units_) throw RangeError("holding outside [0, cap]");
        total_ += units - holdings_[a];
        move_level(a, units);
    }

    AgentId add_agent(long long units) {
        if (units < 0 || units > cap_units_) throw RangeError("holding outside [0, cap]");
        AgentId a = static_cast<AgentId>(holdings_.size());
        holdings_.push_back(units);
        pos_.push_back(static_cast<int32_t>(levels_[units].size()));
        levels_[units].push_back(a);
        total_ += units;
        return a;
    }

    // Swap-removes agent `a`; the previously-last agent takes over id `a`.
    // Returns the id that moved (== a when a was last). Callers that expose
    // stable ids keep their own remap table.
    AgentId remove_agent(AgentId a) {
        AgentId last = static_cast<AgentId>(holdings_.size()) - 1;
        total_ -= holdings_[a];
        detach(a);
        if (a != last) {
            long long h = holdings_[last];
            detach(last);
            holdings_[a] = h;
            pos_[a] = static_cast<int32_t>(levels_[h].size());
            levels_[h].push_back(a);
        }
        holdings_.pop_back();
        pos_.pop_back();
        return last;
    }

    long long count_below(long long level_units) const {
        long long c = 0;
        long long cap = std::min(level_units, cap_units_ + 1);
        for (long long l = 0; l < cap; ++l) c += static_cast<long long>(levels_[l].size());
        return c;
    }

    long long count_at_least(long long level_units) const {
        return n() - count_below(level_units);
    }

    long long count_recipient_eligible() const { return count_below(cap_units_ - unit_); }

    // Uniform draw from {a != exclude : holdings < level_units}; -1 when empty.
    template <class R>
    AgentId draw_below(long long level_units, AgentId exclude, R& rng) const {
        long long pool = count_below(level_units);
        long long usable = pool - (exclude >= 0 && holdings_[exclude] < level_units ? 1 : 0);
        if (usable <= 0) return -1;
        while (true) {
            AgentId a = locate_below(rng.below(static_cast<uint64_t>(pool)), level_units);
            if (a != exclude) return a;
        }
    }

    template <class R>
    AgentId draw_at_least(long long level_units, AgentId exclude, R& rng) const {
        long long pool = count_at_least(level_units);
        long long usable = pool - (exclude >= 0 && holdings_[exclude] >= level_units ? 1 : 0);
        if (usable <= 0) return -1;
        while (true) {
            AgentId a = locate_at_least(rng.below(static_cast<uint64_t>(pool)), level_units);
            if (a != exclude) return a;
        }
    }

    template <class R>
    AgentId draw_recipient(AgentId exclude, R& rng) const {
        return draw_below(cap_units_ - unit_, exclude, rng);
    }

    // Counts of agents per whole-token bucket (fractional levels floor to
    // their token).
    std::vector<long long> token_bucket_counts() const {
        std::vector<long long> counts(static_cast<size_t>(cap_units_ / unit_) + 1, 0);
        for (long long l = 0; l <= cap_units_; ++l)
            counts[static_cast<size_t>(l / unit_)] += static_cast<long long>(levels_[l].size());
        return counts;
    }

    DistributionVector token_histogram() const {
        auto counts = token_bucket_counts();
        DistributionVector d(counts.size());
        for (size_t i = 0; i < counts.size(); ++i)
            d.p[i] = static_cast<double>(counts[i]) / static_cast<double>(n());
        return d;
    }

  private:
    void detach(AgentId a) {
        auto& bucket = levels_[holdings_[a]];
        int32_t idx = pos_[a];
        AgentId moved = bucket.back();
        bucket[idx] = moved;
        pos_[moved] = idx;
        bucket.pop_back();
    }

    void move_level(AgentId a, long long new_units) {
        detach(a);
        holdings_[a] = new_units;
        pos_[a] = static_cast<int32_t>(levels_[new_units].size());
        levels_[new_units].push_back(a);
    }

    AgentId locate_below(uint64_t idx, long long level_units) const {
        for (long long l = 0; l < level_units; ++l) {
            uint64_t sz = levels_[l].size();
            if (idx < sz) return levels_[l][idx];
            idx -= sz;
        }
        throw Error("ledger bucket index out of range");
    }

    AgentId locate_at_least(uint64_t idx, long long level_units) const {
        for (long long l = level_units; l <= cap_units_; ++l) {
            uint64_t sz = levels_[l].size();
            if (idx < sz) return levels_[l][idx];
            idx -= sz;
        }
        throw Error("ledger bucket index out of range");
    }

    long long unit_;
    long long cap_units_;
    long long total_ = 0;
    std::vector<long long> holdings_;
    std::vector<std::vector<AgentId>> levels_;
    std::vector<int32_t> pos_;
};

}  // namespace scrip
