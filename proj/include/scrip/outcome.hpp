#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scrip/ledger.hpp"

namespace scrip {

// Full record of one mechanism round. Utilities are sparse: only agents with
// nonzero realized utility appear (the poster when it earned something, the
// monitor's -alpha).
struct RoundOutcome {
    int64_t round = 0;
    AgentId poster = -1;
    bool posted = false;            // a submission actually went out this round
    bool poster_had_token = false;  // start-of-round balance covered the posting fee
    bool paid_token = false;        // the posting transfer happened
    bool monitored = false;    // strategic: the controller's coin; inadvertent: a monitor was drawn
    AgentId monitor = -1;      // -1 = nobody monitored
    bool violation = false;    // content was bad (drawn only when a submission exists)
    bool discarded = false;    // violation found by a monitor
    AgentId recipient = -1;
    std::vector<AgentId> payers;
    std::vector<std::pair<AgentId, double>> utilities;

    // Round could not run as specified.
    bool frozen = false;            // poster had a token but no recipient existed
    long long shortfall_units = 0;  // reward units that could not be collected

    double utility_of(AgentId a) const {
        for (const auto& [id, u] : utilities)
            if (id == a) return u;
        return 0.0;
    }
};

}  // namespace scrip
