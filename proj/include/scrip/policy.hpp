#pragma once

#include <optional>
#include <unordered_map>

#include "scrip/ledger.hpp"

namespace scrip {

// Volunteer-to-monitor rule: an agent volunteers iff it holds fewer than k
// whole tokens. The override tables exist for deviation experiments: a single
// agent may use a different threshold, or (strategic setting) a different
// bad-post probability.
struct ThresholdPolicy {
    int k = 0;
    std::unordered_map<AgentId, int> threshold_override;
    std::unordered_map<AgentId, double> bad_prob_override;
    // Applies to every agent; used by controlled experiments that force the
    // population's play away from the equilibrium strategy.
    std::optional<double> bad_prob_all;

    ThresholdPolicy() = default;
    explicit ThresholdPolicy(int threshold) : k(threshold) {}

    int threshold_for(AgentId a) const {
        auto it = threshold_override.find(a);
        return it == threshold_override.end() ? k : it->second;
    }

    bool has_overrides() const { return !threshold_override.empty(); }

    bool volunteers(AgentId a, long long holdings_units, long long unit) const {
        return holdings_units < static_cast<long long>(threshold_for(a)) * unit;
    }

    std::optional<double> bad_prob_for(AgentId a) const {
        auto it = bad_prob_override.find(a);
        if (it != bad_prob_override.end()) return it->second;
        return bad_prob_all;
    }
};

}  // namespace scrip
