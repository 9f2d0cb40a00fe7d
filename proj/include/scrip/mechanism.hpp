#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "scrip/ledger.hpp"
#include "scrip/outcome.hpp"
#include "scrip/params.hpp"
#include "scrip/policy.hpp"
#include "scrip/rng.hpp"

namespace scrip {

namespace stream {
// Fork tags for the per-run counter stream.
inline constexpr uint64_t kInit = 1;
inline constexpr uint64_t kRound = 2;
inline constexpr uint64_t kChurn = 3;
}  // namespace stream

// Volunteer pools are evaluated on start-of-round holdings and always exclude
// the poster. The common case (no per-agent overrides) is a single grouped
// draw; deviation experiments go through the membership-delta path.
template <class R>
AgentId draw_monitor(const TokenLedger& ledger, const ThresholdPolicy& policy, AgentId poster, R& rng) {
    const long long k_units = static_cast<long long>(policy.k) * ledger.unit();
    if (!policy.has_overrides()) return ledger.draw_below(k_units, poster, rng);

    std::vector<AgentId> added, removed;
    for (const auto& [a, kth] : policy.threshold_override) {
        if (a == poster) continue;
        bool standard = ledger.holdings_units(a) < k_units;
        bool volunteers = ledger.holdings_units(a) < static_cast<long long>(kth) * ledger.unit();
        if (volunteers && !standard) added.push_back(a);
        if (!volunteers && standard) removed.push_back(a);
    }
    // Overrides that do not change membership this round must not perturb the
    // draw stream: paired runs with common random numbers stay aligned.
    if (added.empty() && removed.empty()) return ledger.draw_below(k_units, poster, rng);
    std::sort(added.begin(), added.end());

    long long pool = ledger.count_below(k_units);
    long long in_pool_exclusions = (poster >= 0 && ledger.holdings_units(poster) < k_units ? 1 : 0) +
                                   static_cast<long long>(removed.size());
    long long usable = pool - in_pool_exclusions + static_cast<long long>(added.size());
    if (usable <= 0) return -1;
    uint64_t idx = rng.below(static_cast<uint64_t>(usable));
    if (idx < added.size()) return added[idx];
    while (true) {
        AgentId a = ledger.draw_below(k_units, poster, rng);
        if (a == -1) return -1;
        if (std::find(removed.begin(), removed.end(), a) == removed.end()) return a;
    }
}

namespace detail {

// Moves `amount` from payer to monitor, clipped to the monitor's remaining
// cap room (only reachable with fractional rewards). Returns units delivered.
inline long long pay_monitor(TokenLedger& ledger, AgentId payer, AgentId monitor, long long amount,
                             RoundOutcome& out) {
    long long room = ledger.cap_units() - ledger.holdings_units(monitor);
    long long deliver = std::min(amount, room);
    if (deliver <= 0) return 0;
    ledger.transfer(payer, monitor, deliver);
    out.payers.push_back(payer);
    return deliver;
}

// One pass of distinct single-token payers (everyone eligible when fewer than
// `want` exist). Returns units delivered to the monitor.
template <class R>
long long split_collect(TokenLedger& ledger, const GameParams& params, AgentId monitor, long long want,
                        R& rng, RoundOutcome& out) {
    const long long unit = params.unit();
    long long eligible = ledger.count_at_least(unit) - (ledger.holdings_units(monitor) >= unit ? 1 : 0);
    long long take = std::min(want, eligible);
    if (take <= 0) return 0;
    std::vector<AgentId> chosen;
    chosen.reserve(static_cast<size_t>(take));
    if (take == eligible) {
        for (AgentId a = 0; a < ledger.n(); ++a)
            if (a != monitor && ledger.holdings_units(a) >= unit) chosen.push_back(a);
    } else {
        std::vector<char> picked(static_cast<size_t>(ledger.n()), 0);
        while (static_cast<long long>(chosen.size()) < take) {
            AgentId a = ledger.draw_at_least(unit, monitor, rng);
            if (!picked[static_cast<size_t>(a)]) {
                picked[static_cast<size_t>(a)] = 1;
                chosen.push_back(a);
            }
        }
    }
    long long delivered = 0;
    for (AgentId a : chosen) delivered += pay_monitor(ledger, a, monitor, unit, out);
    return delivered;
}

// Pays the detection reward per the configured variant. Single payer: one
// agent holding the full reward; when none exists, fall back to a split-style
// collection and then keep collecting single tokens while anyone can pay.
// Uncollectable units are recorded as a shortfall on the outcome.
template <class R>
void collect_reward(TokenLedger& ledger, const GameParams& params, AgentId monitor, R& rng,
                    RoundOutcome& out) {
    const long long unit = params.unit();
    const long long reward = params.reward_units();

    if (params.variant() == PaymentVariant::SinglePayer) {
        AgentId payer = ledger.draw_at_least(reward, monitor, rng);
        if (payer != -1) {
            long long delivered = pay_monitor(ledger, payer, monitor, reward, out);
            out.shortfall_units += reward - delivered;
            return;
        }
        long long remaining = reward;
        remaining -= split_collect(ledger, params, monitor, remaining / unit, rng, out);
        while (remaining >= unit && ledger.cap_units() - ledger.holdings_units(monitor) >= unit) {
            AgentId p = ledger.draw_at_least(unit, monitor, rng);
            if (p == -1) break;
            remaining -= pay_monitor(ledger, p, monitor, unit, out);
        }
        if (remaining > 0 && remaining < unit &&
            ledger.cap_units() - ledger.holdings_units(monitor) >= remaining) {
            AgentId p = ledger.draw_at_least(remaining, monitor, rng);
            if (p != -1) remaining -= pay_monitor(ledger, p, monitor, remaining, out);
        }
        out.shortfall_units += remaining;
        return;
    }

    long long want = params.split_payer_count();
    long long delivered = split_collect(ledger, params, monitor, want, rng, out);
    out.shortfall_units += want * unit - delivered;
}

}  // namespace detail

// One round of the inadvertent game. Draw order on the supplied stream:
// poster, violation flag, recipient, monitor, payment draws.
//
//   1. poster uniform over all agents; a poster without a whole token ends
//      the round (nothing posted, all utilities zero)
//   2. content is bad with exact probability b
//   3. poster pays one token to a uniform recipient (not the poster) with cap
//      room, before monitoring and regardless of what monitoring finds; a
//      round with no eligible recipient freezes (no transfer, no post)
//   4. volunteers (holdings below threshold, poster excluded) are read from
//      start-of-round balances; one becomes the monitor
//   5. a detected violation discards the post and the monitor collects the
//      reward per the payment variant
//   6. utilities: poster 1 unless a monitor saw a bad post, monitor -alpha
template <class R>
RoundOutcome step_inadvertent(TokenLedger& ledger, const GameParams& params,
                              const ThresholdPolicy& policy, R& rng, int64_t round = 0) {
    RoundOutcome out;
    out.round = round;
    out.poster = static_cast<AgentId>(rng.below(static_cast<uint64_t>(ledger.n())));
    out.poster_had_token = ledger.holdings_units(out.poster) >= params.unit();
    if (!out.poster_had_token) return out;

    out.violation = rng.bernoulli(params.violation_prob());

    AgentId recipient = ledger.draw_recipient(out.poster, rng);
    if (recipient == -1) {
        out.frozen = true;
        return out;
    }
    AgentId monitor = draw_monitor(ledger, policy, out.poster, rng);

    ledger.transfer(out.poster, recipient, params.unit());
    out.recipient = recipient;
    out.paid_token = true;
    out.posted = true;
    out.monitor = monitor;
    out.monitored = monitor != -1;

    if (monitor != -1 && out.violation) {
        out.discarded = true;
        detail::collect_reward(ledger, params, monitor, rng, out);
    } else {
        out.utilities.emplace_back(out.poster, 1.0);
    }
    if (monitor != -1) out.utilities.emplace_back(monitor, -params.alpha());
    return out;
}

// Running tally the monitoring controller keeps in the strategic setting.
// beta_hat counts only postings actually inspected by a monitor.
struct ControllerState {
    int64_t rounds_elapsed = 0;
    int64_t monitored_count = 0;
    int64_t bad_found_count = 0;
    int64_t warmup_rounds = 1000;
    double current_monitor_prob = 0.0;

    double beta_hat() const {
        return monitored_count > 0 ? static_cast<double>(bad_found_count) / static_cast<double>(monitored_count)
                                   : 0.0;
    }
};

// Probability the controller monitors the next posting. During warmup, and
// whenever the observed bad fraction sits within two standard deviations of
// the target, this is 1 - 1/kappa; otherwise 1 - beta*/(beta_hat * kappa),
// clamped to [0, 1] (the raw expression goes negative once beta_hat drops
// below beta*/kappa).
inline double monitor_prob(const ControllerState& ctrl, const GameParams& params) {
    const double base = 1.0 - 1.0 / params.kappa();
    if (ctrl.rounds_elapsed < ctrl.warmup_rounds || ctrl.monitored_count == 0) return base;
    const double target = params.violation_prob().to_double();
    const double observed = ctrl.beta_hat();
    const double sigma = std::sqrt(target * (1.0 - target) / static_cast<double>(ctrl.monitored_count));
    if (std::abs(observed - target) <= 2.0 * sigma) return base;
    if (observed <= 0.0) return 0.0;
    return std::clamp(1.0 - target / (observed * params.kappa()), 0.0, 1.0);
}

// One round of the strategic game. Draw order: poster, violation flag,
// monitoring coin, monitor, recipient, payment draws.
//
// The monitoring decision comes after the content is fixed. Unmonitored
// submissions always go out (no token changes hands). Monitored rounds
// require the poster to hold a token; the token is paid only when somebody
// volunteers, and a detected violation pays the monitor 1/beta* per the
// payment variant.
template <class R>
RoundOutcome step_strategic(TokenLedger& ledger, const GameParams& params,
                            const ThresholdPolicy& policy, ControllerState& ctrl, R& rng,
                            int64_t round = 0) {
    RoundOutcome out;
    out.round = round;
    out.poster = static_cast<AgentId>(rng.below(static_cast<uint64_t>(ledger.n())));
    out.poster_had_token = ledger.holdings_units(out.poster) >= params.unit();

    auto play = policy.bad_prob_for(out.poster);
    out.violation = play ? rng.bernoulli(*play) : rng.bernoulli(params.violation_prob());

    const double mp = monitor_prob(ctrl, params);
    ctrl.current_monitor_prob = mp;
    out.monitored = rng.bernoulli(mp);
    ctrl.rounds_elapsed += 1;

    if (!out.monitored) {
        out.posted = true;
        out.utilities.emplace_back(out.poster, out.violation ? params.kappa() : 1.0);
        return out;
    }
    if (!out.poster_had_token) return out;  // cannot pay, no post

    AgentId monitor = draw_monitor(ledger, policy, out.poster, rng);
    if (monitor == -1) {
        // Nobody volunteered: the post goes out uninspected and unpaid.
        out.posted = true;
        out.utilities.emplace_back(out.poster, out.violation ? params.kappa() : 1.0);
        return out;
    }

    AgentId recipient = ledger.draw_recipient(out.poster, rng);
    if (recipient == -1) {
        out.frozen = true;
        return out;
    }
    ledger.transfer(out.poster, recipient, params.unit());
    out.recipient = recipient;
    out.paid_token = true;
    out.posted = true;
    out.monitor = monitor;
    ctrl.monitored_count += 1;

    if (out.violation) {
        out.discarded = true;
        ctrl.bad_found_count += 1;
        detail::collect_reward(ledger, params, monitor, rng, out);
    } else {
        out.utilities.emplace_back(out.poster, 1.0);
    }
    out.utilities.emplace_back(monitor, -params.alpha());
    return out;
}

// Expected single-round poster payoff when posts are bad with probability
// p_bad and monitored with probability monitor_prob (a volunteer present with
// probability p_volunteer). At monitor_prob = 1 - 1/kappa and p_volunteer = 1
// this is 1 for every p_bad.
inline double expected_poster_payoff(double p_bad, double kappa, double monitor_probability,
                                     double p_volunteer = 1.0) {
    return (1.0 - p_bad) + p_bad * kappa * (1.0 - monitor_probability * p_volunteer);
}

struct DeviationResult {
    double deviation_utility = 0.0;  // deviant's discounted utility under its deviation
    double conform_utility = 0.0;    // same seed, deviant conforming
};

// Paired runs with common random numbers: the two simulations share the seed
// (and therefore the per-round streams), differing only in the deviant's
// threshold. Utilities are discounted at delta^(t/n).
inline DeviationResult deviation_run(const TokenLedger& initial, const GameParams& params,
                                     const ThresholdPolicy& policy, AgentId deviant,
                                     int deviant_threshold, int64_t horizon, uint64_t seed) {
    if (std::pow(params.delta(), static_cast<double>(horizon) / params.n()) > 1e-6)
        throw RangeError("horizon too short: discount factor has not decayed below 1e-6");

    auto run = [&](const ThresholdPolicy& pol) {
        TokenLedger ledger = initial;
        CounterRng root(seed);
        ControllerState ctrl;
        const double log_delta_over_n = std::log(params.delta()) / params.n();
        double total = 0.0;
        for (int64_t t = 0; t < horizon; ++t) {
            CounterRng round_rng = root.fork(stream::kRound, static_cast<uint64_t>(t));
            RoundOutcome out = params.strategic()
                                   ? step_strategic(ledger, params, pol, ctrl, round_rng, t)
                                   : step_inadvertent(ledger, params, pol, round_rng, t);
            double u = out.utility_of(deviant);
            if (u != 0.0) total += std::exp(static_cast<double>(t) * log_delta_over_n) * u;
        }
        return total;
    };

    ThresholdPolicy deviating = policy;
    deviating.threshold_override[deviant] = deviant_threshold;
    return DeviationResult{run(deviating), run(policy)};
}

}  // namespace scrip
