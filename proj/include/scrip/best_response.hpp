#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "scrip/distribution.hpp"
#include "scrip/entropy.hpp"
#include "scrip/error.hpp"
#include "scrip/params.hpp"

namespace scrip {

// Single-agent infinite-horizon decision process against a mean-field
// population: everyone else holds tokens drawn from `steady` (base-unit
// levels) and volunteers below k_other. The agent's state is its own balance;
// the action each round is whether to volunteer. Solved by value iteration to
// a 1e-10 span seminorm; the result is the smallest optimal volunteering
// threshold in whole tokens.
//
// Per-round event probabilities (all relative to one posting opportunity per
// round and a per-round discount delta^(1/n)):
//   post     1/n, pay one token when able, collect the expected posting payoff
//   receive  someone else posts and picks us among eligible recipients
//   monitor  (if volunteering) selected among gamma(n-1)+1 expected volunteers;
//            costs alpha, pays the reward when the post is bad
//   pay      selected among eligible payers when a violation is detected
struct BestResponseResult {
    int threshold = 0;                 // smallest optimal k, whole tokens
    std::vector<double> value;         // V(h) over base-unit levels
    std::vector<char> volunteer;       // optimal action per level
    int64_t iterations = 0;
};

inline BestResponseResult best_response(int k_other, const GameParams& params,
                                        const DistributionVector& steady) {
    const int n = params.n();
    const long long unit = params.unit();
    const long long cap = params.cap_units();
    const long long reward = params.reward_units();
    const long long k_units = static_cast<long long>(k_other) * unit;
    const double viol = params.violation_prob().to_double();
    const bool strategic = params.strategic();
    const double monitored_share = strategic ? 1.0 - 1.0 / params.kappa() : 1.0;

    const size_t levels = static_cast<size_t>(cap);  // attainable: 0 .. cap-1
    auto mass = [&](long long lo, long long hi) {  // steady mass on [lo, hi)
        double m = 0;
        for (long long l = std::max(0LL, lo); l < hi && l < static_cast<long long>(steady.levels()); ++l)
            m += steady[static_cast<size_t>(l)];
        return m;
    };

    const double gamma = mass(0, k_units);  // volunteer fraction
    if (gamma <= 0.0) throw NoVolunteers("population never volunteers at this threshold");
    const double p_can_post = mass(unit, cap);
    const double p_recv_elig = mass(0, cap - unit);
    const double p_payer = mass(reward, cap);

    const double others = static_cast<double>(n - 1);
    const double p_vol_exists = 1.0 - std::pow(1.0 - gamma, others);
    const double p_rcpt_exists = 1.0 - std::pow(1.0 - p_recv_elig, others);
    const double expected_volunteers = gamma * others + 1.0;
    const double expected_recipients = std::max(1.0, p_recv_elig * (others - 1.0) + 1.0);
    const double expected_payers = std::max(1.0, p_payer * (others - 1.0) + 1.0);

    // Another agent posts and its post goes out (it must hold a token; in the
    // strategic setting unmonitored posts need no token).
    const double other_posts = (others / n) * p_can_post;

    const double p_receive_base =
        (others / n) * p_can_post * (strategic ? monitored_share * p_vol_exists : 1.0) / expected_recipients;
    const double p_monitor_base = other_posts * monitored_share / expected_volunteers;
    const double p_pay_base = other_posts * monitored_share * viol * p_vol_exists / expected_payers;

    // Expected posting payoff for the agent itself.
    const double detected = monitored_share * p_vol_exists;
    const double post_payoff = strategic
                                   ? (1.0 - viol) + viol * params.kappa() * (1.0 - detected)
                                   : (1.0 - viol) + viol * (1.0 - p_vol_exists);

    const double rho = std::pow(params.delta(), 1.0 / n);

    // Per state and action, the round resolves to (reward, weights on other
    // levels, weight back on h). Self-weight is folded into the update
    // (Jacobi-preconditioned value iteration: same fixed point, and the nearly
    // lazy per-round chain converges in thousands of sweeps instead of
    // millions).
    struct Branch {
        double reward = 0.0;
        double self_weight = 0.0;
        std::vector<std::pair<size_t, double>> moves;  // (target level, weight)
    };
    auto make_branch = [&](size_t h, bool volunteers_now) {
        Branch br;
        long long hu = static_cast<long long>(h);
        double stay = 1.0;
        auto land = [&](size_t target, double w) {
            if (target == h)
                br.self_weight += w;
            else
                br.moves.emplace_back(target, w);
        };
        if (hu >= unit) {
            double go = (1.0 / n) * (strategic ? 1.0 : p_rcpt_exists);
            stay -= go;
            if (strategic) {
                double paid = monitored_share * p_vol_exists * p_rcpt_exists;
                br.reward += go * post_payoff;
                land(h - static_cast<size_t>(unit), go * paid);
                land(h, go * (1.0 - paid));
            } else {
                br.reward += go * post_payoff;
                land(h - static_cast<size_t>(unit), go);
            }
        } else if (strategic) {
            // Tokenless strategic poster still posts when unmonitored.
            double go = (1.0 / n) * (1.0 - monitored_share);
            stay -= go;
            br.reward += go * ((1.0 - viol) + viol * params.kappa());
            land(h, go);
        }
        if (hu + unit < cap) {
            stay -= p_receive_base;
            land(h + static_cast<size_t>(unit), p_receive_base);
        }
        if (hu >= reward) {
            stay -= p_pay_base;
            land(h - static_cast<size_t>(reward), p_pay_base);
        }
        if (volunteers_now) {
            stay -= p_monitor_base;
            br.reward += p_monitor_base * -params.alpha();
            // Reward delivery is clipped to the attainable range, mirroring
            // the mechanism's treatment of an over-threshold volunteer.
            land(std::min(levels - 1, h + static_cast<size_t>(reward)), p_monitor_base * viol);
            land(h, p_monitor_base * (1.0 - viol));
        }
        land(h, stay);
        return br;
    };

    std::vector<Branch> branch_no, branch_vol;
    for (size_t h = 0; h < levels; ++h) {
        branch_no.push_back(make_branch(h, false));
        branch_vol.push_back(make_branch(h, true));
    }

    // The strategy space is threshold policies (volunteer iff own holdings are
    // below t whole tokens), matching the population's play. Each candidate is
    // policy-evaluated by value iteration to a 1e-10 span seminorm and scored
    // by the population-weighted value; ties break toward the smaller
    // threshold (less monitoring). The unconstrained pointwise-greedy policy
    // is not a threshold here: becoming reward-rich crosses into
    // payer eligibility, which dents the value function at that boundary.
    BestResponseResult res;
    const int max_threshold = static_cast<int>((cap + unit - 1) / unit);
    double best_score = -1e300;
    for (int t = 0; t <= max_threshold; ++t) {
        std::vector<double> v(levels, 0.0), nv(levels, 0.0);
        int64_t iters = 0;
        for (; iters < 10000000; ++iters) {
            for (size_t h = 0; h < levels; ++h) {
                const Branch& br =
                    static_cast<long long>(h) < static_cast<long long>(t) * unit ? branch_vol[h] : branch_no[h];
                double acc = br.reward;
                for (const auto& [target, w] : br.moves) acc += rho * w * v[target];
                nv[h] = acc / (1.0 - rho * br.self_weight);
            }
            double lo = 1e300, hi = -1e300;
            for (size_t h = 0; h < levels; ++h) {
                double d = nv[h] - v[h];
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
            v.swap(nv);
            if (hi - lo < 1e-10) break;
        }
        res.iterations += iters;
        double score = 0.0;
        for (size_t h = 0; h < levels; ++h) score += steady[h] * v[h];
        if (score > best_score + 1e-9) {
            best_score = score;
            res.threshold = t;
            res.value = v;
        }
    }
    res.volunteer.assign(levels, 0);
    for (size_t h = 0; h < levels; ++h)
        if (static_cast<long long>(h) < static_cast<long long>(res.threshold) * unit) res.volunteer[h] = 1;
    return res;
}

struct EquilibriumResult {
    int k_star = 0;
    DistributionVector steady;            // max-entropy state at k_star
    std::vector<std::pair<int, int>> trace;  // (k, BR(k)) pairs examined
};

// Scans k = 1.. upward for BR(k) = k, using the max-entropy distribution at
// the corresponding cap as the population state. Returns the trivial k* = 0
// (nobody monitors) when the best response to k = 1 already collapses to 0.
inline EquilibriumResult find_equilibrium_threshold(const GameParamsInput& base, int k_max = 32) {
    EquilibriumResult res;
    for (int k = 1; k <= k_max; ++k) {
        GameParamsInput raw = base;
        raw.k = k;
        GameParams p = validate_params(raw);
        double mean_units = static_cast<double>(p.total_units()) / p.n();
        if (mean_units > static_cast<double>(p.max_attainable_units()))
            throw InfeasibleMean("average holdings exceed the attainable range");
        DistributionVector steady = max_entropy_distribution(p.max_attainable_units(), mean_units);
        int br = best_response(k, p, steady).threshold;
        res.trace.emplace_back(k, br);
        if (br == k) {
            res.k_star = k;
            res.steady = std::move(steady);
            return res;
        }
        if (k == 1 && br < 1) {
            // Nobody monitoring is self-consistent: with threshold 0 there are
            // no volunteers, so no agent can gain by volunteering either.
            res.k_star = 0;
            return res;
        }
    }
    throw NoFixedPoint("no fixed point below k_max = " + std::to_string(k_max));
}

}  // namespace scrip
