#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "scrip/dynamics.hpp"
#include "scrip/entropy.hpp"
#include "scrip/mechanism.hpp"

namespace scrip {

enum class InitKind { MaxEntropy, Extreme, Equal, Custom, Reference };

inline const char* to_string(InitKind k) {
    switch (k) {
        case InitKind::MaxEntropy: return "maxent";
        case InitKind::Extreme: return "extreme";
        case InitKind::Equal: return "equal";
        case InitKind::Custom: return "custom";
        case InitKind::Reference: return "reference";
    }
    return "?";
}

// Deterministic holdings for the requested shape, hitting the configured
// total exactly.
//
//   MaxEntropy  largest-remainder quantization of the max-entropy pmf with a
//               greedy minimum-distortion repair of the token sum
//   Extreme     agents hold 0 or k + 1/b - 1 tokens (one agent takes the
//               remainder)
//   Equal       total/n each, remainder spread by lot
namespace init {

// Largest-remainder quantization of an arbitrary level pmf, then a greedy
// minimum-distortion repair walking single agents between adjacent levels
// until the token sum is exact.
inline std::vector<long long> quantized_level_counts(const GameParams& p, const DistributionVector& me) {
    const int n = p.n();
    const size_t levels = me.levels();
    std::vector<long long> counts(levels, 0);
    std::vector<std::pair<double, size_t>> rem;
    long long placed = 0;
    for (size_t i = 0; i < levels; ++i) {
        counts[i] = static_cast<long long>(std::floor(me.p[i] * n));
        placed += counts[i];
        rem.emplace_back(me.p[i] * n - static_cast<double>(counts[i]), i);
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t j = 0; placed < n; ++j, ++placed) counts[rem[j].second] += 1;

    long long sum = 0;
    for (size_t i = 0; i < levels; ++i) sum += static_cast<long long>(i) * counts[i];
    auto distortion = [&](size_t i, long long delta) {
        double before = static_cast<double>(counts[i]) / n - me.p[i];
        double after = static_cast<double>(counts[i] + delta) / n - me.p[i];
        return after * after - before * before;
    };
    while (sum != p.total_units()) {
        long long dir = sum < p.total_units() ? 1 : -1;
        double best = 1e300;
        size_t pick = levels;
        for (size_t i = 0; i < levels; ++i) {
            size_t j = i + static_cast<size_t>(dir);
            if (j >= levels || counts[i] <= 0) continue;
            double d = distortion(i, -1) + distortion(j, +1);
            if (d < best) {
                best = d;
                pick = i;
            }
        }
        if (pick == levels) throw InfeasibleInit("cannot repair the token sum");
        counts[pick] -= 1;
        counts[pick + static_cast<size_t>(dir)] += 1;
        sum += dir;
    }
    return counts;
}

inline std::vector<long long> maxent_level_counts(const GameParams& p) {
    double mean_units = static_cast<double>(p.total_units()) / p.n();
    if (mean_units > static_cast<double>(p.max_attainable_units()))
        throw InfeasibleInit("average holdings exceed the attainable range");
    return quantized_level_counts(p, max_entropy_distribution(p.max_attainable_units(), mean_units));
}

inline std::vector<long long> counts_to_holdings(const GameParams& p,
                                                 const std::vector<long long>& counts) {
    std::vector<long long> h;
    h.reserve(static_cast<size_t>(p.n()));
    for (size_t level = 0; level < counts.size(); ++level)
        for (long long c = 0; c < counts[level]; ++c) h.push_back(static_cast<long long>(level));
    return h;
}

template <class R>
std::vector<long long> build(const GameParams& p, InitKind kind, R& rng,
                             const std::vector<long long>& custom_units = {},
                             const DistributionVector& target = {}) {
    const int n = p.n();
    std::vector<long long> h(static_cast<size_t>(n), 0);
    switch (kind) {
        case InitKind::MaxEntropy:
            return counts_to_holdings(p, maxent_level_counts(p));
        case InitKind::Reference: {
            // Start near a supplied distribution (an estimated steady state).
            // Entries are whole-token buckets; levels land on whole tokens.
            if (target.levels() == 0) throw InfeasibleInit("reference init needs a distribution");
            DistributionVector units(static_cast<size_t>(p.max_attainable_units()) + 1);
            for (size_t bucket = 0; bucket < target.levels(); ++bucket) {
                size_t level = bucket * static_cast<size_t>(p.unit());
                if (level >= units.levels()) level = units.levels() - 1;
                units.p[level] += target[bucket];
            }
            return counts_to_holdings(p, quantized_level_counts(p, units));
        }
        case InitKind::Extreme: {
            const long long hi = p.cap_units() - p.unit();  // k + 1/b - 1 tokens
            long long total = p.total_units();
            long long full = total / hi;
            long long rem = total - full * hi;
            if (full + (rem > 0 ? 1 : 0) > n) throw InfeasibleInit("extreme split cannot hit the total");
            for (long long i = 0; i < full; ++i) h[static_cast<size_t>(i)] = hi;
            if (rem > 0) h[static_cast<size_t>(full)] = rem;
            return h;
        }
        case InitKind::Equal: {
            long long base = p.total_units() / n;
            long long rem = p.total_units() % n;
            if (base > p.max_attainable_units() || (rem > 0 && base + 1 > p.max_attainable_units()))
                throw InfeasibleInit("equal split exceeds the attainable range");
            for (auto& x : h) x = base;
            // remainder by lot: draw distinct agents
            std::vector<char> picked(static_cast<size_t>(n), 0);
            for (long long given = 0; given < rem;) {
                auto a = static_cast<size_t>(rng.below(static_cast<uint64_t>(n)));
                if (picked[a]) continue;
                picked[a] = 1;
                h[a] += 1;
                ++given;
            }
            return h;
        }
        case InitKind::Custom: {
            if (static_cast<int>(custom_units.size()) != n)
                throw InfeasibleInit("custom holdings must cover every agent");
            long long sum = 0;
            for (long long x : custom_units) {
                if (x < 0 || x > p.cap_units()) throw InfeasibleInit("custom holding outside [0, cap]");
                sum += x;
            }
            if (sum != p.total_units()) throw InfeasibleInit("custom holdings do not match the total");
            return custom_units;
        }
    }
    throw InfeasibleInit("unknown init kind");
}

}  // namespace init

// Scheduled churn and rescaling for open-system runs.
struct RescaleConfig {
    bool enabled = false;
    double target_avg_tokens = 0.0;
    double drift_fraction = 0.25;
};

struct ChurnConfig {
    double join_rate = 0.0;   // per-round probability
    double leave_rate = 0.0;  // per-round probability of one (uniform) departure
};

struct Scenario {
    std::vector<PopulationEvent> events;  // Join/Leave only; sorted by round
    ChurnConfig churn;
    RescaleConfig rescale;

    bool empty() const {
        return events.empty() && churn.join_rate == 0.0 && churn.leave_rate == 0.0 && !rescale.enabled;
    }
};

struct SimSnapshot {
    int64_t round = 0;
    // Mean distribution over the window since the previous snapshot (the
    // round-0 snapshot is the exact initial distribution).
    DistributionVector histogram;

    // Cumulative counters up to `round`.
    int64_t frozen_rounds = 0;
    int64_t shortfall_events = 0;
    long long shortfall_units = 0;
    int64_t detected_leaves = 0;
    int64_t rescales = 0;
    int64_t submitted = 0;
    int64_t bad_submitted = 0;
    double cumulative_bad_fraction = 0.0;

    // Strategic controller, sampled at `round`.
    double monitor_prob = 1.0;
    double beta_hat = 0.0;
    int64_t monitored = 0;
    int64_t bad_found = 0;

    int64_t anomaly_total() const { return frozen_rounds + shortfall_events; }
};

struct Trajectory {
    GameParams params;
    int policy_k = 0;
    InitKind init = InitKind::MaxEntropy;
    uint64_t seed = 0;
    int64_t sample_every = 0;
    std::vector<SimSnapshot> snapshots;
    std::optional<DistributionVector> reference;

    const SimSnapshot& last() const { return snapshots.back(); }
};

struct RunOptions {
    InitKind init = InitKind::MaxEntropy;
    std::vector<long long> custom_units;
    DistributionVector init_target;  // InitKind::Reference
    int64_t rounds = 0;
    int64_t sample_every = 20000;
    uint64_t seed = 1;
    std::optional<Scenario> scenario;
    std::optional<DistributionVector> reference;
};

// Runs one trajectory: initialize holdings, iterate the round mechanism
// (through the open-system wrapper when a scenario is present), and record a
// snapshot every sample_every rounds.
inline Trajectory run(const GameParams& params, const ThresholdPolicy& policy, const RunOptions& opts) {
    if (opts.rounds < 0 || opts.sample_every < 1) throw RangeError("run needs rounds >= 0, sample_every >= 1");
    CounterRng root(opts.seed);
    CounterRng init_rng = root.fork(stream::kInit);

    Trajectory traj;
    traj.params = params;
    traj.policy_k = policy.k;
    traj.init = opts.init;
    traj.seed = opts.seed;
    traj.sample_every = opts.sample_every;
    traj.reference = opts.reference;

    const size_t buckets = static_cast<size_t>(params.cap_token_buckets());
    std::vector<long long> holdings =
        init::build(params, opts.init, init_rng, opts.custom_units, opts.init_target);

    const bool open = opts.scenario && !opts.scenario->empty();
    std::optional<OpenSystem> system;
    std::optional<TokenLedger> ledger;
    if (open)
        system.emplace(params, std::move(holdings));
    else
        ledger.emplace(params.unit(), params.cap_units(), std::move(holdings));

    ControllerState ctrl;
    SimSnapshot cum;  // running counters
    auto live_histogram = [&]() {
        return open ? system->ledger().token_histogram() : ledger->token_histogram();
    };

    auto snapshot = [&](int64_t round, const DistributionVector& hist) {
        SimSnapshot s = cum;
        s.round = round;
        s.histogram = hist;
        s.cumulative_bad_fraction =
            s.submitted > 0 ? static_cast<double>(s.bad_submitted) / static_cast<double>(s.submitted) : 0.0;
        if (params.strategic()) {
            s.monitor_prob = ctrl.current_monitor_prob;
            s.beta_hat = ctrl.beta_hat();
            s.monitored = ctrl.monitored_count;
            s.bad_found = ctrl.bad_found_count;
        }
        s.detected_leaves = open ? system->detected_leaves() : 0;
        s.rescales = open ? system->rescale_count() : 0;
        traj.snapshots.push_back(std::move(s));
    };
    snapshot(0, live_histogram());
    if (params.strategic()) traj.snapshots.back().monitor_prob = 1.0 - 1.0 / params.kappa();

    std::vector<double> window(buckets, 0.0);
    int64_t window_rounds = 0;
    size_t next_event = 0;
    RoundOutcome out;

    for (int64_t t = 0; t < opts.rounds; ++t) {
        if (open) {
            CounterRng churn_rng = root.fork(stream::kChurn, static_cast<uint64_t>(t));
            const Scenario& sc = *opts.scenario;
            while (next_event < sc.events.size() && sc.events[next_event].round <= t) {
                const PopulationEvent& ev = sc.events[next_event++];
                if (ev.kind == PopulationEventKind::Join)
                    system->apply_join(t);
                else if (ev.kind == PopulationEventKind::Leave)
                    system->apply_leave(ev.agent, t);
            }
            if (sc.churn.join_rate > 0 && churn_rng.bernoulli(sc.churn.join_rate)) system->apply_join(t);
            if (sc.churn.leave_rate > 0 && system->population() > 1 &&
                churn_rng.bernoulli(sc.churn.leave_rate)) {
                auto victim = static_cast<AgentId>(
                    churn_rng.below(static_cast<uint64_t>(system->population())));
                system->apply_leave(system->external_id(victim), t);
            }
            if (sc.rescale.enabled)
                system->maybe_rescale(sc.rescale.target_avg_tokens, sc.rescale.drift_fraction, churn_rng, t);
            if (system->population() == 0) break;  // everyone left; halt cleanly
        }

        CounterRng round_rng = root.fork(stream::kRound, static_cast<uint64_t>(t));
        if (open)
            out = system->step(policy, round_rng, t);
        else if (params.strategic())
            out = step_strategic(*ledger, params, policy, ctrl, round_rng, t);
        else
            out = step_inadvertent(*ledger, params, policy, round_rng, t);

        if (out.frozen) cum.frozen_rounds += 1;
        if (out.shortfall_units > 0) {
            cum.shortfall_events += 1;
            cum.shortfall_units += out.shortfall_units;
        }
        if (out.posted) {
            cum.submitted += 1;
            if (out.violation) cum.bad_submitted += 1;
        }

        if (open) {
            auto counts = system->ledger().token_bucket_counts();
            double inv = 1.0 / system->population();
            for (size_t i = 0; i < buckets && i < counts.size(); ++i) window[i] += counts[i] * inv;
        } else {
            auto counts = ledger->token_bucket_counts();
            double inv = 1.0 / params.n();
            for (size_t i = 0; i < buckets; ++i) window[i] += counts[i] * inv;
        }
        window_rounds += 1;

        if ((t + 1) % opts.sample_every == 0) {
            DistributionVector hist(buckets);
            for (size_t i = 0; i < buckets; ++i) hist.p[i] = window[i] / static_cast<double>(window_rounds);
            snapshot(t + 1, hist);
            std::fill(window.begin(), window.end(), 0.0);
            window_rounds = 0;
        }
    }
    return traj;
}

// Pointwise mean of several equally-sampled trajectories (the ensemble view
// used by the convergence experiments).
inline Trajectory ensemble_mean(const std::vector<Trajectory>& members) {
    if (members.empty()) throw RangeError("empty ensemble");
    Trajectory mean = members.front();
    for (size_t s = 0; s < mean.snapshots.size(); ++s) {
        auto& hist = mean.snapshots[s].histogram;
        for (size_t m = 1; m < members.size(); ++m) {
            if (members[m].snapshots.size() != mean.snapshots.size() ||
                members[m].snapshots[s].round != mean.snapshots[s].round)
                throw RangeError("ensemble members must share the sampling grid");
            const auto& other = members[m].snapshots[s].histogram;
            for (size_t i = 0; i < hist.levels(); ++i) hist.p[i] += other[i];
        }
        for (size_t i = 0; i < hist.levels(); ++i) hist.p[i] /= static_cast<double>(members.size());
    }
    return mean;
}

inline double max_excursion(const Trajectory& traj, const DistributionVector& reference) {
    double worst = 0.0;
    for (const auto& s : traj.snapshots)
        worst = std::max(worst, euclidean_distance(s.histogram, reference));
    return worst;
}

struct ConvergenceReport {
    int64_t round = 0;
    double rounds_per_agent = 0.0;
};

// First sampled round whose distance to the reference is <= tol and stays
// there for the next `confirm` samples. Needs dense sampling (at most n
// rounds apart) to resolve a transient that lasts a few rounds per agent.
inline ConvergenceReport convergence_time(const Trajectory& traj, const DistributionVector& reference,
                                          double tol, int confirm = 5) {
    if (traj.sample_every > traj.params.n())
        throw RangeError("convergence needs sample_every <= n");
    const auto& snaps = traj.snapshots;
    for (size_t i = 0; i < snaps.size(); ++i) {
        if (euclidean_distance(snaps[i].histogram, reference) > tol) continue;
        if (i + static_cast<size_t>(confirm) >= snaps.size()) break;
        bool ok = true;
        for (int w = 1; w <= confirm && ok; ++w)
            ok = euclidean_distance(snaps[i + static_cast<size_t>(w)].histogram, reference) <= tol;
        if (ok) {
            ConvergenceReport rep;
            rep.round = snaps[i].round;
            rep.rounds_per_agent = static_cast<double>(rep.round) / traj.params.n();
            return rep;
        }
    }
    throw NeverConverged("no sustained crossing below tol=" + std::to_string(tol));
}

// Sample mean of the window histograms after a burn-in share of the samples.
inline DistributionVector estimate_steady_state(const GameParams& params, const ThresholdPolicy& policy,
                                                int64_t steps, int64_t sample_every, uint64_t seed,
                                                double burn_in = 0.01, InitKind init = InitKind::MaxEntropy) {
    if (steps < 100 * sample_every) throw RangeError("need at least 100 samples for a steady-state estimate");
    RunOptions opts;
    opts.init = init;
    opts.rounds = steps;
    opts.sample_every = sample_every;
    opts.seed = seed;
    Trajectory traj = run(params, policy, opts);

    const size_t total = traj.snapshots.size() - 1;  // window samples (round-0 excluded)
    const size_t burn = static_cast<size_t>(std::ceil(static_cast<double>(total) * burn_in));
    DistributionVector mean(static_cast<size_t>(params.cap_token_buckets()));
    size_t used = 0;
    for (size_t i = 1 + burn; i < traj.snapshots.size(); ++i, ++used)
        for (size_t l = 0; l < mean.levels(); ++l) mean.p[l] += traj.snapshots[i].histogram[l];
    for (size_t l = 0; l < mean.levels(); ++l) mean.p[l] /= static_cast<double>(used);
    return mean;
}

struct StrategicReport {
    double tail_bad_fraction = 0.0;
    double tail_monitor_prob = 0.0;
};

// Tail (second half of the run) averages of the realized bad-post fraction
// and the controller's monitoring probability.
inline StrategicReport strategic_convergence_report(const Trajectory& traj) {
    if (!traj.params.strategic()) throw RangeError("strategic report needs a strategic trajectory");
    const auto& snaps = traj.snapshots;
    if (snaps.size() < 3) throw RangeError("trajectory too short for tail statistics");
    size_t mid = snaps.size() / 2;
    const SimSnapshot& half = snaps[mid];
    const SimSnapshot& end = snaps.back();
    StrategicReport rep;
    int64_t submitted = end.submitted - half.submitted;
    rep.tail_bad_fraction =
        submitted > 0 ? static_cast<double>(end.bad_submitted - half.bad_submitted) / submitted : 0.0;
    double acc = 0.0;
    size_t count = 0;
    for (size_t i = mid; i < snaps.size(); ++i, ++count) acc += snaps[i].monitor_prob;
    rep.tail_monitor_prob = acc / static_cast<double>(count);
    return rep;
}

// Max-entropy reference at the run's own density, on the attainable support.
inline DistributionVector maxent_reference(const GameParams& params) {
    DistributionVector units = max_entropy_distribution(
        params.max_attainable_units(), static_cast<double>(params.total_units()) / params.n());
    DistributionVector buckets(static_cast<size_t>(params.cap_token_buckets()));
    for (size_t l = 0; l < units.levels(); ++l)
        buckets.p[static_cast<size_t>(static_cast<long long>(l) / params.unit())] += units.p[l];
    return buckets;
}

}  // namespace scrip
